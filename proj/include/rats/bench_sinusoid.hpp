#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rats/acquisition.hpp"
#include "rats/nnet.hpp"
#include "rats/task_space.hpp"

namespace rats {

// y = amplitude * sin(x - phase); identifiers live in [0.1,5.0] x [0,pi].
struct SinusoidTask {
    double amplitude = 1.0;
    double phase = 0.0;
};

TaskSpace sinusoid_space();
SinusoidTask sinusoid_from_id(const TaskId& id);

struct ShotSet {
    Vec x;
    Vec y;
};

// k points with x uniform in [-5,5], noiseless targets.
ShotSet sample_shots(const SinusoidTask& task, int k, Rng& rng);

struct MamlLearner {
    DenseNet net;  // 1 -> 40 -> 40 -> 1, relu hiddens
    double inner_lr = 1e-3;
    double outer_lr = 1e-3;
    AdamState outer_adam;
};

MamlLearner make_maml_learner(double inner_lr, double outer_lr, Rng& rng);

double mse(const DenseNet& net, const ShotSet& data);
Gradient mse_gradient(const DenseNet& net, const ShotSet& data);

// Full-batch gradient steps on the support set; meta-parameters untouched.
DenseNet adapt(const MamlLearner& learner, const ShotSet& support, int inner_steps);

// Query-set MSE after adapting on the support set; the scalar risk fed to the
// history batch and to CVaR evaluation.
double adaptation_risk_on(const MamlLearner& learner, const ShotSet& support, const ShotSet& query,
                          int inner_steps);
double adaptation_risk(const MamlLearner& learner, const SinusoidTask& task, int k_support,
                       int n_query, int inner_steps, Rng& rng);

struct TaskData {
    ShotSet support;
    ShotSet query;
};

// First-order meta-gradient: the query-loss gradient at the adapted
// parameters, weighted across tasks. Uniform weights recover the (1/B) sum.
Gradient meta_gradient(const MamlLearner& learner, const std::vector<TaskData>& tasks,
                       const std::vector<double>& weights, int inner_steps);

// Samples shots for every task, applies the weighted first-order meta update
// through the outer Adam state, and reports the per-task query risks.
std::vector<double> meta_step(MamlLearner& learner, const std::vector<SinusoidTask>& tasks,
                              const std::vector<double>& weights, int k_support, int n_query,
                              int inner_steps, Rng& rng);

struct SinusoidExperimentConfig {
    AcquisitionConfig acquisition;
    int iterations = 2000;
    int k_support = 10;
    int n_query = 10;
    int inner_steps = 1;
    double inner_lr = 1e-3;
    double outer_lr = 1e-3;
    int fit_steps = 8;
    double risk_lr = 5e-4;
    int latent_dim = 10;
    double beta = 1.0;
    int mc_passes = 10;
    int validation_tasks = 1000;
    int validation_every = 100;
    std::uint64_t train_seed = 0;
    std::uint64_t validation_seed = 1234;
    // risk-model checkpoints land in checkpoint_dir every N iterations
    // (0 = off); only model-based strategies have a model to snapshot
    int checkpoint_every = 0;
    std::string checkpoint_dir;
};

struct SinusoidIterationRow {
    int iteration = 0;
    double mean_mse = 0.0;
    double cvar90 = 0.0;
    double cvar70 = 0.0;
    double cvar50 = 0.0;
    std::vector<TaskId> selected;
    std::vector<double> risks;
    std::vector<double> predicted;  // model risk means at the selection (model-based only)
    double pcc = 0.0;               // predicted vs realized, 0 when undefined
    double wall_ms = 0.0;
};

// Streaming sinks: the harness appends one JSONL row per call so crashed
// runs leave valid prefixes.
using SinusoidObserver = std::function<void(const SinusoidIterationRow&)>;

struct SinusoidResult {
    std::vector<SinusoidIterationRow> train_rows;
    std::vector<SinusoidIterationRow> validation_rows;  // selected empty, risks = grid risks
    std::vector<TaskId> validation_tasks;
    std::vector<double> final_validation_risks;
    MamlLearner learner;
};

// Full loop of acquisition -> adaptation risks -> risk-model fit -> meta
// update, with periodic evaluation on a fixed validation grid shared across
// strategies through the validation seed.
SinusoidResult run_sinusoid_experiment(const SinusoidExperimentConfig& config,
                                       const SinusoidObserver& on_train_row = {},
                                       const SinusoidObserver& on_validation_row = {});

}  // namespace rats
