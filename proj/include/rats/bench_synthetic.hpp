#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rats/acquisition.hpp"
#include "rats/metrics.hpp"
#include "rats/task_space.hpp"

namespace rats {

enum class LandscapeKind { GaussianBump, Multimodal, Plateau };

LandscapeKind landscape_kind_from_string(const std::string& name);

// Synthetic risk surface over the task box. The peak drifts by drift * round,
// standing in for the learner's parameters reshaping the risk surface between
// rounds.
struct Landscape {
    LandscapeKind kind = LandscapeKind::GaussianBump;
    TaskId peak;
    double width = 0.1;
    double amplitude = 1.0;
    Vec drift;  // per-round peak displacement
};

double eval_landscape(const Landscape& landscape, const TaskId& id, int round);

// Maximum value over the box; defined for the unimodal gaussian bump only.
double landscape_max(const Landscape& landscape);

// Toy stand-in for policy improvement: multiplies the risk surface by an
// attenuation factor within a fixed radius of every task optimized so far.
// Each dent only lowers risk, so CVaR curves stay interpretable.
struct AmplitudeReducer {
    double radius = 0.1;
    double factor = 0.9;  // risk at a dent center shrinks by this per visit
    std::vector<TaskId> centers;
    std::vector<double> strengths;  // per-center reduction share in (0,1]

    void apply(const std::vector<TaskId>& selected, const std::vector<double>& weights);
    double attenuation(const TaskId& id) const;
};

struct ConcentrationExperimentConfig {
    TaskSpace space;
    Landscape landscape;
    double eps = 0.1;
    int batch_size = 8;  // B
    std::vector<int> pseudo_batch_grid;
    int trials = 10000;
    double gamma_div = 1.0;
    int entropy_bins = 32;
    std::uint64_t seed = 0;
};

struct ConcentrationRow {
    int pseudo_batch = 0;
    double top_b_probability = 0.0;
    double top_b_std_error = 0.0;
    double top_b_entropy = 0.0;
    double diverse_probability = 0.0;
    double diverse_std_error = 0.0;
    double diverse_entropy = 0.0;
};

struct ConcentrationReport {
    std::vector<ConcentrationRow> rows;
    double measured_p_eps = 0.0;  // implied by (eps, width), estimated from the draws
};

// Isolates the Top-B mechanism: candidates are scored by direct landscape
// evaluation (no neural model), Top-B and diversity-regularized selection
// run on identical draws.
ConcentrationReport run_concentration_experiment(const ConcentrationExperimentConfig& config);

struct SamplerComparisonConfig {
    TaskSpace space;
    Landscape landscape;
    AcquisitionConfig acquisition;
    int rounds = 50;
    int probe_points = 64;
    int fit_steps = 100;
    double risk_lr = 5e-3;
    int mc_passes = 10;
    int latent_dim = 2;
    double beta = 1.0;
    double reducer_radius = 0.06;
    double reducer_factor = 0.95;
    int entropy_bins = 32;
    std::uint64_t seed = 0;
    // risk-model checkpoints land in checkpoint_dir every N rounds (0 = off)
    int checkpoint_every = 0;
    std::string checkpoint_dir;
};

struct ComparisonRound;

// Streaming sink so the harness can append logs round by round; a crashed
// run leaves a valid prefix on disk.
using ComparisonObserver = std::function<void(const ComparisonRound&)>;

struct ComparisonRound {
    int round = 0;
    std::vector<TaskId> selected;
    std::vector<double> true_risks;       // exact landscape risks of the selection
    std::vector<double> predicted_risks;  // model means at the selection (model-based only)
    std::vector<double> probe_risks;      // surface on the probe grid after this round's update
    double entropy = 0.0;                 // cumulative selection entropy
    double pcc = 0.0;
    double cvar90 = 0.0;
    double cvar50 = 0.0;
    double mean_risk = 0.0;
    double wall_ms = 0.0;
};

// T rounds of select -> evaluate -> fit risk model -> toy optimizer update,
// with per-round entropy, probe-grid PCC and probe CVaR logging. On a
// numeric failure mid-run the latest model checkpoint is flushed before the
// error propagates.
std::vector<ComparisonRound> run_sampler_comparison(const SamplerComparisonConfig& config,
                                                    const ComparisonObserver& on_round = {});

}  // namespace rats
