#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rats/risk_model.hpp"
#include "rats/subset.hpp"
#include "rats/task_space.hpp"

namespace rats {

enum class Strategy { Erm, Gdrm, Drm, MptsUcb, Pdts };

Strategy strategy_from_string(const std::string& name);
std::string to_string(Strategy s);

struct AcquisitionConfig {
    Strategy strategy = Strategy::Erm;
    int batch_size = 16;    // B
    int pseudo_batch = 16;  // B-hat >= B
    double gamma0 = 1.0;    // UCB mean weight
    double gamma1 = 1.0;    // UCB std weight
    double gamma_div = 1.0; // diversity weight
    double gdrm_eta = 0.0;  // softmax temperature
    double mix_rho = 0.5;   // random-mix fraction for the UCB sampler
};

void validate(const AcquisitionConfig& config);

struct SelectionResult {
    std::vector<TaskId> tasks;    // length B
    std::vector<double> weights;  // non-negative, sums to 1
    ScoredCandidates candidates;  // full scored candidate set, for logging
    std::vector<int> chosen;      // indices into candidates, ascending
};

// Uniform sampling, uniform weights. GDRM rounds also sample this way; their
// reweighting happens on realized losses via gdrm_weights.
SelectionResult select_erm(const TaskSpace& space, const AcquisitionConfig& config, Rng& rng);

// Softmax of eta * loss with max-subtraction; eta = 0 gives uniform weights.
std::vector<double> gdrm_weights(const std::vector<double>& losses, double eta);

// Samples pseudo_batch tasks, evaluates all with the exact oracle and keeps
// the Top-B, i.e. the discrete CVaR estimator at alpha = 1 - B/Bhat. The
// oracle is structural: DRM is defined by exact evaluation, the model-based
// samplers below never get one.
SelectionResult select_drm(const TaskSpace& space, const AcquisitionConfig& config,
                           const std::function<double(const TaskId&)>& true_risk_oracle, Rng& rng);

double ucb_score(double mean, double std, double gamma0, double gamma1);

// Samples pseudo_batch candidates, scores them with multi-pass Monte Carlo
// estimates gamma0*m + gamma1*sigma, keeps ceil((1-rho)B) by Top-B score and
// fills the remaining floor(rho*B) uniformly from the unselected candidates.
SelectionResult select_mpts_ucb(const TaskSpace& space, const AcquisitionConfig& config,
                                const RiskModel& model, int mc_passes, Rng& rng);

// Samples pseudo_batch candidates, scores them with one stochastic forward
// pass, and hands the scores to the diversity-regularized greedy search.
// Ignores gamma0/gamma1/mix_rho by contract.
SelectionResult select_pdts(const TaskSpace& space, const AcquisitionConfig& config,
                            const RiskModel& model, Rng& rng);

}  // namespace rats
