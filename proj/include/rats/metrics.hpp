#pragma once

#include <functional>
#include <vector>

#include "rats/task_space.hpp"

namespace rats {

// A batch of task risks under a fixed learner.
using RiskSample = std::vector<double>;

// Mean of the worst ceil((1-alpha)*n) values. No fractional-tail
// interpolation: the discrete convention matches the Top-B Monte Carlo
// usage and agrees exactly with the dual form at order statistics.
double cvar_tail_mean(const RiskSample& sample, double alpha);

// Dual form min_zeta zeta + (1/k) sum [l_i - zeta]^+ with k the discrete
// tail count; the minimizer is attained at an order statistic, so scanning
// the sample values is exact.
double cvar_dual(const RiskSample& sample, double alpha);

// Pearson correlation; throws if either side has zero variance.
double pcc(const std::vector<double>& x, const std::vector<double>& y);

struct ConcentrationSetup {
    double p_eps = 0.0;  // used by the closed form
    int b_hat = 1;
    int b = 1;
    int trials = 1;
};

struct ConcentrationEstimate {
    double probability = 0.0;
    double std_error = 0.0;
};

// Monte Carlo estimate of P(every Top-B pick lies within the eps-neighborhood
// of f's maximum) for B-hat uniform candidates per trial.
ConcentrationEstimate concentration_mc(const ConcentrationSetup& setup, const TaskSpace& space,
                                       const std::function<double(const TaskId&)>& f,
                                       double f_max, double eps, Rng& rng);

// Verbatim evaluation of the printed closed-form concentration probability
//   P = 1 - sum_{i=1}^{B} p^(Bhat-i+1) (1-p)^(i-1) C(Bhat, i-1).
// Advisory only: it contradicts first-principles cases (at B = Bhat = 1 it
// yields 1-p where the event has probability p), so tests log it next to the
// MC estimate instead of asserting agreement.
double concentration_closed_form(const ConcentrationSetup& setup);

// Shannon entropy (nats) of the normalized-coordinate histogram with
// bins_per_dim cells per dimension; a uniform histogram attains ln(#cells).
double histogram_entropy(const std::vector<TaskId>& selections, const TaskSpace& space,
                         int bins_per_dim);

}  // namespace rats
