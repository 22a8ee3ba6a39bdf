#include "rats/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rats {

namespace {

SelectionResult from_chosen(ScoredCandidates cands, std::vector<int> chosen) {
    SelectionResult result;
    result.tasks.reserve(chosen.size());
    for (int i : chosen) result.tasks.push_back(cands.ids[static_cast<std::size_t>(i)]);
    result.weights.assign(chosen.size(), 1.0 / static_cast<double>(chosen.size()));
    result.candidates = std::move(cands);
    result.chosen = std::move(chosen);
    return result;
}

}  // namespace

Strategy strategy_from_string(const std::string& name) {
    if (name == "erm") return Strategy::Erm;
    if (name == "gdrm") return Strategy::Gdrm;
    if (name == "drm") return Strategy::Drm;
    if (name == "mpts_ucb") return Strategy::MptsUcb;
    if (name == "pdts") return Strategy::Pdts;
    throw std::invalid_argument("acquisition: unknown strategy '" + name + "'");
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::Erm: return "erm";
        case Strategy::Gdrm: return "gdrm";
        case Strategy::Drm: return "drm";
        case Strategy::MptsUcb: return "mpts_ucb";
        case Strategy::Pdts: return "pdts";
    }
    return "erm";
}

void validate(const AcquisitionConfig& config) {
    if (config.batch_size < 1) throw std::invalid_argument("acquisition: batch_size must be positive");
    if (config.pseudo_batch < config.batch_size)
        throw std::invalid_argument("acquisition: pseudo_batch must be at least batch_size");
    if (config.gamma_div < 0.0) throw std::invalid_argument("acquisition: gamma_div must be non-negative");
    if (!(config.mix_rho >= 0.0 && config.mix_rho <= 1.0))
        throw std::invalid_argument("acquisition: mix_rho must lie in [0,1]");
}

SelectionResult select_erm(const TaskSpace& space, const AcquisitionConfig& config, Rng& rng) {
    validate(config);
    ScoredCandidates cands;
    cands.ids = sample_uniform(space, config.batch_size, rng);
    cands.scores.assign(cands.ids.size(), 0.0);
    std::vector<int> chosen(cands.ids.size());
    std::iota(chosen.begin(), chosen.end(), 0);
    return from_chosen(std::move(cands), std::move(chosen));
}

std::vector<double> gdrm_weights(const std::vector<double>& losses, double eta) {
    if (losses.empty()) throw std::invalid_argument("acquisition: empty loss list");
    for (double l : losses)
        if (!std::isfinite(l)) throw std::invalid_argument("acquisition: non-finite loss");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double l : losses) max_logit = std::max(max_logit, eta * l);
    std::vector<double> weights(losses.size());
    double total = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        weights[i] = std::exp(eta * losses[i] - max_logit);
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return weights;
}

SelectionResult select_drm(const TaskSpace& space, const AcquisitionConfig& config,
                           const std::function<double(const TaskId&)>& true_risk_oracle, Rng& rng) {
    validate(config);
    ScoredCandidates cands;
    cands.ids = sample_uniform(space, config.pseudo_batch, rng);
    cands.scores.reserve(cands.ids.size());
    for (const TaskId& id : cands.ids) cands.scores.push_back(true_risk_oracle(id));
    std::vector<int> chosen = top_b(cands, config.batch_size);
    return from_chosen(std::move(cands), std::move(chosen));
}

double ucb_score(double mean, double std, double gamma0, double gamma1) {
    return gamma0 * mean + gamma1 * std;
}

SelectionResult select_mpts_ucb(const TaskSpace& space, const AcquisitionConfig& config,
                                const RiskModel& model, int mc_passes, Rng& rng) {
    validate(config);
    ScoredCandidates cands;
    cands.ids = sample_uniform(space, config.pseudo_batch, rng);
    const std::vector<RiskEstimate> estimates = predict_mc(model, cands.ids, mc_passes, rng);
    cands.scores.reserve(estimates.size());
    for (const RiskEstimate& e : estimates)
        cands.scores.push_back(ucb_score(e.mean, e.std, config.gamma0, config.gamma1));

    const int b = config.batch_size;
    const int n_top = static_cast<int>(
        std::ceil((1.0 - config.mix_rho) * static_cast<double>(b) - 1e-12));
    std::vector<int> chosen;
    std::vector<bool> taken(cands.ids.size(), false);
    if (n_top > 0) {
        chosen = top_b(cands, n_top);
        for (int i : chosen) taken[static_cast<std::size_t>(i)] = true;
    }
    // fill the rest uniformly without replacement from the unselected pool
    std::vector<int> pool;
    for (int i = 0; i < cands.size(); ++i)
        if (!taken[static_cast<std::size_t>(i)]) pool.push_back(i);
    while (static_cast<int>(chosen.size()) < b) {
        const std::size_t j = static_cast<std::size_t>(rng.below(pool.size()));
        chosen.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    std::sort(chosen.begin(), chosen.end());
    return from_chosen(std::move(cands), std::move(chosen));
}

SelectionResult select_pdts(const TaskSpace& space, const AcquisitionConfig& config,
                            const RiskModel& model, Rng& rng) {
    validate(config);
    ScoredCandidates cands;
    cands.ids = sample_uniform(space, config.pseudo_batch, rng);
    cands.scores = predict_posterior_sample(model, cands.ids, rng);
    std::vector<int> chosen = greedy_diverse(space, cands, config.batch_size, config.gamma_div);
    return from_chosen(std::move(cands), std::move(chosen));
}

}  // namespace rats
