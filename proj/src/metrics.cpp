#include "rats/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "rats/subset.hpp"

namespace rats {

namespace {

void check_sample(const RiskSample& sample) {
    if (sample.empty()) throw std::invalid_argument("metrics: empty risk sample");
    for (double v : sample)
        if (!std::isfinite(v)) throw std::invalid_argument("metrics: non-finite risk value");
}

// ceil((1-alpha)*n) with a guard against float noise around integers
std::size_t tail_count(std::size_t n, double alpha) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("metrics: alpha must lie in [0,1)");
    const double c = (1.0 - alpha) * static_cast<double>(n);
    auto k = static_cast<long long>(std::ceil(c - 1e-9));
    k = std::max<long long>(1, std::min<long long>(k, static_cast<long long>(n)));
    return static_cast<std::size_t>(k);
}

}  // namespace

double cvar_tail_mean(const RiskSample& sample, double alpha) {
    check_sample(sample);
    const std::size_t k = tail_count(sample.size(), alpha);
    RiskSample sorted = sample;
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += sorted[i];
    return sum / static_cast<double>(k);
}

double cvar_dual(const RiskSample& sample, double alpha) {
    check_sample(sample);
    const std::size_t k = tail_count(sample.size(), alpha);
    // TODO: prefix sums over the sorted sample would make this O(n log n)
    double best = std::numeric_limits<double>::infinity();
    for (double zeta : sample) {
        double excess = 0.0;
        for (double v : sample) excess += std::max(v - zeta, 0.0);
        best = std::min(best, zeta + excess / static_cast<double>(k));
    }
    return best;
}

double pcc(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("metrics: pcc needs two equal-length series of size >= 2");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("metrics: pcc undefined for zero-variance input");
    return sxy / std::sqrt(sxx * syy);
}

ConcentrationEstimate concentration_mc(const ConcentrationSetup& setup, const TaskSpace& space,
                                       const std::function<double(const TaskId&)>& f,
                                       double f_max, double eps, Rng& rng) {
    if (setup.b < 1 || setup.b_hat < setup.b)
        throw std::invalid_argument("metrics: need 1 <= b <= b_hat");
    if (setup.trials < 1) throw std::invalid_argument("metrics: trials must be positive");
    long long hits = 0;
    for (int t = 0; t < setup.trials; ++t) {
        const std::vector<TaskId> cands = sample_uniform(space, setup.b_hat, rng);
        ScoredCandidates scored;
        scored.ids = cands;
        scored.scores.reserve(cands.size());
        for (const TaskId& id : cands) scored.scores.push_back(f(id));
        const std::vector<int> picks = top_b(scored, setup.b);
        bool all_in = true;
        for (int i : picks)
            if (f_max - scored.scores[static_cast<std::size_t>(i)] > eps) {
                all_in = false;
                break;
            }
        hits += all_in ? 1 : 0;
    }
    ConcentrationEstimate est;
    est.probability = static_cast<double>(hits) / static_cast<double>(setup.trials);
    est.std_error =
        std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(setup.trials));
    return est;
}

double concentration_closed_form(const ConcentrationSetup& setup) {
    if (setup.b < 1 || setup.b_hat < setup.b)
        throw std::invalid_argument("metrics: need 1 <= b <= b_hat");
    if (!(setup.p_eps >= 0.0 && setup.p_eps <= 1.0))
        throw std::invalid_argument("metrics: p_eps must lie in [0,1]");
    const double p = setup.p_eps;
    double sum = 0.0;
    for (int i = 1; i <= setup.b; ++i) {
        // p^(Bhat-i+1) (1-p)^(i-1) C(Bhat, i-1), via logs to dodge overflow
        if (p == 0.0) continue;  // p^(Bhat-i+1) = 0 since the exponent >= 1
        double log_term = (setup.b_hat - i + 1) * std::log(p);
        if (i > 1) {
            if (p == 1.0) continue;  // (1-p)^(i-1) = 0
            log_term += (i - 1) * std::log1p(-p);
        }
        log_term += std::lgamma(setup.b_hat + 1.0) - std::lgamma(static_cast<double>(i)) -
                    std::lgamma(setup.b_hat - i + 2.0);
        sum += std::exp(log_term);
    }
    return 1.0 - sum;
}

double histogram_entropy(const std::vector<TaskId>& selections, const TaskSpace& space,
                         int bins_per_dim) {
    if (selections.empty()) throw std::invalid_argument("metrics: no selections");
    if (bins_per_dim < 1) throw std::invalid_argument("metrics: bins_per_dim must be positive");
    const int d = space.dim();
    std::size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= static_cast<std::size_t>(bins_per_dim);
    std::vector<long long> counts(cells, 0);
    for (const TaskId& id : selections) {
        const Vec unit = normalize(space, id);
        std::size_t cell = 0;
        for (int i = 0; i < d; ++i) {
            auto bin = static_cast<long long>(unit[i] * bins_per_dim);
            bin = std::min<long long>(bin, bins_per_dim - 1);
            cell = cell * static_cast<std::size_t>(bins_per_dim) + static_cast<std::size_t>(bin);
        }
        counts[cell] += 1;
    }
    const double n = static_cast<double>(selections.size());
    double entropy = 0.0;
    for (long long c : counts) {
        if (c == 0) continue;
        const double prob = static_cast<double>(c) / n;
        entropy -= prob * std::log(prob);
    }
    return entropy;
}

}  // namespace rats
