#include "rats/subset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rats {

namespace {

void check_b(const ScoredCandidates& cands, int b) {
    if (b < 1) throw std::invalid_argument("subset: b must be at least 1");
    if (b > cands.size())
        throw std::invalid_argument("subset: b exceeds candidate count");
}

std::vector<Vec> normalized_ids(const TaskSpace& space, const std::vector<TaskId>& ids) {
    std::vector<Vec> unit;
    unit.reserve(ids.size());
    for (const TaskId& id : ids) unit.push_back(normalize(space, id));
    return unit;
}

double unit_sqdist(const Vec& a, const Vec& b) {
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

void validate(const ScoredCandidates& cands) {
    if (cands.ids.size() != cands.scores.size())
        throw std::invalid_argument("subset: ids and scores length mismatch");
    if (cands.ids.empty()) throw std::invalid_argument("subset: empty candidate set");
    for (double s : cands.scores)
        if (!std::isfinite(s)) throw std::invalid_argument("subset: non-finite score");
}

std::vector<int> top_b(const ScoredCandidates& cands, int b) {
    validate(cands);
    check_b(cands, b);
    std::vector<int> order(cands.ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
        return cands.scores[static_cast<std::size_t>(i)] > cands.scores[static_cast<std::size_t>(j)];
    });
    std::vector<int> picks(order.begin(), order.begin() + b);
    std::sort(picks.begin(), picks.end());
    return picks;
}

double diversity_score(const TaskSpace& space, const std::vector<TaskId>& ids) {
    if (ids.empty()) throw std::invalid_argument("subset: diversity of empty set");
    if (ids.size() == 1) return 0.0;
    const std::vector<Vec> unit = normalized_ids(space, ids);
    double sum = 0.0;
    for (std::size_t i = 0; i < unit.size(); ++i)
        for (std::size_t j = i + 1; j < unit.size(); ++j) sum += unit_sqdist(unit[i], unit[j]);
    const double pairs = 0.5 * static_cast<double>(unit.size()) * static_cast<double>(unit.size() - 1);
    return sum / pairs;
}

SubsetObjective subset_objective(const TaskSpace& space, const ScoredCandidates& cands,
                                 const std::vector<int>& picks, double gamma) {
    if (picks.empty()) throw std::invalid_argument("subset: empty pick set");
    SubsetObjective obj;
    obj.gamma = gamma;
    double sum = 0.0;
    std::vector<TaskId> chosen;
    chosen.reserve(picks.size());
    for (int i : picks) {
        sum += cands.scores[static_cast<std::size_t>(i)];
        chosen.push_back(cands.ids[static_cast<std::size_t>(i)]);
    }
    obj.score_term = sum / static_cast<double>(picks.size());
    obj.diversity_term = diversity_score(space, chosen);
    obj.total = obj.score_term + gamma * obj.diversity_term;
    return obj;
}

std::vector<int> greedy_diverse(const TaskSpace& space, const ScoredCandidates& cands,
                                int b, double gamma) {
    validate(cands);
    check_b(cands, b);
    if (gamma < 0.0) throw std::invalid_argument("subset: gamma must be non-negative");
    const int n = cands.size();
    const std::vector<Vec> unit = normalized_ids(space, cands.ids);

    std::vector<bool> selected(static_cast<std::size_t>(n), false);
    // running sum of distances from each candidate to the selected set
    std::vector<double> dist_sum(static_cast<std::size_t>(n), 0.0);

    int seed = 0;
    for (int i = 1; i < n; ++i)
        if (cands.scores[static_cast<std::size_t>(i)] > cands.scores[static_cast<std::size_t>(seed)]) seed = i;

    std::vector<int> picks{seed};
    selected[static_cast<std::size_t>(seed)] = true;

    const double pair_weight =
        b > 1 ? 2.0 / (static_cast<double>(b) * static_cast<double>(b - 1)) : 0.0;
    for (int step = 1; step < b; ++step) {
        for (int i = 0; i < n; ++i)
            if (!selected[static_cast<std::size_t>(i)])
                dist_sum[static_cast<std::size_t>(i)] +=
                    unit_sqdist(unit[static_cast<std::size_t>(i)],
                                unit[static_cast<std::size_t>(picks.back())]);
        int best = -1;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (selected[static_cast<std::size_t>(i)]) continue;
            const double gain = cands.scores[static_cast<std::size_t>(i)] / static_cast<double>(b) +
                                gamma * pair_weight * dist_sum[static_cast<std::size_t>(i)];
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        picks.push_back(best);
        selected[static_cast<std::size_t>(best)] = true;
    }
    std::sort(picks.begin(), picks.end());
    return picks;
}

BruteForceResult brute_force_diverse(const TaskSpace& space, const ScoredCandidates& cands,
                                     int b, double gamma) {
    validate(cands);
    check_b(cands, b);
    const int n = cands.size();
    double combos = 1.0;
    for (int i = 0; i < b; ++i) combos *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (combos > 1e6) throw std::invalid_argument("subset: too many combinations for brute force");

    const std::vector<Vec> unit = normalized_ids(space, cands.ids);
    const double pair_weight =
        b > 1 ? 2.0 / (static_cast<double>(b) * static_cast<double>(b - 1)) : 0.0;

    std::vector<int> idx(static_cast<std::size_t>(b));
    std::iota(idx.begin(), idx.end(), 0);

    BruteForceResult best;
    best.objective.total = -std::numeric_limits<double>::infinity();
    while (true) {
        double score_sum = 0.0;
        double dist_sum = 0.0;
        for (int i = 0; i < b; ++i) {
            score_sum += cands.scores[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            for (int j = i + 1; j < b; ++j)
                dist_sum += unit_sqdist(unit[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])],
                                        unit[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])]);
        }
        const double total = score_sum / static_cast<double>(b) + gamma * pair_weight * dist_sum;
        // lexicographic enumeration: strict improvement keeps the smallest set
        if (total > best.objective.total) {
            best.picks = idx;
            best.objective.gamma = gamma;
            best.objective.score_term = score_sum / static_cast<double>(b);
            best.objective.diversity_term = b > 1 ? pair_weight * dist_sum : 0.0;
            best.objective.total = total;
        }
        int pos = b - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - b + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int k = pos + 1; k < b; ++k)
            idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
    }
    return best;
}

}  // namespace rats
