#pragma once

#include <vector>

#include "rats/task_space.hpp"

namespace rats {

struct ScoredCandidates {
    std::vector<TaskId> ids;
    std::vector<double> scores;

    int size() const { return static_cast<int>(ids.size()); }
};

void validate(const ScoredCandidates& cands);

// Value of a chosen subset: mean score plus gamma times mean pairwise
// normalized squared distance. Averaging both terms keeps gamma comparable
// across batch sizes and identifier dimensions.
struct SubsetObjective {
    double score_term = 0.0;      // mean score of the subset
    double diversity_term = 0.0;  // mean pairwise normalized squared distance
    double gamma = 0.0;
    double total = 0.0;           // score_term + gamma * diversity_term
};

// Indices of the b largest scores; ties broken toward the lowest candidate
// index; output sorted ascending.
std::vector<int> top_b(const ScoredCandidates& cands, int b);

// Mean of all unordered-pair normalized squared distances; 0 for a singleton.
double diversity_score(const TaskSpace& space, const std::vector<TaskId>& ids);

SubsetObjective subset_objective(const TaskSpace& space, const ScoredCandidates& cands,
                                 const std::vector<int>& picks, double gamma);

// Greedy max-sum diversification: seed with the best score, then repeatedly
// add the candidate with the largest marginal gain
//   score(i)/b + gamma * (2/(b(b-1))) * sum_{j in selected} sqdist(i, j).
// With gamma = 0 this reduces exactly to top_b.
std::vector<int> greedy_diverse(const TaskSpace& space, const ScoredCandidates& cands,
                                int b, double gamma);

struct BruteForceResult {
    std::vector<int> picks;
    SubsetObjective objective;
};

// Exhaustive maximizer of the same objective; verification oracle only.
// Guarded at C(n, b) <= 10^6 combinations; ties resolve to the
// lexicographically smallest index set.
BruteForceResult brute_force_diverse(const TaskSpace& space, const ScoredCandidates& cands,
                                     int b, double gamma);

}  // namespace rats
