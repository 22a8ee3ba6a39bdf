#pragma once

#include <utility>
#include <vector>

#include "rats/nnet.hpp"
#include "rats/rng.hpp"

namespace rats {

// A task identifier is a point in a bounded box of R^d.
using TaskId = Vec;

struct TaskSpace {
    Vec lower;
    Vec upper;

    int dim() const { return static_cast<int>(lower.size()); }
};

TaskSpace make_space(const std::vector<std::pair<double, double>>& dims);

bool contains(const TaskSpace& space, const TaskId& id);

// I.i.d. uniform samples within bounds, reproducible given the rng seed.
std::vector<TaskId> sample_uniform(const TaskSpace& space, int count, Rng& rng);

// Per-dimension affine map onto [0,1]^d; throws on out-of-bounds ids.
Vec normalize(const TaskSpace& space, const TaskId& id);
TaskId denormalize(const TaskSpace& space, const Vec& unit);

// Squared Euclidean distance of normalized coordinates divided by d, so the
// result lies in [0,1] and diversity weights mean the same thing in every
// benchmark regardless of identifier units.
double pairwise_sqdist(const TaskSpace& space, const TaskId& a, const TaskId& b);

}  // namespace rats
