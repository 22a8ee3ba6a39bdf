#include "rats/task_space.hpp"

#include <stdexcept>
#include <string>

namespace rats {

TaskSpace make_space(const std::vector<std::pair<double, double>>& dims) {
    if (dims.empty()) throw std::invalid_argument("task_space: at least one dimension required");
    TaskSpace space;
    space.lower = Vec(dims.size());
    space.upper = Vec(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (!(dims[i].first < dims[i].second))
            throw std::invalid_argument("task_space: lower must be strictly below upper in dimension " +
                                        std::to_string(i));
        space.lower[i] = dims[i].first;
        space.upper[i] = dims[i].second;
    }
    return space;
}

bool contains(const TaskSpace& space, const TaskId& id) {
    if (id.size() != space.lower.size()) return false;
    for (Eigen::Index i = 0; i < id.size(); ++i)
        if (!(id[i] >= space.lower[i] && id[i] <= space.upper[i])) return false;
    return true;
}

std::vector<TaskId> sample_uniform(const TaskSpace& space, int count, Rng& rng) {
    if (count < 1) throw std::invalid_argument("task_space: count must be at least 1");
    std::vector<TaskId> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        TaskId id(space.dim());
        for (int i = 0; i < space.dim(); ++i) id[i] = rng.uniform(space.lower[i], space.upper[i]);
        out.push_back(std::move(id));
    }
    return out;
}

Vec normalize(const TaskSpace& space, const TaskId& id) {
    if (!contains(space, id)) throw std::invalid_argument("task_space: identifier out of bounds");
    return ((id - space.lower).array() / (space.upper - space.lower).array()).matrix();
}

TaskId denormalize(const TaskSpace& space, const Vec& unit) {
    if (unit.size() != space.lower.size())
        throw std::invalid_argument("task_space: dimension mismatch");
    return space.lower + (unit.array() * (space.upper - space.lower).array()).matrix();
}

double pairwise_sqdist(const TaskSpace& space, const TaskId& a, const TaskId& b) {
    const Vec ua = normalize(space, a);
    const Vec ub = normalize(space, b);
    return (ua - ub).squaredNorm() / static_cast<double>(space.dim());
}

}  // namespace rats
