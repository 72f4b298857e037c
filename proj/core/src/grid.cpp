#include "ebsvie/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ebsvie/errors.hpp"

namespace ebsvie {

TimeGrid::TimeGrid(double horizon, int n_steps) : horizon_(horizon), n_steps_(n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ArgumentError("model", "horizon must be finite and positive, got " +
                                         std::to_string(horizon));
    }
    if (n_steps < 1) {
        throw ArgumentError("model", "time grid needs N >= 1, got " + std::to_string(n_steps));
    }
    dt_ = horizon / n_steps;
    nodes_.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) {
        nodes_[static_cast<std::size_t>(k)] = horizon * k / n_steps;
    }
    nodes_.back() = horizon;
}

int TimeGrid::index_of(double s) const noexcept {
    const int k = nearest_index(s);
    return std::abs(nodes_[static_cast<std::size_t>(k)] - s) <= 1e-9 * dt_ ? k : -1;
}

int TimeGrid::nearest_index(double s) const noexcept {
    const double r = std::round(s / dt_);
    if (!(r > 0.0)) return 0;
    if (r >= n_steps_) return n_steps_;
    return static_cast<int>(r);
}

TimeGrid make_grid(double horizon, int n_steps) { return TimeGrid(horizon, n_steps); }

TriangularIndex::TriangularIndex(int n_steps) : n_(n_steps) {
    if (n_steps < 1) {
        throw ArgumentError("model", "triangular index needs N >= 1");
    }
}

std::size_t TriangularIndex::checked_flat(int i, int k) const {
    if (!contains(i, k)) {
        throw ArgumentError("model", "index (" + std::to_string(i) + "," + std::to_string(k) +
                                         ") outside the triangle 0 <= i <= k <= " +
                                         std::to_string(n_));
    }
    return flat(i, k);
}

std::vector<std::pair<int, int>> TriangularIndex::sweep_order() const {
    std::vector<std::pair<int, int>> order;
    order.reserve(size());
    for (int k = n_; k >= 0; --k) {
        for (int i = 0; i <= k; ++i) order.emplace_back(i, k);
    }
    return order;
}

}  // namespace ebsvie
