#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace ebsvie {

/// Uniform partition 0 = s_0 < s_1 < ... < s_N = T.
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps);

    int n_steps() const noexcept { return n_steps_; }
    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }
    double node(int k) const { return nodes_.at(static_cast<std::size_t>(k)); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }

    /// Index of the node equal to `s` (within a relative 1e-9 of dt), or -1.
    int index_of(double s) const noexcept;
    /// Index of the node nearest to `s`, clamped to [0, N].
    int nearest_index(double s) const noexcept;

    bool operator==(const TimeGrid& other) const noexcept {
        return n_steps_ == other.n_steps_ && horizon_ == other.horizon_;
    }

private:
    double horizon_;
    int n_steps_;
    double dt_;
    std::vector<double> nodes_;
};

TimeGrid make_grid(double horizon, int n_steps);

/// The index set {(i,k) : 0 <= i <= k <= N} realizing the triangle
/// {(t,s) : 0 <= t <= s <= T}. Pairs are stored flat, level by level.
class TriangularIndex {
public:
    explicit TriangularIndex(int n_steps);

    int n_steps() const noexcept { return n_; }
    std::size_t size() const noexcept {
        return static_cast<std::size_t>(n_ + 1) * static_cast<std::size_t>(n_ + 2) / 2;
    }
    bool contains(int i, int k) const noexcept { return 0 <= i && i <= k && k <= n_; }

    /// Flat offset of (i,k); k(k+1)/2 + i.
    std::size_t flat(int i, int k) const noexcept {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(k + 1) / 2 +
               static_cast<std::size_t>(i);
    }
    /// Same as flat() but throws ArgumentError outside the triangle.
    std::size_t checked_flat(int i, int k) const;

    /// Traversal order of the backward sweeps: levels k descending, labels i
    /// ascending within a level.
    std::vector<std::pair<int, int>> sweep_order() const;

private:
    int n_;
};

}  // namespace ebsvie
