#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ebsvie/grid.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

/// Start point (t, x) of the forward flow. t must be a node of the grid.
struct StartPoint {
    double t = 0.0;
    std::vector<double> x;
};

struct SimulationOptions {
    int threads = 1;
};

/// Euler-Maruyama paths of X^{t,x}, the variational flow grad X, and the
/// Brownian increments that drove them. Storage is level-major
/// ([k][p][...]) because every backward sweep walks one level at a time;
/// export() writes the path-major layout.
class PathEnsemble {
public:
    PathEnsemble(ProblemSpec spec, TimeGrid grid, StartPoint start, std::size_t n_paths,
                 std::uint64_t seed);

    const ProblemSpec& spec() const noexcept { return spec_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    const StartPoint& start() const noexcept { return start_; }
    /// Grid index of the start time; levels k <= start_index() have X = x.
    int start_index() const noexcept { return start_index_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int dim() const noexcept { return d_; }

    /// Increment of path p over step k (k in [0, N)), d entries.
    std::span<const double> dw(std::size_t p, int k) const {
        return {dw_.data() + (static_cast<std::size_t>(k) * n_paths_ + p) * ud(), ud()};
    }
    /// State of path p at level k, d entries.
    std::span<const double> x(std::size_t p, int k) const {
        return {x_.data() + (static_cast<std::size_t>(k) * n_paths_ + p) * ud(), ud()};
    }
    /// Variational flow of path p at level k, d x d row-major.
    std::span<const double> grad_x(std::size_t p, int k) const {
        return {grad_x_.data() + (static_cast<std::size_t>(k) * n_paths_ + p) * ud() * ud(),
                ud() * ud()};
    }
    /// All states at level k, n_paths x d row-major.
    std::span<const double> level_states(int k) const {
        return {x_.data() + static_cast<std::size_t>(k) * n_paths_ * ud(), n_paths_ * ud()};
    }

    // Mutable access used by the simulator and the binary loader.
    std::vector<double>& raw_dw() noexcept { return dw_; }
    std::vector<double>& raw_x() noexcept { return x_; }
    std::vector<double>& raw_grad_x() noexcept { return grad_x_; }

private:
    std::size_t ud() const noexcept { return static_cast<std::size_t>(d_); }

    ProblemSpec spec_;
    TimeGrid grid_;
    StartPoint start_;
    int start_index_ = 0;
    std::size_t n_paths_ = 0;
    std::uint64_t seed_ = 0;
    int d_ = 1;
    std::vector<double> dw_;
    std::vector<double> x_;
    std::vector<double> grad_x_;
};

/// Simulates X and grad X with shared increments:
///   X_{k+1}     = X_k + b(s_k,X_k) dt + sigma(s_k,X_k) dW_k
///   gX_{k+1}    = gX_k + b_x gX_k dt + sum_i sigma^i_x gX_k dW^i_k
/// for s_k >= t; X = x and gX = I on the frozen levels s_k <= t.
PathEnsemble simulate_paths(const ProblemSpec& spec, const TimeGrid& grid,
                            const StartPoint& start, std::size_t n_paths, std::uint64_t seed,
                            const SimulationOptions& options = {});

/// D_r X(s_k) for every path and level, [p][k][d x d] row-major.
struct MalliavinField {
    std::size_t n_paths = 0;
    int n_levels = 0;
    int d = 1;
    int r_index = 0;
    std::vector<double> values;

    std::span<const double> at(std::size_t p, int k) const {
        const auto dd = static_cast<std::size_t>(d * d);
        return {values.data() + (p * static_cast<std::size_t>(n_levels) + static_cast<std::size_t>(k)) * dd, dd};
    }
};

/// D_r X(s) = grad X(s) (grad X(r))^{-1} sigma(r, X(r)) for s > r > t, zero
/// elsewhere. Throws SingularityError when grad X(r) has condition > 1e12.
MalliavinField malliavin_derivative(const PathEnsemble& ens, int r_index);

/// Writes the binary layout: header (magic, dims, seed, grid, start) then
/// dW [p][k][d], X [p][k][d], grad X [p][k][d][d], little-endian doubles.
void export_binary(const PathEnsemble& ens, std::ostream& out);
PathEnsemble import_binary(std::istream& in, const ProblemSpec& spec);

/// CSV with one row per level: k, s, mean_x<l>, var_x<l>.
void export_summary_csv(const PathEnsemble& ens, std::ostream& out);

}  // namespace ebsvie
