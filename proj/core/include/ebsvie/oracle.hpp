#pragma once

#include <span>
#include <vector>

#include "ebsvie/grid.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

/// Y(t_i, s_k) of an x-independent instance on a fine grid, Z = 0.
class DeterministicField {
public:
    DeterministicField(TimeGrid grid, int dim_value);

    const TimeGrid& grid() const noexcept { return grid_; }
    int dim_value() const noexcept { return m_; }
    int n_steps() const noexcept { return grid_.n_steps(); }

    double at(int i, int k, int l = 0) const;
    double& at(int i, int k, int l = 0);
    double diagonal(int k, int l = 0) const { return at(k, k, l); }
    /// Bilinear in (t, s) between fine nodes; requires t <= s.
    double value(double t, double s, int l = 0) const;

private:
    TimeGrid grid_;
    int m_;
    TriangularIndex index_;
    std::vector<double> y_;
};

/// Backward trapezoidal sweep
///   Y(t_i, s_k) = Y(t_i, s_{k+1}) + dt/2 [g(t_i, s_k, .) + g(t_i, s_{k+1}, .)]
/// with g(t, r, x, Y(t, r), Y(r, r), 0). Each level solves its diagonal
/// first, then the other labels, each by scalar fixed-point iteration.
/// Requires sigma = b = 0 or the x_independent flag, and n_oracle >= 1000.
/// `x` is the frozen state (zeros when empty).
DeterministicField deterministic_oracle(const ProblemSpec& spec, int n_oracle,
                                        std::span<const double> x = {});

struct RichardsonValue {
    std::vector<int> n_oracle;
    std::vector<double> values;
    double extrapolated = 0.0;
};

/// Y(t, s) at n, 2n, 4n and the second-order extrapolation
/// (4 y_{4n} - y_{2n}) / 3.
RichardsonValue richardson_oracle(const ProblemSpec& spec, double t, double s, int n = 1000,
                                  int component = 0);

}  // namespace ebsvie
