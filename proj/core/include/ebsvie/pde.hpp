#pragma once

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "ebsvie/field.hpp"
#include "ebsvie/grid.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

/// Uniform one-dimensional mesh x_j = x_min + j dx, j = 0..J.
class SpatialMesh {
public:
    SpatialMesh(double x_min, double x_max, int n_cells);

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    int n_cells() const noexcept { return n_cells_; }
    double dx() const noexcept { return dx_; }
    double node(int j) const noexcept { return j == n_cells_ ? x_max_ : x_min_ + j * dx_; }
    bool contains(double x) const noexcept { return x >= x_min_ && x <= x_max_; }
    /// True when x lies in the central `fraction` of [x_min, x_max].
    bool in_inner(double x, double fraction = 0.8) const noexcept;

private:
    double x_min_;
    double x_max_;
    int n_cells_;
    double dx_;
};

/// Theta(t_i, s_k, x_j) on the triangle times the mesh, m components.
class PdeField {
public:
    PdeField(TimeGrid grid, SpatialMesh mesh, int dim_value, double theta_weight);

    const TimeGrid& grid() const noexcept { return grid_; }
    const SpatialMesh& mesh() const noexcept { return mesh_; }
    int dim_value() const noexcept { return m_; }
    double theta_weight() const noexcept { return theta_weight_; }
    int n_steps() const noexcept { return grid_.n_steps(); }

    /// Layer (i,k): (J+1) x m row-major.
    std::span<double> layer(int i, int k);
    std::span<const double> layer(int i, int k) const;
    double at(int i, int k, int j, int l = 0) const;

    /// Piecewise-linear interpolation in x, clamped to the mesh.
    double value(int i, int k, double x, int l = 0) const;
    /// Central-difference Theta_x at nodes (one-sided at the ends),
    /// interpolated linearly in x, clamped.
    double derivative(int i, int k, double x, int l = 0) const;

private:
    TimeGrid grid_;
    SpatialMesh mesh_;
    int m_;
    double theta_weight_;
    TriangularIndex index_;
    std::vector<double> values_;
};

struct PdeOptions {
    double theta_weight = 0.5;
    int threads = 1;
};

/// Backward theta-scheme for the non-local system, level by level:
///   (I - w dt L_k) (Theta_k - Theta_{k+1})
///       = dt [w L_k + (1-w) L_{k+1}] Theta_{k+1} + dt g(t_i, s_{k+1}, x, Theta_{k+1}, D_{k+1}, Theta_x sigma)
/// with L = sigma^2/2 d_xx + b d_x by central differences, D_{k+1} the
/// diagonal layer Theta(s_{k+1}, s_{k+1}, .), and zero second difference at
/// both ends of the mesh.
PdeField solve_nonlocal_pde(const ProblemSpec& spec, const TimeGrid& grid, const SpatialMesh& mesh,
                            const PdeOptions& options = {});

struct PdeResidual {
    /// Per cell (i,k), k < N, in sweep order.
    std::vector<int> label;
    std::vector<int> level;
    std::vector<double> max_norm;
    std::vector<double> l2_norm;
    double max_overall = 0.0;
};

/// Implicit-at-level-k residual over the inner 80% of the mesh:
///   (Theta_{k+1} - Theta_k)/dt + L_k Theta_k + g(t_i, s_k, x, Theta_k, D_k, Theta_x sigma)
PdeResidual pde_residual(const PdeField& field, const ProblemSpec& spec);

struct RepresentationInfo {
    double exit_fraction = 0.0;   ///< share of active (path, step) states outside the mesh
    std::vector<char> exited;     ///< per path
    std::vector<std::string> warnings;
};

/// Y = Theta(t_i, s_k, X_k), Z = Theta_x(t_i, s_k, X_k) sigma(s_k, X_k) on
/// the active levels; before the start time the deterministic recursion
/// with Z = 0 is used. The ensemble must outlive the returned field.
TwoTimeField representation_from_pde(std::shared_ptr<const PdeField> field,
                                     const ProblemSpec& spec, const PathEnsemble& ens,
                                     RepresentationInfo* info = nullptr);

/// Header (magic, N, J, m, x_min, x_max, theta weight) then the triangle
/// layer by layer in sweep order.
void export_pde_binary(const PdeField& field, std::ostream& out);
/// CSV over (s, x) for the fixed label t_i: columns k, s, j, x, theta<l>.
void export_pde_slice_csv(const PdeField& field, int label, std::ostream& out);

}  // namespace ebsvie
