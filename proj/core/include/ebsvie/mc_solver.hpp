#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ebsvie/basis.hpp"
#include "ebsvie/field.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

struct SolveLog {
    std::vector<std::string> warnings;
};

struct SolverOptions {
    int threads = 1;
    /// Labels to solve; empty means all. When g depends on y' the diagonal
    /// labels the requested cells need are added automatically.
    std::vector<int> labels;
    /// Levels below this index are left unsolved.
    int min_level = 0;
    /// Non-zero: process the labels of each level in a shuffled order.
    std::uint64_t label_order_seed = 0;
    /// Feed zero into g's y' slot (decoupling check for BSDE families).
    bool zero_diagonal_slot = false;
    /// Feed zero into g's y slot (standalone BSVIE sweep).
    bool zero_offdiagonal_slot = false;
    SolveLog* log = nullptr;
};

/// True when the generator reads its y' argument.
bool generator_uses_diagonal(const ProblemSpec& spec);

/// Backward regression sweep over the triangle, levels k = N-1 ... 0 and
/// labels i <= k within a level:
///   Z(i,k) = E[Y(i,k+1) dW_k' | X_k] / dt
///   Y(i,k) = E[Y(i,k+1) + dt g(t_i, s_{k+1}, X_{k+1}, Y(i,k+1), Y(k+1,k+1), Z(i,k)) | X_k]
/// The Gaussian Euler transition is integrated by Gauss-Hermite quadrature
/// against the level-(k+1) polynomial, the generator term is regressed on
/// the realized paths. Levels before the start time are deterministic.
TwoTimeField solve_ebsvie_regression(const ProblemSpec& spec, const PathEnsemble& ens,
                                     const BasisSpec& basis, const SolverOptions& options = {});

struct PicardDiagnostics {
    std::vector<double> residuals;  ///< residual of iterate j against j-1, j >= 1
    std::vector<double> ratios;     ///< residuals[j] / residuals[j-1]
    double fitted_ratio = 0.0;      ///< exp of the log-residual slope
    int iterations = 0;
    bool converged = false;
};

struct PicardResult {
    TwoTimeField field;
    PicardDiagnostics diagnostics;
};

struct PicardOptions {
    double tol = 1e-12;
    int max_iter = 50;
    int threads = 1;
    /// Start the iteration from this field's diagonal instead of the frozen
    /// terminal guess.
    const TwoTimeField* initial = nullptr;
    /// Supplies the window's terminal layer when the window ends before T.
    /// Without it the region right of the window is solved first.
    const TwoTimeField* outer = nullptr;
};

/// Fixed-point iteration on the window [S, T'] (grid nodes): each iterate
/// solves the BSDE family of labels t_i in [S, T'] with the previous
/// iterate's diagonal frozen in g's y' slot. The residual is the largest
/// sample L2 norm of the change of Y or Z over the window's cells.
PicardResult picard_solve(const ProblemSpec& spec, const PathEnsemble& ens, double window_start,
                          double window_end, const BasisSpec& basis,
                          const PicardOptions& options = {});

/// Solves window_count equal windows right to left: Picard on each window's
/// triangle, then a direct sweep of the earlier labels across the window.
TwoTimeField glue_windows(const ProblemSpec& spec, const PathEnsemble& ens, int window_count,
                          const BasisSpec& basis, const PicardOptions& options = {},
                          std::vector<PicardDiagnostics>* diagnostics = nullptr);

struct FieldSample {
    std::vector<double> values;  ///< n x m
    std::vector<double> mean;
    std::vector<double> se;
};

FieldSample evaluate_field_at(const TwoTimeField& field, int t_index, int s_index);

/// Per-path realized backward sum for label i from level k:
///   psi(t_i, X_N) + sum_{j >= k} [dt g(...) - Z(i,j) dW_j]
/// Its sample mean estimates Y(t_i, s_k), its spread gives a standard error
/// that stays honest on deterministic levels. n x m.
std::vector<double> realized_backward_sum(const TwoTimeField& field, int label, int from_level);

/// CSV rows (i, k, mean..., se..., z_mean...) over solved cells.
void export_field_csv(const TwoTimeField& field, std::ostream& out);

}  // namespace ebsvie
