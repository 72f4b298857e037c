#pragma once

#include <string>
#include <vector>

#include "ebsvie/basis.hpp"
#include "ebsvie/field.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

struct StabilityRow {
    double eps = 0.0;
    double difference = 0.0;
};

struct StabilityReport {
    std::vector<StabilityRow> rows;
    double slope = 0.0;     ///< least-squares slope of log difference vs log eps
    double slope_se = 0.0;  ///< standard error of the slope (0 with two points)
    bool monotone = true;   ///< difference non-decreasing in eps
};

/// Solves psi and psi + eps on the same ensemble and records the largest
/// sample L2 norm over cells of the change in Y. eps = 0 rows are kept but
/// excluded from the fit.
StabilityReport stability_probe(const ProblemSpec& spec, const PathEnsemble& ens,
                                const std::vector<double>& eps_list, const BasisSpec& basis,
                                int threads = 1);

struct ContinuityReport {
    double diagonal_modulus = 0.0;  ///< max_k |mean Y(k+1,k+1) - mean Y(k,k)|
    double label_modulus = 0.0;     ///< max_k max_i |mean Y(i+1,k) - mean Y(i,k)|
    double dt = 0.0;
    double rho_dt = 0.0;            ///< declared modulus at dt
};

ContinuityReport continuity_probe(const TwoTimeField& field, const Modulus& rho = {});

struct AdaptednessReport {
    bool passed = true;
    int cells_checked = 0;
    std::vector<std::string> violations;
};

/// Levels s_k < t: every path must carry Z = 0 and the same Y, exactly.
AdaptednessReport adaptedness_probe(const TwoTimeField& field, double start_t);

struct BackwardIdentityReport {
    double max_residual = 0.0;
    int worst_label = 0;
    int worst_level = 0;
    std::size_t evaluations = 0;
};

/// One-step residual of Y = Theta(t_i, s_k, x) against
///   E[Theta(t_i, s_{k+1}, X') + dt g(t_i, s_{k+1}, X', Theta(t_i, s_{k+1}, X'),
///     Theta(s_{k+1}, s_{k+1}, X'), Theta_x(t_i, s_k, x) sigma)]
/// with X' the Euler step from x, integrated by Gauss-Hermite quadrature.
/// Evaluated at the first `max_paths` states of `ens` per active level that
/// lie in the inner 80% of the mesh.
BackwardIdentityReport backward_identity_residual(const PdeField& field, const ProblemSpec& spec,
                                                  const PathEnsemble& ens, std::size_t max_paths = 200);

}  // namespace ebsvie
