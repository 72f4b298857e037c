#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ebsvie/basis.hpp"
#include "ebsvie/field.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem.hpp"
#include "ebsvie/quadrature.hpp"

namespace ebsvie::detail {

/// Everything about level k that does not depend on the label: the
/// regression basis at X_k and, for every path, the Gaussian Euler
/// transition to level k+1 integrated against the level-(k+1) basis.
struct LevelContext {
    int k = 0;
    bool frozen = false;         ///< s_k before the start time
    bool terminal_next = false;  ///< k + 1 == N, psi is integrated directly
    LevelModel model;
    std::shared_ptr<const LeastSquaresProjector> proj;

    // Non-terminal levels: projections of E[phi'(X')|X_k] and
    // E[phi'(X') xi_j|X_k]/sqrt(dt) onto phi(X_k), nb x nb'.
    Eigen::MatrixXd K;
    std::vector<Eigen::MatrixXd> KZ;

    // Raw per-path moments (n x nb'), kept on request:
    // M = E[phi'], MZ[j] = E[phi' xi_j], MZZ[i*d+j] = E[phi' xi_i xi_j].
    Eigen::MatrixXd M;
    std::vector<Eigen::MatrixXd> MZ;
    std::vector<Eigen::MatrixXd> MZZ;

    // Transition data: X' = mu + S xi, n x d and n x d x d.
    TensorRule rule;
    std::vector<double> mu;
    std::vector<double> scaled_sigma;
    double sqrt_dt = 0.0;
};

/// Constant-basis level model used wherever X_k is deterministic.
LevelModel constant_level_model(int dim);

/// `next_basis` is the level-(k+1) basis; ignored when k+1 == N.
LevelContext build_level(const ProblemSpec& spec, const PathEnsemble& ens, int k,
                         const BasisSpec& basis, const PolynomialBasis* next_basis,
                         bool keep_moments, int threads);

/// Evaluates sum_b coeffs(b, col) phi_b(x).
double combine(const PolynomialBasis& basis, std::span<const double> x,
               const Eigen::MatrixXd& coeffs, Eigen::Index col);

}  // namespace ebsvie::detail
