#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ebsvie {

inline constexpr std::size_t kMaxBasisSize = 128;

struct BasisSpec {
    int degree = 4;
};

/// Total-degree monomials in the standardized state u = (x - center) / scale.
/// Coordinates whose sample spread vanishes are dropped; with no active
/// coordinate the basis is the constant 1 alone. Function 0 is always 1.
class PolynomialBasis {
public:
    PolynomialBasis() = default;
    PolynomialBasis(int dim, int degree, std::vector<int> active, std::vector<double> center,
                    std::vector<double> scale);

    /// Fits center and scale to n states (n x dim row-major).
    static PolynomialBasis fit(std::span<const double> states, std::size_t n, int dim, int degree);

    int dim() const noexcept { return dim_; }
    int degree() const noexcept { return degree_; }
    int size() const noexcept { return static_cast<int>(exponents_.size()); }
    const std::vector<int>& active() const noexcept { return active_; }

    void eval(std::span<const double> x, std::span<double> out) const;
    double eval_combination(std::span<const double> x, std::span<const double> coeffs,
                            std::span<double> scratch) const;

private:
    int dim_ = 1;
    int degree_ = 0;
    std::vector<int> active_;
    std::vector<double> center_;
    std::vector<double> scale_;
    std::vector<std::vector<int>> exponents_{{}};
};

/// Least-squares projection onto a basis over a fixed sample of states.
/// Holds the design matrix Phi (n x nb) and a factorized ridge-regularized
/// Gram matrix G = Phi' Phi / n.
class LeastSquaresProjector {
public:
    /// Throws SolverError (message carries `where`) when G is numerically
    /// rank-deficient: min/max eigenvalue below 1e-13.
    LeastSquaresProjector(const PolynomialBasis& basis, std::span<const double> states,
                          std::size_t n, const std::string& where);

    std::size_t n() const noexcept { return n_; }
    int size() const noexcept { return nb_; }
    const Eigen::MatrixXd& design() const noexcept { return phi_; }
    const Eigen::MatrixXd& gram() const noexcept { return gram_; }
    const Eigen::VectorXd& basis_mean() const noexcept { return mean_; }

    /// Coefficients (nb x r) of the projection of each column of `targets`
    /// (n x r). Exactly constant columns map to (c, 0, ..., 0).
    Eigen::MatrixXd project(const Eigen::Ref<const Eigen::MatrixXd>& targets) const;

private:
    Eigen::MatrixXd solve_normal(const Eigen::MatrixXd& rhs) const;

    std::size_t n_ = 0;
    int nb_ = 1;
    Eigen::MatrixXd phi_;
    Eigen::MatrixXd gram_;
    Eigen::VectorXd mean_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    double ridge_ = 0.0;
};

}  // namespace ebsvie
