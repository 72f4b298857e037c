#include "ebsvie/basis.hpp"

#include <algorithm>
#include <cmath>

#include "ebsvie/errors.hpp"

namespace ebsvie {
namespace {

void enumerate(int n_vars, int degree, std::vector<int>& current, int var, int remaining,
               std::vector<std::vector<int>>& out) {
    if (var == n_vars) {
        out.push_back(current);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        current[static_cast<std::size_t>(var)] = e;
        enumerate(n_vars, degree, current, var + 1, remaining - e, out);
    }
}

std::vector<std::vector<int>> monomials(int n_vars, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(static_cast<std::size_t>(n_vars), 0);
    enumerate(n_vars, degree, current, 0, degree, out);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int e : a) sa += e;
        for (int e : b) sb += e;
        return sa < sb;
    });
    return out;
}

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double first = v(0);
    for (Eigen::Index p = 1; p < v.size(); ++p) {
        if (v(p) != first) return false;
    }
    return true;
}

}  // namespace

PolynomialBasis::PolynomialBasis(int dim, int degree, std::vector<int> active,
                                 std::vector<double> center, std::vector<double> scale)
    : dim_(dim),
      degree_(degree),
      active_(std::move(active)),
      center_(std::move(center)),
      scale_(std::move(scale)) {
    if (degree_ < 0) throw ArgumentError("solver_mc", "basis degree must be >= 0");
    exponents_ = monomials(static_cast<int>(active_.size()), degree_);
    if (exponents_.size() > kMaxBasisSize) {
        throw ArgumentError("solver_mc", "basis has " + std::to_string(exponents_.size()) +
                                             " functions, limit is " + std::to_string(kMaxBasisSize));
    }
}

PolynomialBasis PolynomialBasis::fit(std::span<const double> states, std::size_t n, int dim,
                                     int degree) {
    const auto ud = static_cast<std::size_t>(dim);
    std::vector<int> active;
    std::vector<double> center, scale;
    for (std::size_t l = 0; l < ud; ++l) {
        double mean = 0.0, lo = states[l], hi = states[l];
        for (std::size_t p = 0; p < n; ++p) {
            const double v = states[p * ud + l];
            mean += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        mean /= static_cast<double>(n);
        if (hi == lo) continue;
        double var = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            const double dv = states[p * ud + l] - mean;
            var += dv * dv;
        }
        const double sd = std::sqrt(var / static_cast<double>(n));
        if (sd > 1e-12 * (1.0 + std::abs(mean))) {
            active.push_back(static_cast<int>(l));
            center.push_back(mean);
            scale.push_back(sd);
        }
    }
    const int used_degree = active.empty() ? 0 : degree;
    return PolynomialBasis(dim, used_degree, std::move(active), std::move(center), std::move(scale));
}

void PolynomialBasis::eval(std::span<const double> x, std::span<double> out) const {
    const std::size_t na = active_.size();
    if (na == 0) {
        out[0] = 1.0;
        return;
    }
    double powers[3][16];
    for (std::size_t a = 0; a < na; ++a) {
        const double u = (x[static_cast<std::size_t>(active_[a])] - center_[a]) / scale_[a];
        powers[a][0] = 1.0;
        for (int e = 1; e <= degree_; ++e) powers[a][e] = powers[a][e - 1] * u;
    }
    for (std::size_t b = 0; b < exponents_.size(); ++b) {
        double v = 1.0;
        for (std::size_t a = 0; a < na; ++a) v *= powers[a][exponents_[b][a]];
        out[b] = v;
    }
}

double PolynomialBasis::eval_combination(std::span<const double> x, std::span<const double> coeffs,
                                         std::span<double> scratch) const {
    if (exponents_.size() == 1) return coeffs[0];
    eval(x, scratch);
    double acc = 0.0;
    for (std::size_t b = 0; b < exponents_.size(); ++b) acc += coeffs[b] * scratch[b];
    return acc;
}

LeastSquaresProjector::LeastSquaresProjector(const PolynomialBasis& basis,
                                             std::span<const double> states, std::size_t n,
                                             const std::string& where)
    : n_(n), nb_(basis.size()) {
    if (basis.degree() > 15) throw ArgumentError("solver_mc", "basis degree must be <= 15");
    const auto ud = static_cast<std::size_t>(basis.dim());
    phi_.resize(static_cast<Eigen::Index>(n), nb_);
    std::vector<double> row(static_cast<std::size_t>(nb_));
    for (std::size_t p = 0; p < n; ++p) {
        basis.eval(states.subspan(p * ud, ud), row);
        for (int b = 0; b < nb_; ++b) phi_(static_cast<Eigen::Index>(p), b) = row[static_cast<std::size_t>(b)];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    gram_ = (phi_.transpose() * phi_) * inv_n;
    mean_ = phi_.colwise().sum().transpose() * inv_n;
    if (nb_ > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 1e-13 * hi)) {
            throw SolverError("solver_mc", "regression design rank-deficient at " + where +
                                               " (eigenvalue ratio " + std::to_string(lo / hi) +
                                               ")");
        }
        ridge_ = 1e-8 * gram_.trace() / nb_;
    }
    Eigen::MatrixXd reg = gram_;
    reg.diagonal().array() += ridge_;
    factor_.compute(reg);
    if (factor_.info() != Eigen::Success) {
        throw SolverError("solver_mc", "regression Gram factorization failed at " + where);
    }
}

Eigen::MatrixXd LeastSquaresProjector::solve_normal(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd c = factor_.solve(rhs);
    // Iterated refinement removes the ridge bias to the conditioning floor.
    for (int it = 0; it < 2; ++it) c += factor_.solve(rhs - gram_ * c);
    return c;
}

Eigen::MatrixXd LeastSquaresProjector::project(
    const Eigen::Ref<const Eigen::MatrixXd>& targets) const {
    const Eigen::Index r = targets.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nb_, r);
    std::vector<Eigen::Index> general;
    for (Eigen::Index j = 0; j < r; ++j) {
        if (is_constant(targets.col(j))) {
            out(0, j) = targets(0, j);
        } else {
            general.push_back(j);
        }
    }
    if (general.empty()) return out;
    Eigen::MatrixXd sub(targets.rows(), static_cast<Eigen::Index>(general.size()));
    for (std::size_t q = 0; q < general.size(); ++q) sub.col(static_cast<Eigen::Index>(q)) = targets.col(general[q]);
    const Eigen::MatrixXd rhs = (phi_.transpose() * sub) / static_cast<double>(n_);
    const Eigen::MatrixXd c = nb_ == 1 ? rhs : solve_normal(rhs);
    for (std::size_t q = 0; q < general.size(); ++q) out.col(general[q]) = c.col(static_cast<Eigen::Index>(q));
    return out;
}

}  // namespace ebsvie
