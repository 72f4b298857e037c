#include "ebsvie/quadrature.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "ebsvie/errors.hpp"

namespace ebsvie {

GaussHermite gauss_hermite(int n) {
    if (n < 1) throw ArgumentError("quadrature", "Gauss-Hermite order must be >= 1");
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    GaussHermite rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        rule.nodes[static_cast<std::size_t>(q)] = eig.eigenvalues()(q);
        const double v = eig.eigenvectors()(0, q);
        rule.weights[static_cast<std::size_t>(q)] = v * v;
    }
    for (int q = 0; q < n / 2; ++q) {
        const auto a = static_cast<std::size_t>(q);
        const auto b = static_cast<std::size_t>(n - 1 - q);
        const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
        const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
        rule.nodes[a] = -x;
        rule.nodes[b] = x;
        rule.weights[a] = rule.weights[b] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    double total = 0.0;
    for (double w : rule.weights) total += w;
    for (double& w : rule.weights) w /= total;
    return rule;
}

TensorRule tensor_rule(int n, int dim) {
    const GaussHermite g = gauss_hermite(n);
    TensorRule rule;
    rule.dim = dim;
    std::size_t count = 1;
    for (int l = 0; l < dim; ++l) count *= static_cast<std::size_t>(n);
    rule.nodes.resize(count * static_cast<std::size_t>(dim));
    rule.weights.resize(count);
    for (std::size_t c = 0; c < count; ++c) {
        std::size_t rem = c;
        double w = 1.0;
        for (int l = 0; l < dim; ++l) {
            const std::size_t q = rem % static_cast<std::size_t>(n);
            rem /= static_cast<std::size_t>(n);
            rule.nodes[c * static_cast<std::size_t>(dim) + static_cast<std::size_t>(l)] = g.nodes[q];
            w *= g.weights[q];
        }
        rule.weights[c] = w;
    }
    return rule;
}

}  // namespace ebsvie
