#pragma once

#include <vector>

namespace ebsvie {

/// Gauss-Hermite rule for the standard normal law: sum_q w_q f(xi_q)
/// integrates polynomials of degree <= 2n-1 exactly. Nodes are symmetric.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};

GaussHermite gauss_hermite(int n);

/// Tensor product of the one-dimensional rule in `dim` dimensions; nodes are
/// stored row-major (count x dim).
struct TensorRule {
    int dim = 1;
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return weights.size(); }
};

TensorRule tensor_rule(int n, int dim);

}  // namespace ebsvie
