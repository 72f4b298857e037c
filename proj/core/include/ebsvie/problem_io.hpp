#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ebsvie/problem.hpp"

namespace ebsvie {

/// Parses a problem document. Unknown keys and unknown families raise
/// LoadError naming the offender.
ProblemSpec problem_from_json(std::string_view text);
std::string problem_to_json(const ProblemSpec& spec, int indent = 2);

/// FNV-1a 64-bit hash of the canonical (compact) JSON form, as hex.
std::string problem_hash(const ProblemSpec& spec);

/// Built-in instances used by tests, the acceptance suite and the CLI.
namespace catalog {

/// g = 0, psi = c, OU dynamics.
ProblemSpec constant(double c = 1.5);
/// sigma = b = 0, g = a y + beta y', psi(t) = 1 + t/2.
ProblemSpec deterministic_linear(double a = -0.5, double beta = 0.5);
/// sigma = b = 0, g = beta y', psi = psi0.
ProblemSpec diagonal_volterra(double beta = 0.5, double psi0 = 1.0);
/// b = 0, sigma = 1, g = 0, psi = x^2.
ProblemSpec heat_quadratic();
/// b = 0, sigma = 1, g = 0, psi = x.
ProblemSpec heat_linear();
/// OU dynamics, g = 0.3 tanh(y) + 0.3 cos(y') + 0.3 tanh(z), psi = sin(t) tanh(x).
ProblemSpec nonlinear_ou();
/// sigma = b = 0, g = tanh(y) tanh(y'), psi(t) = 1 + t/2.
ProblemSpec tanh_product();

std::vector<std::string> names();
ProblemSpec by_name(std::string_view name);

}  // namespace catalog

}  // namespace ebsvie
