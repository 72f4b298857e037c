#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ebsvie {

/// Largest state / value dimension the catalog supports.
inline constexpr int kMaxDim = 3;

// Coefficients come from a fixed catalog of named families with numeric
// parameters. Every family carries analytic first derivatives. Families act
// componentwise: drift and diffusion are diagonal in the state, generators and
// free terms apply the same scalar law to each value component.

enum class DriftFamily { Zero, Constant, Affine, OrnsteinUhlenbeck, Sine };
enum class DiffusionFamily { Zero, Constant, Geometric, Affine, Cosine };
enum class GeneratorFamily { Zero, Linear, Composite, TanhProduct };
enum class FreeTermFamily { Constant, AffineT, AffineX, QuadraticX, SinTTanhX };
enum class ModulusFamily { Power };

/// b(s,x), diagonal: b_l depends on x_l only.
///   zero []              b = 0
///   constant [c]         b_l = c
///   affine [a, c]        b_l = a x_l + c
///   ou [theta, mu]       b_l = theta (mu - x_l)
///   sine [a]             b_l = a sin(x_l)
struct Drift {
    DriftFamily family = DriftFamily::Zero;
    std::vector<double> params;

    double value(double x) const;
    double derivative(double x) const;
};

/// sigma(s,x) = diag(f(x_1), ..., f(x_d)).
///   zero []              f = 0
///   constant [c]         f = c
///   geometric [nu]       f = nu x
///   affine [c, nu]       f = c + nu x
///   cosine [c, a]        f = c + a cos(x)
struct Diffusion {
    DiffusionFamily family = DiffusionFamily::Zero;
    std::vector<double> params;

    double value(double x) const;
    double derivative(double x) const;
};

/// Per-component scalar law g(t, s, x, y, y', z_row) with z_row the d noise
/// loadings of that component.
///   zero []                               g = 0
///   linear [a, beta, gamma, kappa, c_t]   g = a y + beta y' + gamma sum_j z_j
///                                             + kappa sum_l sin(x_l) + c_t t
///   composite [c_y, c_yp, c_z]            g = c_y tanh(y) + c_yp cos(y')
///                                             + c_z sum_j tanh(z_j)
///   tanh_product [c]                      g = c tanh(y) tanh(y')
struct Generator {
    GeneratorFamily family = GeneratorFamily::Zero;
    std::vector<double> params;
};

/// psi(t,x) per component, with X = sum_l x_l.
///   constant [c]            psi = c
///   affine_t [c0, c1]       psi = c0 + c1 t
///   affine_x [a, c]         psi = a X + c
///   quadratic_x [a, c]      psi = a sum_l x_l^2 + c
///   sin_t_tanh_x [a]        psi = a sin(t) tanh(X)
/// `shift` is added to every component (used by perturbation probes).
struct FreeTerm {
    FreeTermFamily family = FreeTermFamily::Constant;
    std::vector<double> params{0.0};
    double shift = 0.0;
};

/// rho(delta) = C delta^alpha.
struct Modulus {
    ModulusFamily family = ModulusFamily::Power;
    std::vector<double> params{1.0, 1.0};

    double operator()(double delta) const;
};

std::string_view family_name(DriftFamily f);
std::string_view family_name(DiffusionFamily f);
std::string_view family_name(GeneratorFamily f);
std::string_view family_name(FreeTermFamily f);
std::string_view family_name(ModulusFamily f);

// Name -> family lookups; throw LoadError naming the offending family.
DriftFamily drift_family_from(std::string_view name);
DiffusionFamily diffusion_family_from(std::string_view name);
GeneratorFamily generator_family_from(std::string_view name);
FreeTermFamily free_term_family_from(std::string_view name);
ModulusFamily modulus_family_from(std::string_view name);

/// Number of parameters each family expects.
std::size_t param_count(DriftFamily f);
std::size_t param_count(DiffusionFamily f);
std::size_t param_count(GeneratorFamily f);
std::size_t param_count(FreeTermFamily f);
std::size_t param_count(ModulusFamily f);

}  // namespace ebsvie
