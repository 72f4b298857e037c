#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ebsvie/coefficients.hpp"

namespace ebsvie {

/// Declared structural properties of an instance. `classify` probes them
/// independently; `validate_spec` checks the x_independent declaration.
struct SpecFlags {
    bool x_independent = false;
    bool yprime_independent = false;
    bool y_independent = false;
};

/// First partials of the generator at one point. Shapes (row-major):
/// gx m x d, gy m x m, gyp m x m, gz m x (m*d) with column l*d + j holding
/// the derivative with respect to Z(l, j).
struct GeneratorJacobian {
    std::array<double, kMaxDim * kMaxDim> gx{};
    std::array<double, kMaxDim * kMaxDim> gy{};
    std::array<double, kMaxDim * kMaxDim> gyp{};
    std::array<double, kMaxDim * kMaxDim * kMaxDim> gz{};
};

/// One instance of the backward Volterra problem and of the matching
/// non-local PDE: forward coefficients, generator, free term and the
/// constants the well-posedness theory is stated in.
struct ProblemSpec {
    int dim_state = 1;
    int dim_value = 1;
    int dim_noise = 1;
    double horizon = 1.0;

    Drift drift;
    Diffusion diffusion;
    Generator generator;
    FreeTerm free_term;

    double lipschitz_L = 0.0;
    Modulus modulus_rho;
    SpecFlags flags;

    /// Throws ArgumentError on inconsistent dimensions or parameter counts.
    void check() const;

    // Allocation-free evaluation. Output spans must be sized as documented.

    /// b(s,x), out has d entries.
    void eval_drift(double s, std::span<const double> x, std::span<double> out) const;
    /// sigma(s,x), out is d x d row-major.
    void eval_diffusion(double s, std::span<const double> x, std::span<double> out) const;
    /// b_x(s,x), out is d x d row-major.
    void eval_drift_jac(double s, std::span<const double> x, std::span<double> out) const;
    /// sigma^i_x(s,x) for every column i: out[i*d*d + r*d + c] = d sigma_{r,i} / d x_c.
    void eval_diffusion_jac(double s, std::span<const double> x, std::span<double> out) const;

    /// g(t,s,x,y,y',z) with z m x d row-major. Requires t <= s (DomainError).
    void eval_generator(double t, double s, std::span<const double> x, std::span<const double> y,
                        std::span<const double> yp, std::span<const double> z,
                        std::span<double> out) const;
    GeneratorJacobian eval_generator_grads(double t, double s, std::span<const double> x,
                                           std::span<const double> y,
                                           std::span<const double> yp,
                                           std::span<const double> z) const;

    /// psi(t,x), out has m entries.
    void eval_free_term(double t, std::span<const double> x, std::span<double> out) const;
    /// psi_x(t,x), out is m x d row-major.
    void eval_free_term_jac(double t, std::span<const double> x, std::span<double> out) const;

    bool generator_is_zero() const noexcept { return generator.family == GeneratorFamily::Zero; }
    bool diffusion_is_zero() const noexcept { return diffusion.family == DiffusionFamily::Zero; }

    /// Copy with psi replaced by psi + eps.
    ProblemSpec with_free_term_shift(double eps) const;
};

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    double worst = 0.0;  ///< worst sampled value of the checked quantity
    double bound = 0.0;  ///< threshold it was compared against
    std::string detail;
};

struct ValidationReport {
    int n_probes = 0;
    std::uint64_t seed = 0;
    std::vector<AssumptionCheck> checks;
    /// Largest sampled operator norm among g_y, g_y', g_z.
    double sampled_lipschitz = 0.0;

    bool passed() const;
    const AssumptionCheck& check(const std::string& name) const;
};

/// Randomized probing of the standing assumptions with a seeded probe set.
/// Passing is necessary, not sufficient.
ValidationReport validate_spec(const ProblemSpec& spec, int n_probes, std::uint64_t seed);

enum class ReductionClass { EBSVIE, BSDE_FAMILY, BSVIE, DETERMINISTIC };

std::string_view to_string(ReductionClass c);

/// Detects which special case the instance reduces to by probing the
/// dependence of g on y' and y and of all data on x.
ReductionClass classify(const ProblemSpec& spec);

}  // namespace ebsvie
