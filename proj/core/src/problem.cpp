#include "ebsvie/problem.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "ebsvie/errors.hpp"

namespace ebsvie {
namespace {

struct ScalarGenerator {
    double value = 0.0;
    double dy = 0.0;
    double dyp = 0.0;
    std::array<double, kMaxDim> dx{};
    std::array<double, kMaxDim> dz{};
};

double sech2(double v) {
    const double c = std::cosh(v);
    return 1.0 / (c * c);
}

ScalarGenerator scalar_generator(const Generator& g, double t, std::span<const double> x,
                                 double y, double yp, std::span<const double> zrow,
                                 bool want_grads) {
    ScalarGenerator r;
    const auto& p = g.params;
    switch (g.family) {
        case GeneratorFamily::Zero: break;
        case GeneratorFamily::Linear: {
            double zsum = 0.0;
            for (double zj : zrow) zsum += zj;
            double xs = 0.0;
            for (double xl : x) xs += std::sin(xl);
            r.value = p[0] * y + p[1] * yp + p[2] * zsum + p[3] * xs + p[4] * t;
            if (want_grads) {
                r.dy = p[0];
                r.dyp = p[1];
                for (std::size_t j = 0; j < zrow.size(); ++j) r.dz[j] = p[2];
                for (std::size_t l = 0; l < x.size(); ++l) r.dx[l] = p[3] * std::cos(x[l]);
            }
            break;
        }
        case GeneratorFamily::Composite: {
            double zs = 0.0;
            for (double zj : zrow) zs += std::tanh(zj);
            r.value = p[0] * std::tanh(y) + p[1] * std::cos(yp) + p[2] * zs;
            if (want_grads) {
                r.dy = p[0] * sech2(y);
                r.dyp = -p[1] * std::sin(yp);
                for (std::size_t j = 0; j < zrow.size(); ++j) r.dz[j] = p[2] * sech2(zrow[j]);
            }
            break;
        }
        case GeneratorFamily::TanhProduct: {
            const double ty = std::tanh(y);
            const double typ = std::tanh(yp);
            r.value = p[0] * ty * typ;
            if (want_grads) {
                r.dy = p[0] * sech2(y) * typ;
                r.dyp = p[0] * ty * sech2(yp);
            }
            break;
        }
    }
    return r;
}

void check_params(std::size_t got, std::size_t want, std::string_view what,
                  std::string_view family) {
    if (got != want) {
        throw ArgumentError("model", std::string(what) + " family '" + std::string(family) +
                                         "' expects " + std::to_string(want) +
                                         " parameters, got " + std::to_string(got));
    }
}

std::string format_point(double t, double s, std::span<const double> x) {
    std::ostringstream os;
    os << "(t=" << t << ", s=" << s << ", x=[";
    for (std::size_t l = 0; l < x.size(); ++l) os << (l ? "," : "") << x[l];
    os << "])";
    return os.str();
}

struct Probe {
    double t = 0.0;
    double s = 0.0;
    std::array<double, kMaxDim> x{};
    std::array<double, kMaxDim> x_alt{};
    std::array<double, kMaxDim> y{};
    std::array<double, kMaxDim> yp{};
    std::array<double, kMaxDim * kMaxDim> z{};
    double t_alt = 0.0;
};

std::vector<Probe> make_probes(const ProblemSpec& spec, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> box(-3.0, 3.0);
    std::normal_distribution<double> normal(0.0, 2.0);
    std::vector<Probe> probes(static_cast<std::size_t>(n));
    for (auto& p : probes) {
        double a = unit(rng) * spec.horizon;
        double b = unit(rng) * spec.horizon;
        p.t = std::min(a, b);
        p.s = std::max(a, b);
        p.t_alt = unit(rng) * p.s;
        for (int l = 0; l < spec.dim_state; ++l) {
            p.x[static_cast<std::size_t>(l)] = normal(rng);
            p.x_alt[static_cast<std::size_t>(l)] = normal(rng);
        }
        for (int l = 0; l < spec.dim_value; ++l) {
            p.y[static_cast<std::size_t>(l)] = box(rng);
            p.yp[static_cast<std::size_t>(l)] = box(rng);
        }
        for (int l = 0; l < spec.dim_value * spec.dim_state; ++l) {
            p.z[static_cast<std::size_t>(l)] = box(rng);
        }
    }
    return probes;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double rel_err(double analytic, double fd) {
    return std::abs(analytic - fd) / std::max(1.0, std::abs(analytic));
}

}  // namespace

void ProblemSpec::check() const {
    if (dim_state < 1 || dim_state > kMaxDim) {
        throw ArgumentError("model", "dim_state must be in [1," + std::to_string(kMaxDim) + "]");
    }
    if (dim_value < 1 || dim_value > kMaxDim) {
        throw ArgumentError("model", "dim_value must be in [1," + std::to_string(kMaxDim) + "]");
    }
    if (dim_noise != dim_state) {
        throw ArgumentError("model", "dim_noise must equal dim_state");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ArgumentError("model", "horizon must be finite and positive");
    }
    if (!(lipschitz_L >= 0.0)) throw ArgumentError("model", "lipschitz_L must be >= 0");
    check_params(drift.params.size(), param_count(drift.family), "drift",
                 family_name(drift.family));
    check_params(diffusion.params.size(), param_count(diffusion.family), "diffusion",
                 family_name(diffusion.family));
    check_params(generator.params.size(), param_count(generator.family), "generator",
                 family_name(generator.family));
    check_params(free_term.params.size(), param_count(free_term.family), "free_term",
                 family_name(free_term.family));
    check_params(modulus_rho.params.size(), param_count(modulus_rho.family), "modulus_rho",
                 family_name(modulus_rho.family));
}

void ProblemSpec::eval_drift(double, std::span<const double> x, std::span<double> out) const {
    for (int l = 0; l < dim_state; ++l) out[l] = drift.value(x[l]);
}

void ProblemSpec::eval_diffusion(double, std::span<const double> x,
                                 std::span<double> out) const {
    const int d = dim_state;
    std::fill(out.begin(), out.begin() + d * d, 0.0);
    for (int l = 0; l < d; ++l) out[l * d + l] = diffusion.value(x[l]);
}

void ProblemSpec::eval_drift_jac(double, std::span<const double> x,
                                 std::span<double> out) const {
    const int d = dim_state;
    std::fill(out.begin(), out.begin() + d * d, 0.0);
    for (int l = 0; l < d; ++l) out[l * d + l] = drift.derivative(x[l]);
}

void ProblemSpec::eval_diffusion_jac(double, std::span<const double> x,
                                     std::span<double> out) const {
    // Column i of sigma is f(x_i) e_i, so its Jacobian has the single entry (i,i).
    const int d = dim_state;
    std::fill(out.begin(), out.begin() + d * d * d, 0.0);
    for (int i = 0; i < d; ++i) out[i * d * d + i * d + i] = diffusion.derivative(x[i]);
}

void ProblemSpec::eval_generator(double t, double s, std::span<const double> x,
                                 std::span<const double> y, std::span<const double> yp,
                                 std::span<const double> z, std::span<double> out) const {
    if (t > s + 1e-12 * std::max(1.0, horizon)) {
        throw DomainError("model", "generator evaluated with t > s " + format_point(t, s, x));
    }
    const auto d = static_cast<std::size_t>(dim_state);
    for (int l = 0; l < dim_value; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        out[ul] = scalar_generator(generator, t, x.first(d), y[ul], yp[ul], z.subspan(ul * d, d),
                                   false)
                      .value;
    }
}

GeneratorJacobian ProblemSpec::eval_generator_grads(double t, double s,
                                                    std::span<const double> x,
                                                    std::span<const double> y,
                                                    std::span<const double> yp,
                                                    std::span<const double> z) const {
    if (t > s + 1e-12 * std::max(1.0, horizon)) {
        throw DomainError("model", "generator evaluated with t > s " + format_point(t, s, x));
    }
    GeneratorJacobian jac;
    const int d = dim_state;
    const int m = dim_value;
    const auto ud = static_cast<std::size_t>(d);
    for (int l = 0; l < m; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        const auto r =
            scalar_generator(generator, t, x.first(ud), y[ul], yp[ul], z.subspan(ul * ud, ud), true);
        for (int c = 0; c < d; ++c) jac.gx[static_cast<std::size_t>(l * d + c)] = r.dx[c];
        jac.gy[static_cast<std::size_t>(l * m + l)] = r.dy;
        jac.gyp[static_cast<std::size_t>(l * m + l)] = r.dyp;
        for (int j = 0; j < d; ++j) {
            jac.gz[static_cast<std::size_t>(l * m * d + l * d + j)] = r.dz[static_cast<std::size_t>(j)];
        }
    }
    return jac;
}

void ProblemSpec::eval_free_term(double t, std::span<const double> x,
                                 std::span<double> out) const {
    const auto& p = free_term.params;
    double xs = 0.0;
    double xsq = 0.0;
    for (int l = 0; l < dim_state; ++l) {
        xs += x[l];
        xsq += x[l] * x[l];
    }
    double v = 0.0;
    switch (free_term.family) {
        case FreeTermFamily::Constant: v = p[0]; break;
        case FreeTermFamily::AffineT: v = p[0] + p[1] * t; break;
        case FreeTermFamily::AffineX: v = p[0] * xs + p[1]; break;
        case FreeTermFamily::QuadraticX: v = p[0] * xsq + p[1]; break;
        case FreeTermFamily::SinTTanhX: v = p[0] * std::sin(t) * std::tanh(xs); break;
    }
    v += free_term.shift;
    for (int l = 0; l < dim_value; ++l) out[l] = v;
}

void ProblemSpec::eval_free_term_jac(double t, std::span<const double> x,
                                     std::span<double> out) const {
    const auto& p = free_term.params;
    const int d = dim_state;
    double xs = 0.0;
    for (int l = 0; l < d; ++l) xs += x[l];
    for (int c = 0; c < d; ++c) {
        double v = 0.0;
        switch (free_term.family) {
            case FreeTermFamily::Constant:
            case FreeTermFamily::AffineT: v = 0.0; break;
            case FreeTermFamily::AffineX: v = p[0]; break;
            case FreeTermFamily::QuadraticX: v = 2.0 * p[0] * x[c]; break;
            case FreeTermFamily::SinTTanhX: v = p[0] * std::sin(t) * sech2(xs); break;
        }
        for (int l = 0; l < dim_value; ++l) out[l * d + c] = v;
    }
}

ProblemSpec ProblemSpec::with_free_term_shift(double eps) const {
    ProblemSpec copy = *this;
    copy.free_term.shift += eps;
    return copy;
}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AssumptionCheck& c) { return c.passed; });
}

const AssumptionCheck& ValidationReport::check(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return c;
    }
    throw ArgumentError("model", "no validation check named '" + name + "'");
}

ValidationReport validate_spec(const ProblemSpec& spec, int n_probes, std::uint64_t seed) {
    spec.check();
    if (n_probes < 1) throw ArgumentError("model", "n_probes must be >= 1");
    const int d = spec.dim_state;
    const int m = spec.dim_value;
    const auto ud = static_cast<std::size_t>(d);
    const auto um = static_cast<std::size_t>(m);

    ValidationReport report;
    report.n_probes = n_probes;
    report.seed = seed;

    AssumptionCheck grads{"generator_grads", true, 0.0, 1e-5, ""};
    AssumptionCheck fwd_grads{"forward_jacobians", true, 0.0, 1e-5, ""};
    AssumptionCheck psi_grads{"free_term_jacobian", true, 0.0, 1e-5, ""};
    AssumptionCheck lip_y{"lipschitz_gy", true, 0.0, spec.lipschitz_L, ""};
    AssumptionCheck lip_yp{"lipschitz_gyp", true, 0.0, spec.lipschitz_L, ""};
    AssumptionCheck lip_z{"lipschitz_gz", true, 0.0, spec.lipschitz_L, ""};
    AssumptionCheck bounded{"bounded_derivatives", true, 0.0, 0.0, ""};
    AssumptionCheck modulus{"t_modulus", true, 0.0, 1.0, ""};
    AssumptionCheck xind{"x_independent", true, 0.0, 0.0, ""};

    std::array<double, kMaxDim> gbuf{}, gplus{}, gminus{}, psibuf{}, psialt{}, bbuf{};
    std::array<double, kMaxDim * kMaxDim> sbuf{}, bjac{}, psijac{};
    std::array<double, kMaxDim * kMaxDim * kMaxDim> sjac{};

    auto fd_step = [](double v) { return 1e-5 * std::max(1.0, std::abs(v)); };

    for (const auto& probe : make_probes(spec, n_probes, seed)) {
        auto x = std::span<const double>(probe.x).first(ud);
        auto y = std::span<const double>(probe.y).first(um);
        auto yp = std::span<const double>(probe.yp).first(um);
        auto z = std::span<const double>(probe.z).first(um * ud);
        const std::string where = format_point(probe.t, probe.s, x);

        spec.eval_generator(probe.t, probe.s, x, y, yp, z, gbuf);
        spec.eval_free_term(probe.t, x, psibuf);
        spec.eval_drift(probe.s, x, bbuf);
        spec.eval_diffusion(probe.s, x, sbuf);
        spec.eval_drift_jac(probe.s, x, bjac);
        spec.eval_diffusion_jac(probe.s, x, sjac);
        spec.eval_free_term_jac(probe.t, x, psijac);
        const auto jac = spec.eval_generator_grads(probe.t, probe.s, x, y, yp, z);
        if (!all_finite(std::span<const double>(gbuf).first(um)) ||
            !all_finite(std::span<const double>(psibuf).first(um)) ||
            !all_finite(std::span<const double>(bbuf).first(ud)) ||
            !all_finite(std::span<const double>(sbuf).first(ud * ud)) ||
            !all_finite(jac.gx) || !all_finite(jac.gy) || !all_finite(jac.gyp) ||
            !all_finite(jac.gz) || !all_finite(bjac) || !all_finite(sjac) ||
            !all_finite(psijac)) {
            throw ValidationError("model", "non-finite coefficient value at probe " + where);
        }

        // Generator partials against central differences.
        auto fd_generator = [&](auto perturb, double h) {
            Probe pp = probe, pm = probe;
            perturb(pp, +h);
            perturb(pm, -h);
            spec.eval_generator(pp.t, pp.s, std::span<const double>(pp.x).first(ud),
                                std::span<const double>(pp.y).first(um),
                                std::span<const double>(pp.yp).first(um),
                                std::span<const double>(pp.z).first(um * ud), gplus);
            spec.eval_generator(pm.t, pm.s, std::span<const double>(pm.x).first(ud),
                                std::span<const double>(pm.y).first(um),
                                std::span<const double>(pm.yp).first(um),
                                std::span<const double>(pm.z).first(um * ud), gminus);
        };
        for (int c = 0; c < d; ++c) {
            const double h = fd_step(probe.x[static_cast<std::size_t>(c)]);
            fd_generator([c](Probe& p, double e) { p.x[static_cast<std::size_t>(c)] += e; }, h);
            for (int l = 0; l < m; ++l) {
                const double fd = (gplus[static_cast<std::size_t>(l)] - gminus[static_cast<std::size_t>(l)]) / (2 * h);
                grads.worst = std::max(grads.worst, rel_err(jac.gx[static_cast<std::size_t>(l * d + c)], fd));
            }
        }
        for (int c = 0; c < m; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            const double hy = fd_step(probe.y[uc]);
            fd_generator([uc](Probe& p, double e) { p.y[uc] += e; }, hy);
            for (int l = 0; l < m; ++l) {
                const double fd = (gplus[static_cast<std::size_t>(l)] - gminus[static_cast<std::size_t>(l)]) / (2 * hy);
                grads.worst = std::max(grads.worst, rel_err(jac.gy[static_cast<std::size_t>(l * m + c)], fd));
            }
            const double hyp = fd_step(probe.yp[uc]);
            fd_generator([uc](Probe& p, double e) { p.yp[uc] += e; }, hyp);
            for (int l = 0; l < m; ++l) {
                const double fd = (gplus[static_cast<std::size_t>(l)] - gminus[static_cast<std::size_t>(l)]) / (2 * hyp);
                grads.worst = std::max(grads.worst, rel_err(jac.gyp[static_cast<std::size_t>(l * m + c)], fd));
            }
        }
        for (int c = 0; c < m * d; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            const double h = fd_step(probe.z[uc]);
            fd_generator([uc](Probe& p, double e) { p.z[uc] += e; }, h);
            for (int l = 0; l < m; ++l) {
                const double fd = (gplus[static_cast<std::size_t>(l)] - gminus[static_cast<std::size_t>(l)]) / (2 * h);
                grads.worst = std::max(grads.worst, rel_err(jac.gz[static_cast<std::size_t>(l * m * d + c)], fd));
            }
        }

        // Forward coefficient and free-term Jacobians.
        for (int c = 0; c < d; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            const double h = fd_step(probe.x[uc]);
            auto xp = probe.x, xm = probe.x;
            xp[uc] += h;
            xm[uc] -= h;
            std::array<double, kMaxDim> bp{}, bm{}, pp{}, pm{};
            std::array<double, kMaxDim * kMaxDim> sp{}, sm{};
            spec.eval_drift(probe.s, std::span<const double>(xp).first(ud), bp);
            spec.eval_drift(probe.s, std::span<const double>(xm).first(ud), bm);
            spec.eval_diffusion(probe.s, std::span<const double>(xp).first(ud), sp);
            spec.eval_diffusion(probe.s, std::span<const double>(xm).first(ud), sm);
            spec.eval_free_term(probe.t, std::span<const double>(xp).first(ud), pp);
            spec.eval_free_term(probe.t, std::span<const double>(xm).first(ud), pm);
            for (int r = 0; r < d; ++r) {
                const auto ur = static_cast<std::size_t>(r);
                fwd_grads.worst = std::max(
                    fwd_grads.worst,
                    rel_err(bjac[static_cast<std::size_t>(r * d + c)], (bp[ur] - bm[ur]) / (2 * h)));
                for (int i = 0; i < d; ++i) {
                    const auto col = static_cast<std::size_t>(r * d + i);
                    const double fd = (sp[col] - sm[col]) / (2 * h);
                    fwd_grads.worst = std::max(
                        fwd_grads.worst,
                        rel_err(sjac[static_cast<std::size_t>(i * d * d + r * d + c)], fd));
                }
            }
            for (int l = 0; l < m; ++l) {
                const auto ul = static_cast<std::size_t>(l);
                psi_grads.worst = std::max(
                    psi_grads.worst, rel_err(psijac[static_cast<std::size_t>(l * d + c)],
                                             (pp[ul] - pm[ul]) / (2 * h)));
            }
        }

        // Lipschitz constants: operator norms of g_y, g_y', g_z.
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            gy(jac.gy.data(), m, m), gyp(jac.gyp.data(), m, m), gz(jac.gz.data(), m, m * d);
        auto opnorm = [](const auto& a) {
            Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(a)};
            return svd.singularValues()(0);
        };
        lip_y.worst = std::max(lip_y.worst, opnorm(gy));
        lip_yp.worst = std::max(lip_yp.worst, opnorm(gyp));
        lip_z.worst = std::max(lip_z.worst, opnorm(gz));

        // Sampled derivative magnitudes, reported for the bounded-derivative clauses.
        double dmax = 0.0;
        for (double v : bjac) dmax = std::max(dmax, std::abs(v));
        for (double v : sjac) dmax = std::max(dmax, std::abs(v));
        for (double v : psijac) dmax = std::max(dmax, std::abs(v));
        for (double v : jac.gx) dmax = std::max(dmax, std::abs(v));
        bounded.worst = std::max(bounded.worst, dmax);

        // Label-direction modulus of continuity for psi and g.
        const double dt = std::abs(probe.t - probe.t_alt);
        if (dt > 0.0) {
            const double rho = spec.modulus_rho(dt);
            std::array<double, kMaxDim> galt{};
            spec.eval_free_term(probe.t_alt, x, psialt);
            spec.eval_generator(probe.t_alt, probe.s, x, y, yp, z, galt);
            for (int l = 0; l < m; ++l) {
                const auto ul = static_cast<std::size_t>(l);
                const double diff = std::max(std::abs(psibuf[ul] - psialt[ul]),
                                             std::abs(gbuf[ul] - galt[ul]));
                const double ratio = rho > 0.0 ? diff / rho : (diff > 0.0 ? INFINITY : 0.0);
                modulus.worst = std::max(modulus.worst, ratio);
            }
        }

        if (spec.flags.x_independent) {
            auto xa = std::span<const double>(probe.x_alt).first(ud);
            std::array<double, kMaxDim> galt{};
            spec.eval_generator(probe.t, probe.s, xa, y, yp, z, galt);
            spec.eval_free_term(probe.t, xa, psialt);
            for (int l = 0; l < m; ++l) {
                const auto ul = static_cast<std::size_t>(l);
                if (galt[ul] != gbuf[ul] || psialt[ul] != psibuf[ul]) {
                    xind.passed = false;
                    xind.worst = std::max({xind.worst, std::abs(galt[ul] - gbuf[ul]),
                                           std::abs(psialt[ul] - psibuf[ul])});
                    xind.detail = "data depend on x at probe " + where;
                }
            }
        }
    }

    auto finish_le = [](AssumptionCheck& c, const std::string& label) {
        c.passed = c.worst <= c.bound * (1.0 + 1e-12);
        if (!c.passed) {
            std::ostringstream os;
            os << label << " bound exceeded: " << c.worst << " > " << c.bound;
            c.detail = os.str();
        }
    };
    finish_le(grads, "generator derivative consistency");
    finish_le(fwd_grads, "forward Jacobian consistency");
    finish_le(psi_grads, "free term Jacobian consistency");
    finish_le(lip_y, "g_y");
    finish_le(lip_yp, "g_y'");
    finish_le(lip_z, "g_z");
    finish_le(modulus, "t-modulus ratio");
    bounded.bound = bounded.worst;
    bounded.passed = std::isfinite(bounded.worst);

    report.sampled_lipschitz = std::max({lip_y.worst, lip_yp.worst, lip_z.worst});
    report.checks = {grads, fwd_grads, psi_grads, lip_y, lip_yp, lip_z, bounded, modulus, xind};
    return report;
}

std::string_view to_string(ReductionClass c) {
    switch (c) {
        case ReductionClass::EBSVIE: return "EBSVIE";
        case ReductionClass::BSDE_FAMILY: return "BSDE_FAMILY";
        case ReductionClass::BSVIE: return "BSVIE";
        case ReductionClass::DETERMINISTIC: return "DETERMINISTIC";
    }
    return "EBSVIE";
}

ReductionClass classify(const ProblemSpec& spec) {
    // Fixed probe set: classification must not depend on any caller seed.
    constexpr std::uint64_t kClassifySeed = 0x5eed'c1a5'51f1ULL;
    const auto ud = static_cast<std::size_t>(spec.dim_state);
    const auto um = static_cast<std::size_t>(spec.dim_value);
    bool depends_yp = false, depends_y = false, depends_x = false, noisy = false;
    std::array<double, kMaxDim> g0{}, g1{}, p0{}, p1{};
    std::array<double, kMaxDim * kMaxDim> sig{};
    try {
        for (const auto& probe : make_probes(spec, 64, kClassifySeed)) {
            auto x = std::span<const double>(probe.x).first(ud);
            auto xa = std::span<const double>(probe.x_alt).first(ud);
            auto y = std::span<const double>(probe.y).first(um);
            auto yp = std::span<const double>(probe.yp).first(um);
            auto z = std::span<const double>(probe.z).first(um * ud);
            spec.eval_generator(probe.t, probe.s, x, y, yp, z, g0);

            auto yp2 = probe.yp;
            for (auto& v : yp2) v = 0.5 * v + 0.7;
            spec.eval_generator(probe.t, probe.s, x, y, std::span<const double>(yp2).first(um), z, g1);
            if (g0 != g1) depends_yp = true;

            auto y2 = probe.y;
            for (auto& v : y2) v = 0.5 * v + 0.7;
            spec.eval_generator(probe.t, probe.s, x, std::span<const double>(y2).first(um), yp, z, g1);
            if (g0 != g1) depends_y = true;

            spec.eval_generator(probe.t, probe.s, xa, y, yp, z, g1);
            spec.eval_free_term(probe.t, x, p0);
            spec.eval_free_term(probe.t, xa, p1);
            if (g0 != g1 || p0 != p1) depends_x = true;

            spec.eval_diffusion(probe.s, x, sig);
            for (std::size_t c = 0; c < ud * ud; ++c) {
                if (sig[c] != 0.0) noisy = true;
            }
        }
    } catch (const Error&) {
        return ReductionClass::EBSVIE;
    }
    if (!noisy || !depends_x) return ReductionClass::DETERMINISTIC;
    if (!depends_yp) return ReductionClass::BSDE_FAMILY;
    if (!depends_y) return ReductionClass::BSVIE;
    return ReductionClass::EBSVIE;
}

}  // namespace ebsvie
