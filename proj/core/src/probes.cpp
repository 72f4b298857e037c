#include "ebsvie/probes.hpp"

#include <array>
#include <cmath>

#include "ebsvie/errors.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/quadrature.hpp"

namespace ebsvie {

StabilityReport stability_probe(const ProblemSpec& spec, const PathEnsemble& ens,
                                const std::vector<double>& eps_list, const BasisSpec& basis, int threads) {
    SolverOptions so;
    so.threads = threads;
    const TwoTimeField base = solve_ebsvie_regression(spec, ens, basis, so);
    const auto m = static_cast<std::size_t>(spec.dim_value);
    StabilityReport rep;
    for (double eps : eps_list) {
        const TwoTimeField pert = solve_ebsvie_regression(spec.with_free_term_shift(eps), ens, basis, so);
        double worst = 0.0;
        for (const auto& [i, k] : TriangularIndex(ens.grid().n_steps()).sweep_order()) {
            if (!base.has_cell(i, k)) continue;
            const auto a = base.y_values(i, k);
            const auto b = pert.y_values(i, k);
            for (std::size_t l = 0; l < m; ++l) {
                double ss = 0.0;
                for (std::size_t p = 0; p < ens.n_paths(); ++p) {
                    const double dv = b[p * m + l] - a[p * m + l];
                    ss += dv * dv;
                }
                worst = std::max(worst, std::sqrt(ss / static_cast<double>(ens.n_paths())));
            }
        }
        rep.rows.push_back({eps, worst});
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rep.rows) {
        if (r.eps > 0.0 && r.difference > 0.0) pts.emplace_back(std::log(r.eps), std::log(r.difference));
    }
    std::vector<StabilityRow> sorted = rep.rows;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.eps < b.eps; });
    for (std::size_t q = 1; q < sorted.size(); ++q) {
        if (sorted[q].difference < sorted[q - 1].difference) rep.monotone = false;
    }
    if (pts.size() >= 2) {
        const double n = static_cast<double>(pts.size());
        double mx = 0.0, my = 0.0;
        for (const auto& [x, y] : pts) {
            mx += x / n;
            my += y / n;
        }
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : pts) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        rep.slope = sxy / sxx;
        if (pts.size() > 2) {
            double rss = 0.0;
            for (const auto& [x, y] : pts) {
                const double e = y - my - rep.slope * (x - mx);
                rss += e * e;
            }
            rep.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
        }
    }
    return rep;
}

ContinuityReport continuity_probe(const TwoTimeField& field, const Modulus& rho) {
    ContinuityReport rep;
    rep.dt = field.grid().dt();
    rep.rho_dt = rho(rep.dt);
    const int n = field.n_steps();
    for (int k = 0; k < n; ++k) {
        if (!field.has_cell(k, k) || !field.has_cell(k + 1, k + 1)) continue;
        const auto a = field.y_stats(k, k).mean;
        const auto b = field.y_stats(k + 1, k + 1).mean;
        for (std::size_t l = 0; l < a.size(); ++l) rep.diagonal_modulus = std::max(rep.diagonal_modulus, std::abs(b[l] - a[l]));
    }
    for (int k = 0; k <= n; ++k) {
        for (int i = 0; i < k; ++i) {
            if (!field.has_cell(i, k) || !field.has_cell(i + 1, k)) continue;
            const auto a = field.y_stats(i, k).mean;
            const auto b = field.y_stats(i + 1, k).mean;
            for (std::size_t l = 0; l < a.size(); ++l) rep.label_modulus = std::max(rep.label_modulus, std::abs(b[l] - a[l]));
        }
    }
    return rep;
}

AdaptednessReport adaptedness_probe(const TwoTimeField& field, double start_t) {
    AdaptednessReport rep;
    const int k0 = field.grid().index_of(start_t);
    if (k0 < 0) throw ArgumentError("validate", "start time is not a grid node");
    const auto m = static_cast<std::size_t>(field.dim_value());
    const std::size_t n = field.n_paths();
    for (int k = 0; k < k0; ++k) {
        for (int i = 0; i <= k; ++i) {
            if (!field.has_cell(i, k)) continue;
            ++rep.cells_checked;
            const std::string where = "(" + std::to_string(i) + "," + std::to_string(k) + ")";
            const auto z = field.z_values(i, k);
            if (std::any_of(z.begin(), z.end(), [](double v) { return v != 0.0; })) {
                rep.violations.push_back("Z non-zero at " + where);
            }
            const auto y = field.y_values(i, k);
            bool same = true;
            for (std::size_t p = 1; p < n && same; ++p) {
                for (std::size_t l = 0; l < m; ++l) {
                    if (y[p * m + l] != y[l]) same = false;
                }
            }
            if (!same) rep.violations.push_back("Y varies across paths at " + where);
        }
    }
    rep.passed = rep.violations.empty();
    return rep;
}

BackwardIdentityReport backward_identity_residual(const PdeField& field, const ProblemSpec& spec,
                                                  const PathEnsemble& ens, std::size_t max_paths) {
    if (spec.dim_state != 1) throw ArgumentError("validate", "backward identity needs d = 1");
    if (!(field.grid() == ens.grid())) throw ArgumentError("validate", "field and ensemble grids differ");
    const TimeGrid& grid = field.grid();
    const SpatialMesh& mesh = field.mesh();
    const int n = grid.n_steps();
    const int m = spec.dim_value;
    const auto um = static_cast<std::size_t>(m);
    const double dt = grid.dt();
    const double sq = std::sqrt(dt);
    const GaussHermite gh = gauss_hermite(12);
    const std::size_t np = std::min(max_paths, ens.n_paths());
    BackwardIdentityReport rep;
    std::array<double, kMaxDim> y{}, yp{}, gv{};
    std::array<double, kMaxDim * kMaxDim> z{};
    for (int k = ens.start_index(); k < n; ++k) {
        const double s = grid.node(k), sn = grid.node(k + 1);
        for (std::size_t p = 0; p < np; ++p) {
            const double x = ens.x(p, k)[0];
            if (!mesh.in_inner(x)) continue;
            double b, sig;
            spec.eval_drift(s, std::span<const double>(&x, 1), std::span<double>(&b, 1));
            spec.eval_diffusion(s, std::span<const double>(&x, 1), std::span<double>(&sig, 1));
            for (int i = 0; i <= k; ++i) {
                for (int l = 0; l < m; ++l) z[static_cast<std::size_t>(l)] = field.derivative(i, k, x, l) * sig;
                for (int l = 0; l < m; ++l) {
                    double e = 0.0;
                    for (std::size_t q = 0; q < gh.nodes.size(); ++q) {
                        const double xn = x + b * dt + sig * sq * gh.nodes[q];
                        double v = field.value(i, k + 1, xn, l);
                        if (!spec.generator_is_zero()) {
                            for (int c = 0; c < m; ++c) {
                                y[static_cast<std::size_t>(c)] = field.value(i, k + 1, xn, c);
                                yp[static_cast<std::size_t>(c)] = field.value(k + 1, k + 1, xn, c);
                            }
                            spec.eval_generator(grid.node(i), sn, std::span<const double>(&xn, 1),
                                                std::span<const double>(y).first(um),
                                                std::span<const double>(yp).first(um),
                                                std::span<const double>(z).first(um), gv);
                            v += dt * gv[static_cast<std::size_t>(l)];
                        }
                        e += gh.weights[q] * v;
                    }
                    const double res = std::abs(field.value(i, k, x, l) - e);
                    ++rep.evaluations;
                    if (res > rep.max_residual) {
                        rep.max_residual = res;
                        rep.worst_label = i;
                        rep.worst_level = k;
                    }
                }
            }
        }
    }
    return rep;
}

}  // namespace ebsvie
