#include "ebsvie/oracle.hpp"

#include <array>
#include <cmath>

#include "ebsvie/errors.hpp"

namespace ebsvie {

DeterministicField::DeterministicField(TimeGrid grid, int dim_value)
    : grid_(grid), m_(dim_value), index_(grid.n_steps()), y_(index_.size() * static_cast<std::size_t>(dim_value), 0.0) {}

double DeterministicField::at(int i, int k, int l) const {
    return y_[index_.checked_flat(i, k) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(l)];
}

double& DeterministicField::at(int i, int k, int l) {
    return y_[index_.checked_flat(i, k) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(l)];
}

double DeterministicField::value(double t, double s, int l) const {
    const double T = grid_.horizon();
    if (t < 0.0 || s > T * (1.0 + 1e-12) || t > s * (1.0 + 1e-12) + 1e-15) {
        throw ArgumentError("validate", "oracle evaluated outside the triangle");
    }
    const int n = grid_.n_steps();
    const double dt = grid_.dt();
    const int kb = std::min(static_cast<int>(s / dt), n - 1);
    const double ws = std::clamp((s - grid_.node(kb)) / dt, 0.0, 1.0);
    const int ib = std::min(static_cast<int>(t / dt), n - 1);
    const double wt = std::clamp((t - grid_.node(ib)) / dt, 0.0, 1.0);
    // Clamp labels into the triangle of each level used.
    auto cell = [&](int i, int k) { return at(std::min(i, k), k, l); };
    const double lo = (1.0 - wt) * cell(ib, kb) + wt * cell(ib + 1, kb);
    const double hi = (1.0 - wt) * cell(ib, kb + 1) + wt * cell(ib + 1, kb + 1);
    return (1.0 - ws) * lo + ws * hi;
}

namespace {

bool is_x_free(const ProblemSpec& spec) {
    return spec.flags.x_independent ||
           (spec.diffusion_is_zero() && spec.drift.family == DriftFamily::Zero);
}

}  // namespace

DeterministicField deterministic_oracle(const ProblemSpec& spec, int n_oracle,
                                        std::span<const double> x) {
    spec.check();
    if (!is_x_free(spec)) {
        throw ArgumentError("validate", "deterministic oracle needs sigma = b = 0 or x-independent data");
    }
    if (n_oracle < 1000) throw ArgumentError("validate", "n_oracle must be at least 1000");
    const int m = spec.dim_value, d = spec.dim_state;
    const auto um = static_cast<std::size_t>(m);
    std::array<double, kMaxDim> x0{};
    if (!x.empty()) {
        if (x.size() != static_cast<std::size_t>(d)) throw ArgumentError("validate", "x has wrong dimension");
        std::copy(x.begin(), x.end(), x0.begin());
    }
    const auto xs = std::span<const double>(x0).first(static_cast<std::size_t>(d));
    const std::array<double, kMaxDim * kMaxDim> z{};
    const auto zs = std::span<const double>(z).first(um * static_cast<std::size_t>(d));

    DeterministicField f(make_grid(spec.horizon, n_oracle), m);
    const TimeGrid& grid = f.grid();
    const double h = grid.dt();
    const int n = n_oracle;

    std::array<double, kMaxDim> tmp{};
    for (int i = 0; i <= n; ++i) {
        spec.eval_free_term(grid.node(i), xs, tmp);
        for (int l = 0; l < m; ++l) f.at(i, n, l) = tmp[static_cast<std::size_t>(l)];
    }
    if (spec.generator_is_zero()) {
        for (int k = n - 1; k >= 0; --k) {
            for (int i = 0; i <= k; ++i) {
                for (int l = 0; l < m; ++l) f.at(i, k, l) = f.at(i, n, l);
            }
        }
        return f;
    }

    auto gen = [&](int i, int k, std::span<const double> y, std::span<const double> yp,
                   std::span<double> out) {
        spec.eval_generator(grid.node(i), grid.node(k), xs, y, yp, zs, out);
    };

    std::array<double, kMaxDim> yn{}, dn{}, gn{}, y{}, yd{}, gk{}, prev{};
    auto solve_cell = [&](int i, int k, bool diagonal) {
        for (int l = 0; l < m; ++l) {
            yn[static_cast<std::size_t>(l)] = f.at(i, k + 1, l);
            dn[static_cast<std::size_t>(l)] = f.at(k + 1, k + 1, l);
        }
        gen(i, k + 1, std::span<const double>(yn).first(um), std::span<const double>(dn).first(um),
            std::span<double>(gn).first(um));
        for (std::size_t l = 0; l < um; ++l) {
            y[l] = yn[l] + h * gn[l];
            if (!diagonal) yd[l] = f.at(k, k, static_cast<int>(l));
        }
        for (int it = 0; it < 200; ++it) {
            prev = y;
            const auto ypr = diagonal ? std::span<const double>(y).first(um) : std::span<const double>(yd).first(um);
            gen(i, k, std::span<const double>(y).first(um), ypr, std::span<double>(gk).first(um));
            double change = 0.0;
            for (std::size_t l = 0; l < um; ++l) {
                y[l] = yn[l] + 0.5 * h * (gk[l] + gn[l]);
                change = std::max(change, std::abs(y[l] - prev[l]));
            }
            if (!std::isfinite(change)) break;
            if (change <= 1e-15 * (1.0 + std::abs(y[0]))) break;
        }
        for (int l = 0; l < m; ++l) {
            const double v = y[static_cast<std::size_t>(l)];
            if (!std::isfinite(v)) {
                throw DivergenceError("validate", "non-finite oracle value at (" + std::to_string(i) +
                                                      "," + std::to_string(k) + ")");
            }
            f.at(i, k, l) = v;
        }
    };

    for (int k = n - 1; k >= 0; --k) {
        solve_cell(k, k, true);
        for (int i = 0; i < k; ++i) solve_cell(i, k, false);
    }
    return f;
}

RichardsonValue richardson_oracle(const ProblemSpec& spec, double t, double s, int n, int component) {
    RichardsonValue r;
    for (int factor : {1, 2, 4}) {
        const DeterministicField f = deterministic_oracle(spec, n * factor);
        r.n_oracle.push_back(n * factor);
        r.values.push_back(f.value(t, s, component));
    }
    r.extrapolated = (4.0 * r.values[2] - r.values[1]) / 3.0;
    return r;
}

}  // namespace ebsvie
