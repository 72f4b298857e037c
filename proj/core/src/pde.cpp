#include "ebsvie/pde.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <ostream>

#include "ebsvie/errors.hpp"
#include "ebsvie/parallel.hpp"

namespace ebsvie {

SpatialMesh::SpatialMesh(double x_min, double x_max, int n_cells)
    : x_min_(x_min), x_max_(x_max), n_cells_(n_cells), dx_(0.0) {
    if (!(x_min < x_max)) throw ArgumentError("solver_pde", "mesh requires x_min < x_max");
    if (n_cells < 4) throw ArgumentError("solver_pde", "mesh requires J >= 4");
    dx_ = (x_max - x_min) / n_cells;
}

bool SpatialMesh::in_inner(double x, double fraction) const noexcept {
    const double mid = 0.5 * (x_min_ + x_max_);
    const double half = 0.5 * fraction * (x_max_ - x_min_);
    return x >= mid - half - 1e-12 && x <= mid + half + 1e-12;
}

PdeField::PdeField(TimeGrid grid, SpatialMesh mesh, int dim_value, double theta_weight)
    : grid_(grid), mesh_(mesh), m_(dim_value), theta_weight_(theta_weight), index_(grid.n_steps()) {
    values_.assign(index_.size() * static_cast<std::size_t>(mesh_.n_cells() + 1) *
                       static_cast<std::size_t>(m_),
                   0.0);
}

std::span<double> PdeField::layer(int i, int k) {
    const std::size_t per = static_cast<std::size_t>(mesh_.n_cells() + 1) * static_cast<std::size_t>(m_);
    return {values_.data() + index_.checked_flat(i, k) * per, per};
}

std::span<const double> PdeField::layer(int i, int k) const {
    const std::size_t per = static_cast<std::size_t>(mesh_.n_cells() + 1) * static_cast<std::size_t>(m_);
    return {values_.data() + index_.checked_flat(i, k) * per, per};
}

double PdeField::at(int i, int k, int j, int l) const {
    return layer(i, k)[static_cast<std::size_t>(j * m_ + l)];
}

namespace {

/// Cell index and weight of x, clamped to the mesh.
std::pair<int, double> locate(const SpatialMesh& mesh, double x) {
    const double u = (std::clamp(x, mesh.x_min(), mesh.x_max()) - mesh.x_min()) / mesh.dx();
    int j = static_cast<int>(std::floor(u));
    j = std::clamp(j, 0, mesh.n_cells() - 1);
    return {j, u - j};
}

double node_derivative(std::span<const double> lay, int j, int J, int m, int l, double dx) {
    auto v = [&](int q) { return lay[static_cast<std::size_t>(q * m + l)]; };
    if (j == 0) return (v(1) - v(0)) / dx;
    if (j == J) return (v(J) - v(J - 1)) / dx;
    return (v(j + 1) - v(j - 1)) / (2.0 * dx);
}

}  // namespace

double PdeField::value(int i, int k, double x, int l) const {
    const auto lay = layer(i, k);
    const auto [j, w] = locate(mesh_, x);
    const double a = lay[static_cast<std::size_t>(j * m_ + l)];
    const double b = lay[static_cast<std::size_t>((j + 1) * m_ + l)];
    return w == 0.0 ? a : a + w * (b - a);
}

double PdeField::derivative(int i, int k, double x, int l) const {
    const auto lay = layer(i, k);
    const auto [j, w] = locate(mesh_, x);
    const int J = mesh_.n_cells();
    const double a = node_derivative(lay, j, J, m_, l, mesh_.dx());
    const double b = node_derivative(lay, j + 1, J, m_, l, mesh_.dx());
    return w == 0.0 ? a : a + w * (b - a);
}

namespace {

struct Coefficients {
    std::vector<double> lower, diag, upper;  // L stencil per node
    std::vector<double> half_var, adv;
    std::vector<double> sigma;
};

Coefficients stencil(const ProblemSpec& spec, const SpatialMesh& mesh, double s) {
    const int J = mesh.n_cells();
    const double dx = mesh.dx();
    Coefficients c;
    c.lower.resize(static_cast<std::size_t>(J + 1));
    c.diag.resize(static_cast<std::size_t>(J + 1));
    c.upper.resize(static_cast<std::size_t>(J + 1));
    c.sigma.resize(static_cast<std::size_t>(J + 1));
    c.half_var.resize(static_cast<std::size_t>(J + 1));
    c.adv.resize(static_cast<std::size_t>(J + 1));
    for (int j = 0; j <= J; ++j) {
        const double x = mesh.node(j);
        double b = 0.0, sg = 0.0;
        spec.eval_drift(s, std::span<const double>(&x, 1), std::span<double>(&b, 1));
        spec.eval_diffusion(s, std::span<const double>(&x, 1), std::span<double>(&sg, 1));
        const double half_var = 0.5 * sg * sg / (dx * dx);
        const double adv = b / (2.0 * dx);
        const auto uj = static_cast<std::size_t>(j);
        c.lower[uj] = half_var - adv;
        c.diag[uj] = -2.0 * half_var;
        c.upper[uj] = half_var + adv;
        c.sigma[uj] = sg;
        c.half_var[uj] = half_var;
        c.adv[uj] = adv;
    }
    return c;
}

/// Thomas factorization of (I - w dt L) on nodes 1..J-1 with the end
/// values eliminated through zero second difference.
struct Tridiagonal {
    std::vector<double> sub, main, super;
    std::vector<double> cprime, denom;

    void factor() {
        const std::size_t n = main.size();
        cprime.assign(n, 0.0);
        denom.assign(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double den = main[r] - (r > 0 ? sub[r] * cprime[r - 1] : 0.0);
            if (!(std::abs(den) > 1e-300) || !std::isfinite(den)) {
                throw NumericalError("solver_pde", "tridiagonal solve failed at row " + std::to_string(r));
            }
            denom[r] = den;
            cprime[r] = r + 1 < n ? super[r] / den : 0.0;
        }
    }

    void solve(std::vector<double>& rhs) const {
        const std::size_t n = main.size();
        for (std::size_t r = 0; r < n; ++r) {
            rhs[r] = (rhs[r] - (r > 0 ? sub[r] * rhs[r - 1] : 0.0)) / denom[r];
        }
        for (std::size_t r = n - 1; r-- > 0;) rhs[r] -= cprime[r] * rhs[r + 1];
    }
};

Tridiagonal implicit_matrix(const Coefficients& c, int J, double w_dt) {
    Tridiagonal t;
    const auto n = static_cast<std::size_t>(J - 1);
    t.sub.assign(n, 0.0);
    t.main.assign(n, 0.0);
    t.super.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t j = r + 1;
        t.sub[r] = -w_dt * c.lower[j];
        t.main[r] = 1.0 - w_dt * c.diag[j];
        t.super[r] = -w_dt * c.upper[j];
    }
    // delta_0 = 2 delta_1 - delta_2 and delta_J = 2 delta_{J-1} - delta_{J-2}.
    t.main[0] += 2.0 * t.sub[0];
    t.super[0] -= t.sub[0];
    t.sub[0] = 0.0;
    t.main[n - 1] += 2.0 * t.super[n - 1];
    t.sub[n - 1] -= t.super[n - 1];
    t.super[n - 1] = 0.0;
    t.factor();
    return t;
}

double apply_stencil(const Coefficients& c, std::span<const double> lay, int j, int m, int l) {
    const auto uj = static_cast<std::size_t>(j);
    auto v = [&](int q) { return lay[static_cast<std::size_t>(q * m + l)]; };
    const double fwd = v(j + 1) - v(j), bwd = v(j) - v(j - 1);
    return c.half_var[uj] * (fwd - bwd) + c.adv[uj] * (fwd + bwd);
}

}  // namespace

PdeField solve_nonlocal_pde(const ProblemSpec& spec, const TimeGrid& grid, const SpatialMesh& mesh,
                            const PdeOptions& options) {
    spec.check();
    if (spec.dim_state != 1) {
        throw ArgumentError("solver_pde", "only d = 1 is supported, problem has d = " +
                                              std::to_string(spec.dim_state));
    }
    const double w = options.theta_weight;
    if (!(w >= 0.0 && w <= 1.0)) throw ArgumentError("solver_pde", "theta_weight must lie in [0, 1]");
    if (std::abs(grid.horizon() - spec.horizon) > 1e-12 * spec.horizon) {
        throw ArgumentError("solver_pde", "grid horizon differs from the problem horizon");
    }
    const int N = grid.n_steps();
    const int J = mesh.n_cells();
    const int m = spec.dim_value;
    const auto um = static_cast<std::size_t>(m);
    const double dt = grid.dt();
    const double dx = mesh.dx();

    if (w == 0.0) {
        double max_var = 0.0;
        for (int k = 0; k <= N; ++k) {
            const auto c = stencil(spec, mesh, grid.node(k));
            for (double sg : c.sigma) max_var = std::max(max_var, sg * sg);
        }
        if (max_var * dt / (dx * dx) > 1.0) {
            throw StabilityError("solver_pde",
                                 "explicit scheme unstable: sigma^2 dt / dx^2 = " +
                                     std::to_string(max_var * dt / (dx * dx)) +
                                     " > 1; use dt <= " + std::to_string(dx * dx / max_var) +
                                     " or theta_weight > 0");
        }
    }

    PdeField field(grid, mesh, m, w);
    for (int i = 0; i <= N; ++i) {
        auto lay = field.layer(i, N);
        for (int j = 0; j <= J; ++j) {
            const double x = mesh.node(j);
            spec.eval_free_term(grid.node(i), std::span<const double>(&x, 1),
                                lay.subspan(static_cast<std::size_t>(j) * um, um));
        }
    }

    const bool g_zero = spec.generator_is_zero();
    Coefficients next = stencil(spec, mesh, grid.node(N));
    for (int k = N - 1; k >= 0; --k) {
        const Coefficients cur = stencil(spec, mesh, grid.node(k));
        const Tridiagonal mat = implicit_matrix(cur, J, w * dt);
        const double s_next = grid.node(k + 1);
        const auto diag_layer = field.layer(k + 1, k + 1);
        parallel_for(static_cast<std::size_t>(k + 1), options.threads,
                     [&](std::size_t begin, std::size_t end) {
            std::vector<double> rhs(static_cast<std::size_t>(J - 1));
            std::vector<double> gvals(static_cast<std::size_t>(J + 1) * um, 0.0);
            std::array<double, kMaxDim> y{}, yp{}, z{}, gv{};
            for (std::size_t iu = begin; iu < end; ++iu) {
                const int i = static_cast<int>(iu);
                const auto prev = std::span<const double>(field.layer(i, k + 1));
                if (!g_zero) {
                    for (int j = 1; j < J; ++j) {
                        const double x = mesh.node(j);
                        for (std::size_t l = 0; l < um; ++l) {
                            y[l] = prev[static_cast<std::size_t>(j) * um + l];
                            yp[l] = diag_layer[static_cast<std::size_t>(j) * um + l];
                            z[l] = node_derivative(prev, j, J, m, static_cast<int>(l), dx) *
                                   next.sigma[static_cast<std::size_t>(j)];
                        }
                        spec.eval_generator(grid.node(i), s_next, std::span<const double>(&x, 1),
                                            std::span<const double>(y).first(um),
                                            std::span<const double>(yp).first(um),
                                            std::span<const double>(z).first(um), gv);
                        for (std::size_t l = 0; l < um; ++l) gvals[static_cast<std::size_t>(j) * um + l] = gv[l];
                    }
                }
                auto out = field.layer(i, k);
                for (int l = 0; l < m; ++l) {
                    for (int j = 1; j < J; ++j) {
                        const double lk = apply_stencil(cur, prev, j, m, l);
                        const double lk1 = apply_stencil(next, prev, j, m, l);
                        rhs[static_cast<std::size_t>(j - 1)] =
                            dt * (w * lk + (1.0 - w) * lk1) +
                            dt * gvals[static_cast<std::size_t>(j) * um + static_cast<std::size_t>(l)];
                    }
                    mat.solve(rhs);
                    auto v = [&](int j) -> double& { return out[static_cast<std::size_t>(j * m + l)]; };
                    for (int j = 1; j < J; ++j) {
                        v(j) = prev[static_cast<std::size_t>(j * m + l)] + rhs[static_cast<std::size_t>(j - 1)];
                    }
                    v(0) = 2.0 * v(1) - v(2);
                    v(J) = 2.0 * v(J - 1) - v(J - 2);
                    for (int j = 0; j <= J; ++j) {
                        if (!std::isfinite(v(j))) {
                            throw NumericalError("solver_pde", "non-finite value at (i,k,j) = (" +
                                                                   std::to_string(i) + "," +
                                                                   std::to_string(k) + "," +
                                                                   std::to_string(j) + ")");
                        }
                    }
                }
            }
        });
        next = cur;
    }
    return field;
}

PdeResidual pde_residual(const PdeField& field, const ProblemSpec& spec) {
    const int N = field.n_steps();
    const int J = field.mesh().n_cells();
    const int m = field.dim_value();
    const auto um = static_cast<std::size_t>(m);
    const double dt = field.grid().dt();
    const double dx = field.mesh().dx();
    PdeResidual res;
    std::array<double, kMaxDim> y{}, yp{}, z{}, gv{};
    for (const auto& [i, k] : TriangularIndex(N).sweep_order()) {
        if (k == N) continue;
        const Coefficients c = stencil(spec, field.mesh(), field.grid().node(k));
        const auto cur = field.layer(i, k);
        const auto nxt = field.layer(i, k + 1);
        const auto dg = field.layer(k, k);
        double worst = 0.0, sum = 0.0;
        int count = 0;
        for (int j = 1; j < J; ++j) {
            const double x = field.mesh().node(j);
            if (!field.mesh().in_inner(x)) continue;
            if (!spec.generator_is_zero()) {
                for (std::size_t l = 0; l < um; ++l) {
                    y[l] = cur[static_cast<std::size_t>(j) * um + l];
                    yp[l] = dg[static_cast<std::size_t>(j) * um + l];
                    z[l] = node_derivative(cur, j, J, m, static_cast<int>(l), dx) * c.sigma[static_cast<std::size_t>(j)];
                }
                spec.eval_generator(field.grid().node(i), field.grid().node(k),
                                    std::span<const double>(&x, 1), std::span<const double>(y).first(um),
                                    std::span<const double>(yp).first(um),
                                    std::span<const double>(z).first(um), gv);
            }
            for (int l = 0; l < m; ++l) {
                const auto idx = static_cast<std::size_t>(j * m + l);
                double r = (nxt[idx] - cur[idx]) / dt + apply_stencil(c, cur, j, m, l);
                if (!spec.generator_is_zero()) r += gv[static_cast<std::size_t>(l)];
                worst = std::max(worst, std::abs(r));
                sum += r * r;
                ++count;
            }
        }
        res.label.push_back(i);
        res.level.push_back(k);
        res.max_norm.push_back(worst);
        res.l2_norm.push_back(count > 0 ? std::sqrt(sum / count) : 0.0);
        res.max_overall = std::max(res.max_overall, worst);
    }
    return res;
}

namespace {

class PdeRepresentation final : public PathwiseSource {
public:
    PdeRepresentation(std::shared_ptr<const PdeField> field, const ProblemSpec& spec,
                      const PathEnsemble& ens)
        : field_(std::move(field)), spec_(spec), ens_(&ens), index_(ens.grid().n_steps()) {
        const int k0 = ens.start_index();
        const int m = spec.dim_value;
        const auto um = static_cast<std::size_t>(m);
        const double x = ens.start().x[0];
        const double dt = ens.grid().dt();
        frozen_.assign(index_.size() * um, 0.0);
        auto slot = [&](int i, int k) { return frozen_.data() + index_.flat(i, k) * um; };
        for (int i = 0; i <= k0; ++i) {
            for (int l = 0; l < m; ++l) slot(i, k0)[l] = field_->value(i, k0, x, l);
        }
        std::array<double, kMaxDim> z{}, gv{};
        for (int k = k0 - 1; k >= 0; --k) {
            for (int i = 0; i <= k; ++i) {
                const double* yn = slot(i, k + 1);
                const double* dn = slot(k + 1, k + 1);
                spec.eval_generator(ens.grid().node(i), ens.grid().node(k + 1),
                                    std::span<const double>(&x, 1), std::span<const double>(yn, um),
                                    std::span<const double>(dn, um), std::span<const double>(z).first(um),
                                    gv);
                for (std::size_t l = 0; l < um; ++l) slot(i, k)[l] = yn[l] + dt * gv[l];
            }
        }
    }

    void y_at(int i, int k, std::size_t p, std::span<double> out) const override {
        const auto um = static_cast<std::size_t>(spec_.dim_value);
        if (k < ens_->start_index()) {
            std::copy_n(frozen_.data() + index_.flat(i, k) * um, um, out.begin());
            return;
        }
        const double x = ens_->x(p, k)[0];
        for (std::size_t l = 0; l < um; ++l) out[l] = field_->value(i, k, x, static_cast<int>(l));
    }

    void z_at(int i, int k, std::size_t p, std::span<double> out) const override {
        const auto um = static_cast<std::size_t>(spec_.dim_value);
        if (k < ens_->start_index()) {
            std::fill_n(out.begin(), um, 0.0);
            return;
        }
        const double x = ens_->x(p, k)[0];
        double sg = 0.0;
        spec_.eval_diffusion(ens_->grid().node(k), std::span<const double>(&x, 1), std::span<double>(&sg, 1));
        for (std::size_t l = 0; l < um; ++l) out[l] = field_->derivative(i, k, x, static_cast<int>(l)) * sg;
    }

private:
    std::shared_ptr<const PdeField> field_;
    ProblemSpec spec_;
    const PathEnsemble* ens_;
    TriangularIndex index_;
    std::vector<double> frozen_;
};

}  // namespace

TwoTimeField representation_from_pde(std::shared_ptr<const PdeField> field,
                                     const ProblemSpec& spec, const PathEnsemble& ens,
                                     RepresentationInfo* info) {
    if (ens.dim() != 1) throw ArgumentError("solver_pde", "representation requires d = 1");
    if (!(field->grid() == ens.grid())) {
        throw ArgumentError("solver_pde", "ensemble and PDE field use different time grids");
    }
    if (field->dim_value() != spec.dim_value) {
        throw ArgumentError("solver_pde", "PDE field value dimension differs from the problem");
    }
    const SpatialMesh& mesh = field->mesh();
    std::size_t outside = 0, total = 0;
    std::vector<char> exited(ens.n_paths(), 0);
    for (int k = ens.start_index(); k <= ens.grid().n_steps(); ++k) {
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            ++total;
            if (!mesh.contains(ens.x(p, k)[0])) {
                ++outside;
                exited[p] = 1;
            }
        }
    }
    const double frac = total ? static_cast<double>(outside) / static_cast<double>(total) : 0.0;
    if (info) {
        info->exit_fraction = frac;
        info->exited = std::move(exited);
        if (frac > 0.01) {
            info->warnings.push_back("paths leave the mesh on " + std::to_string(100.0 * frac) +
                                     "% of steps; values are clamped");
        }
    }
    auto source = std::make_shared<PdeRepresentation>(std::move(field), spec, ens);
    return TwoTimeField::from_source(ens, spec.dim_value, std::move(source));
}

void export_pde_binary(const PdeField& field, std::ostream& out) {
    const char magic[8] = {'E', 'B', 'S', 'V', 'P', 'D', 'E', '1'};
    out.write(magic, sizeof magic);
    auto put = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
    put(static_cast<std::uint64_t>(field.n_steps()));
    put(static_cast<std::uint64_t>(field.mesh().n_cells()));
    put(static_cast<std::uint64_t>(field.dim_value()));
    put(field.grid().horizon());
    put(field.mesh().x_min());
    put(field.mesh().x_max());
    put(field.theta_weight());
    for (const auto& [i, k] : TriangularIndex(field.n_steps()).sweep_order()) {
        for (double v : field.layer(i, k)) put(v);
    }
}

void export_pde_slice_csv(const PdeField& field, int label, std::ostream& out) {
    if (label < 0 || label > field.n_steps()) throw ArgumentError("solver_pde", "label outside [0, N]");
    out << "k,s,j,x";
    for (int l = 0; l < field.dim_value(); ++l) out << ",theta" << l;
    out << '\n';
    out.precision(17);
    for (int k = label; k <= field.n_steps(); ++k) {
        for (int j = 0; j <= field.mesh().n_cells(); ++j) {
            out << k << ',' << field.grid().node(k) << ',' << j << ',' << field.mesh().node(j);
            for (int l = 0; l < field.dim_value(); ++l) out << ',' << field.at(label, k, j, l);
            out << '\n';
        }
    }
}

}  // namespace ebsvie
