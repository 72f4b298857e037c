#include "ebsvie/mc_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "ebsvie/errors.hpp"
#include "ebsvie/parallel.hpp"
#include "level_context.hpp"

namespace ebsvie {

using detail::LevelContext;

bool generator_uses_diagonal(const ProblemSpec& spec) {
    const auto& p = spec.generator.params;
    switch (spec.generator.family) {
        case GeneratorFamily::Zero: return false;
        case GeneratorFamily::Linear: return p[1] != 0.0;
        case GeneratorFamily::Composite: return p[1] != 0.0;
        case GeneratorFamily::TanhProduct: return p[0] != 0.0;
    }
    return true;
}

namespace {

struct SweepSettings {
    int threads = 1;
    bool zero_diagonal_slot = false;
    bool zero_offdiagonal_slot = false;
};

void check_inputs(const ProblemSpec& spec, const PathEnsemble& ens) {
    spec.check();
    if (spec.dim_state != ens.dim()) {
        throw ArgumentError("solver_mc", "ensemble dimension differs from the problem");
    }
    if (std::abs(ens.grid().horizon() - spec.horizon) > 1e-12 * spec.horizon) {
        throw ArgumentError("solver_mc", "ensemble horizon differs from the problem");
    }
}

void mark_terminal(TwoTimeField& field, const std::vector<int>& labels) {
    const int n = field.n_steps();
    for (int i : labels) field.set_cell(i, n, CellCoefficients{});
}

std::string cell_name(int i, int k) {
    return "(" + std::to_string(i) + "," + std::to_string(k) + ")";
}

void require_finite(const CellCoefficients& c, int i, int k) {
    if (!c.y.allFinite() || !c.z.allFinite()) {
        throw DivergenceError("solver_mc", "non-finite Y at cell " + cell_name(i, k) +
                                               "; dt * L may be too large");
    }
}

/// Y(i,k+1) at path p's level-(k+1) state, read from the field being built.
void next_value(const ProblemSpec& spec, const PathEnsemble& ens, const TwoTimeField& field,
                const LevelModel* next_model, int i, int k, std::size_t p, std::span<double> out) {
    const int kn = k + 1;
    if (kn == ens.grid().n_steps()) {
        spec.eval_free_term(ens.grid().node(i), ens.x(p, kn), out);
        return;
    }
    const auto& c = field.cell(i, kn).y;
    for (Eigen::Index l = 0; l < c.cols(); ++l) {
        out[static_cast<std::size_t>(l)] = detail::combine(next_model->basis, ens.x(p, kn), c, l);
    }
}

CellCoefficients frozen_step(const ProblemSpec& spec, const PathEnsemble& ens,
                             const TwoTimeField& field, const LevelContext& ctx, int i,
                             std::span<const double> diag_next, const SweepSettings& set) {
    const int m = spec.dim_value;
    const int d = spec.dim_state;
    const int k = ctx.k;
    const auto um = static_cast<std::size_t>(m);
    std::array<double, kMaxDim> y_next{}, dg{}, gv{};
    std::array<double, kMaxDim * kMaxDim> z{};
    if (k + 1 == ens.grid().n_steps()) {
        spec.eval_free_term(ens.grid().node(i), ens.start().x, y_next);
    } else {
        const auto& c = field.cell(i, k + 1).y;
        for (std::size_t l = 0; l < um; ++l) y_next[l] = c(0, static_cast<Eigen::Index>(l));
    }
    for (std::size_t l = 0; l < um; ++l) dg[l] = set.zero_diagonal_slot ? 0.0 : diag_next[l];
    CellCoefficients out;
    out.y.resize(1, m);
    out.z = Eigen::MatrixXd::Zero(1, m * d);
    const auto yspan = std::span<const double>(y_next).first(um);
    std::array<double, kMaxDim> y_slot{};
    if (!set.zero_offdiagonal_slot) std::copy_n(y_next.begin(), um, y_slot.begin());
    spec.eval_generator(ens.grid().node(i), ens.grid().node(k + 1), ens.start().x,
                        std::span<const double>(y_slot).first(um),
                        std::span<const double>(dg).first(um),
                        std::span<const double>(z).first(um * static_cast<std::size_t>(d)), gv);
    const double dt = ens.grid().dt();
    for (std::size_t l = 0; l < um; ++l) {
        out.y(0, static_cast<Eigen::Index>(l)) =
            spec.generator_is_zero() ? yspan[l] : yspan[l] + dt * gv[l];
    }
    require_finite(out, i, k);
    return out;
}

CellCoefficients active_step(const ProblemSpec& spec, const PathEnsemble& ens,
                             const TwoTimeField& field, const LevelContext& ctx,
                             const LevelModel* next_model, int i,
                             std::span<const double> diag_next, const SweepSettings& set) {
    const int m = spec.dim_value;
    const int d = spec.dim_state;
    const int k = ctx.k;
    const auto um = static_cast<std::size_t>(m);
    const auto ud = static_cast<std::size_t>(d);
    const std::size_t n = ens.n_paths();
    const auto n_i = static_cast<Eigen::Index>(n);
    const double t_i = ens.grid().node(i);
    CellCoefficients out;

    if (ctx.terminal_next) {
        Eigen::MatrixXd target(n_i, m + m * d);
        const TensorRule& rule = ctx.rule;
        const double inv_sqrt_dt = 1.0 / ctx.sqrt_dt;
        std::array<double, kMaxDim> f0{}, fq{}, node{};
        for (std::size_t p = 0; p < n; ++p) {
            const double* mu = ctx.mu.data() + p * ud;
            const double* sg = ctx.scaled_sigma.data() + p * ud * ud;
            spec.eval_free_term(t_i, std::span<const double>(mu, ud), f0);
            std::array<double, kMaxDim> acc{};
            std::array<double, kMaxDim * kMaxDim> accz{};
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double* xi = rule.nodes.data() + q * ud;
                for (std::size_t r = 0; r < ud; ++r) {
                    double v = mu[r];
                    for (std::size_t c = 0; c < ud; ++c) v += sg[r * ud + c] * xi[c];
                    node[r] = v;
                }
                spec.eval_free_term(t_i, std::span<const double>(node.data(), ud), fq);
                for (std::size_t l = 0; l < um; ++l) {
                    const double df = rule.weights[q] * (fq[l] - f0[l]);
                    acc[l] += df;
                    for (std::size_t j = 0; j < ud; ++j) accz[l * ud + j] += df * xi[j];
                }
            }
            const auto pi = static_cast<Eigen::Index>(p);
            for (std::size_t l = 0; l < um; ++l) {
                target(pi, static_cast<Eigen::Index>(l)) = f0[l] + acc[l];
                for (std::size_t j = 0; j < ud; ++j) {
                    target(pi, static_cast<Eigen::Index>(um + l * ud + j)) = accz[l * ud + j] * inv_sqrt_dt;
                }
            }
        }
        const Eigen::MatrixXd c = ctx.proj->project(target);
        out.y = c.leftCols(m);
        out.z = c.rightCols(m * d);
    } else {
        const Eigen::MatrixXd& next = field.cell(i, k + 1).y;
        out.y = ctx.K * next;
        out.z.resize(ctx.K.rows(), m * d);
        for (int l = 0; l < m; ++l) {
            for (int j = 0; j < d; ++j) {
                out.z.col(l * d + j) = ctx.KZ[static_cast<std::size_t>(j)] * next.col(l);
            }
        }
    }

    if (!spec.generator_is_zero()) {
        Eigen::MatrixXd target(n_i, m);
        const double s_next = ens.grid().node(k + 1);
        std::array<double, kMaxDim> y_next{}, dg{}, gv{};
        std::array<double, kMaxDim * kMaxDim> z{};
        for (std::size_t p = 0; p < n; ++p) {
            next_value(spec, ens, field, next_model, i, k, p, y_next);
            if (set.zero_offdiagonal_slot) y_next.fill(0.0);
            for (std::size_t l = 0; l < um; ++l) dg[l] = set.zero_diagonal_slot ? 0.0 : diag_next[p * um + l];
            for (Eigen::Index c = 0; c < out.z.cols(); ++c) {
                z[static_cast<std::size_t>(c)] = detail::combine(ctx.model.basis, ens.x(p, k), out.z, c);
            }
            spec.eval_generator(t_i, s_next, ens.x(p, k + 1), std::span<const double>(y_next).first(um),
                                std::span<const double>(dg).first(um),
                                std::span<const double>(z).first(um * ud), gv);
            for (std::size_t l = 0; l < um; ++l) target(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) = gv[l];
        }
        out.y += ens.grid().dt() * ctx.proj->project(target);
    }
    require_finite(out, i, k);
    return out;
}

/// Solves the given labels on level ctx.k, reading level k+1 from `field`.
void solve_level(const ProblemSpec& spec, const PathEnsemble& ens, TwoTimeField& field,
                 const LevelContext& ctx, const std::vector<int>& labels,
                 std::span<const double> diag_next, const SweepSettings& set) {
    const int k = ctx.k;
    if (!ctx.frozen) field.set_level_model(k, ctx.model);
    else field.set_level_model(k, detail::constant_level_model(spec.dim_state));
    const LevelModel* next_model =
        k + 1 < ens.grid().n_steps() ? &field.level_model(k + 1) : nullptr;
    std::vector<CellCoefficients> results(labels.size());
    parallel_for(labels.size(), set.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t q = begin; q < end; ++q) {
            const int i = labels[q];
            results[q] = ctx.frozen ? frozen_step(spec, ens, field, ctx, i, diag_next, set)
                                    : active_step(spec, ens, field, ctx, next_model, i, diag_next, set);
        }
    });
    for (std::size_t q = 0; q < labels.size(); ++q) field.set_cell(labels[q], k, std::move(results[q]));
}

std::vector<double> diagonal_or_zero(const TwoTimeField& field, int k, bool needed) {
    if (needed && field.has_cell(k, k)) return field.diagonal(k);
    return std::vector<double>(field.n_paths() * static_cast<std::size_t>(field.dim_value()), 0.0);
}

detail::LevelContext make_context(const ProblemSpec& spec, const PathEnsemble& ens,
                                  const TwoTimeField& field, int k, const BasisSpec& basis,
                                  int threads) {
    const bool has_next = k + 1 < ens.grid().n_steps();
    return detail::build_level(spec, ens, k, basis,
                               has_next ? &field.level_model(k + 1).basis : nullptr, false,
                               threads);
}

void check_basis(const BasisSpec& basis) {
    if (basis.degree < 0) throw ArgumentError("solver_mc", "basis degree must be >= 0");
}

void warn_stiffness(const ProblemSpec& spec, const PathEnsemble& ens, SolveLog* log) {
    if (log && ens.grid().dt() * spec.lipschitz_L >= 1.0) {
        log->warnings.push_back("dt * L = " + std::to_string(ens.grid().dt() * spec.lipschitz_L) +
                                " >= 1: explicit generator step may be unstable");
    }
}

int node_index(const TimeGrid& grid, double s, const char* what) {
    const int k = grid.index_of(s);
    if (k < 0) {
        throw ArgumentError("solver_mc", std::string(what) + " " + std::to_string(s) +
                                             " is not a grid node");
    }
    return k;
}

double residual_norm(const LevelModel& model, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.size() == 0) return 0.0;
    const Eigen::MatrixXd diff = a - b;
    double worst = 0.0;
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
        const double q = diff.col(c).dot(model.gram * diff.col(c));
        worst = std::max(worst, std::sqrt(std::max(q, 0.0)));
    }
    return worst;
}

struct WindowContexts {
    std::map<int, detail::LevelContext> by_level;
};

/// Builds contexts for levels [a, b) descending; level b must already carry
/// its model in `field` (or be terminal).
WindowContexts build_window(const ProblemSpec& spec, const PathEnsemble& ens, TwoTimeField& field,
                            int a, int b, const BasisSpec& basis, int threads) {
    WindowContexts w;
    for (int k = b - 1; k >= a; --k) {
        auto ctx = make_context(spec, ens, field, k, basis, threads);
        field.set_level_model(k, ctx.frozen ? detail::constant_level_model(spec.dim_state) : ctx.model);
        w.by_level.emplace(k, std::move(ctx));
    }
    return w;
}

std::vector<int> range_labels(int lo, int hi) {
    std::vector<int> v;
    for (int i = lo; i <= hi; ++i) v.push_back(i);
    return v;
}

/// Picard iteration on the triangle {a <= i <= k <= b}, in place.
PicardDiagnostics picard_region(const ProblemSpec& spec, const PathEnsemble& ens,
                                TwoTimeField& field, int a, int b, const WindowContexts& w,
                                const PicardOptions& options) {
    const std::size_t width = ens.n_paths() * static_cast<std::size_t>(spec.dim_value);
    const bool uses_diag = generator_uses_diagonal(spec);
    SweepSettings set;
    set.threads = options.threads;

    // Diagonal guess per level a+1..b; level b is data.
    std::map<int, std::vector<double>> diag_prev;
    const std::vector<double> diag_b = diagonal_or_zero(field, b, true);
    for (int k = a + 1; k < b; ++k) {
        if (options.initial && options.initial->has_cell(k, k)) {
            diag_prev[k] = options.initial->diagonal(k);
        } else {
            std::vector<double> guess(width);
            const auto um = static_cast<std::size_t>(spec.dim_value);
            for (std::size_t l = 0; l < um; ++l) {
                double mean = 0.0;
                for (std::size_t p = 0; p < ens.n_paths(); ++p) mean += diag_b[p * um + l];
                mean /= static_cast<double>(ens.n_paths());
                for (std::size_t p = 0; p < ens.n_paths(); ++p) guess[p * um + l] = mean;
            }
            diag_prev[k] = std::move(guess);
        }
    }
    diag_prev[b] = diag_b;

    PicardDiagnostics diag;
    std::map<std::pair<int, int>, CellCoefficients> previous;
    int above_one = 0;
    for (int iter = 0; iter <= options.max_iter; ++iter) {
        for (int k = b - 1; k >= a; --k) {
            std::vector<int> labels = range_labels(a, k);
            std::vector<double> zero(width, 0.0);
            const auto& dn = uses_diag ? diag_prev.at(k + 1) : zero;
            solve_level(spec, ens, field, w.by_level.at(k), labels, dn, set);
        }
        std::map<std::pair<int, int>, CellCoefficients> current;
        for (int k = a; k < b; ++k) {
            for (int i = a; i <= k; ++i) current[{i, k}] = field.cell(i, k);
        }
        for (int k = a + 1; k < b; ++k) diag_prev[k] = field.diagonal(k);
        if (iter > 0) {
            double r = 0.0;
            for (const auto& [key, cell] : current) {
                const auto& old = previous.at(key);
                const LevelModel& model = field.level_model(key.second);
                r = std::max({r, residual_norm(model, cell.y, old.y), residual_norm(model, cell.z, old.z)});
            }
            if (!diag.residuals.empty() && diag.residuals.back() > 0.0) {
                const double ratio = r / diag.residuals.back();
                diag.ratios.push_back(ratio);
                above_one = ratio >= 1.0 ? above_one + 1 : 0;
            }
            diag.residuals.push_back(r);
            diag.iterations = iter;
            if (r <= options.tol) {
                diag.converged = true;
                break;
            }
            if (above_one >= 3) {
                throw NonContractionError(
                    "solver_mc", "Picard residual ratio >= 1 for 3 consecutive iterations on window [" +
                                     std::to_string(ens.grid().node(a)) + ", " +
                                     std::to_string(ens.grid().node(b)) + "]; use a smaller window");
            }
        }
        previous = std::move(current);
    }
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < diag.residuals.size(); ++j) {
        if (diag.residuals[j] > 0.0) {
            xs.push_back(static_cast<double>(j + 1));
            ys.push_back(std::log(diag.residuals[j]));
        }
    }
    if (xs.size() >= 2) {
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            sxy += (xs[j] - mx) * (ys[j] - my);
            sxx += (xs[j] - mx) * (xs[j] - mx);
        }
        diag.fitted_ratio = std::exp(sxy / sxx);
    }
    return diag;
}

/// Direct sweep of labels [0, a) over levels [a, b) with the diagonal fixed.
void sweep_left_labels(const ProblemSpec& spec, const PathEnsemble& ens, TwoTimeField& field,
                       int a, int b, const WindowContexts& w, int threads) {
    if (a == 0) return;
    SweepSettings set;
    set.threads = threads;
    const bool uses_diag = generator_uses_diagonal(spec);
    const std::vector<int> labels = range_labels(0, a - 1);
    for (int k = b - 1; k >= a; --k) {
        const auto dn = diagonal_or_zero(field, k + 1, uses_diag);
        solve_level(spec, ens, field, w.by_level.at(k), labels, dn, set);
    }
}

}  // namespace

TwoTimeField solve_ebsvie_regression(const ProblemSpec& spec, const PathEnsemble& ens,
                                     const BasisSpec& basis, const SolverOptions& options) {
    check_inputs(spec, ens);
    check_basis(basis);
    const int n_steps = ens.grid().n_steps();
    if (options.min_level < 0 || options.min_level > n_steps) {
        throw ArgumentError("solver_mc", "min_level outside [0, N]");
    }
    warn_stiffness(spec, ens, options.log);
    const bool uses_diag = generator_uses_diagonal(spec);

    std::set<int> label_set;
    if (options.labels.empty()) {
        for (int i = 0; i <= n_steps; ++i) label_set.insert(i);
    } else {
        for (int i : options.labels) {
            if (i < 0 || i > n_steps) throw ArgumentError("solver_mc", "label outside [0, N]");
            label_set.insert(i);
        }
        if (uses_diag && !options.zero_diagonal_slot) {
            const int first = std::max(options.min_level, *label_set.begin()) + 1;
            for (int i = first; i <= n_steps; ++i) label_set.insert(i);
        }
    }

    SweepSettings set;
    set.threads = options.threads;
    set.zero_diagonal_slot = options.zero_diagonal_slot;
    set.zero_offdiagonal_slot = options.zero_offdiagonal_slot;

    TwoTimeField field = TwoTimeField::regression(ens, spec.dim_value);
    mark_terminal(field, std::vector<int>(label_set.begin(), label_set.end()));
    std::mt19937_64 shuffle_rng(options.label_order_seed);
    for (int k = n_steps - 1; k >= options.min_level; --k) {
        std::vector<int> labels;
        for (int i : label_set) {
            if (i <= k) labels.push_back(i);
        }
        if (options.label_order_seed != 0) std::shuffle(labels.begin(), labels.end(), shuffle_rng);
        const auto ctx = make_context(spec, ens, field, k, basis, options.threads);
        const auto dn = diagonal_or_zero(field, k + 1, uses_diag && !options.zero_diagonal_slot);
        solve_level(spec, ens, field, ctx, labels, dn, set);
    }
    return field;
}

PicardResult picard_solve(const ProblemSpec& spec, const PathEnsemble& ens, double window_start,
                          double window_end, const BasisSpec& basis, const PicardOptions& options) {
    check_inputs(spec, ens);
    check_basis(basis);
    const int a = node_index(ens.grid(), window_start, "window start");
    const int b = node_index(ens.grid(), window_end, "window end");
    if (a >= b) throw ArgumentError("solver_mc", "window must satisfy S < T'");
    const int n_steps = ens.grid().n_steps();

    TwoTimeField field = TwoTimeField::regression(ens, spec.dim_value);
    if (b < n_steps) {
        if (options.outer) {
            field = *options.outer;
        } else {
            SolverOptions so;
            so.threads = options.threads;
            so.min_level = b;
            field = solve_ebsvie_regression(spec, ens, basis, so);
        }
        for (int i = a; i <= b; ++i) {
            if (!field.has_cell(i, b)) {
                throw ArgumentError("solver_mc", "outer field lacks cell " + cell_name(i, b));
            }
        }
    } else {
        mark_terminal(field, range_labels(0, n_steps));
    }
    const auto w = build_window(spec, ens, field, a, b, basis, options.threads);
    PicardDiagnostics diag = picard_region(spec, ens, field, a, b, w, options);
    return {std::move(field), std::move(diag)};
}

TwoTimeField glue_windows(const ProblemSpec& spec, const PathEnsemble& ens, int window_count,
                          const BasisSpec& basis, const PicardOptions& options,
                          std::vector<PicardDiagnostics>* diagnostics) {
    check_inputs(spec, ens);
    check_basis(basis);
    const int n_steps = ens.grid().n_steps();
    if (window_count < 1 || n_steps % window_count != 0) {
        throw ArgumentError("solver_mc", "window_count must be >= 1 and divide N");
    }
    const int len = n_steps / window_count;
    TwoTimeField field = TwoTimeField::regression(ens, spec.dim_value);
    mark_terminal(field, range_labels(0, n_steps));
    PicardOptions inner = options;
    inner.initial = nullptr;
    inner.outer = nullptr;
    for (int w = window_count - 1; w >= 0; --w) {
        const int a = w * len;
        const int b = a + len;
        const auto ctx = build_window(spec, ens, field, a, b, basis, options.threads);
        auto diag = picard_region(spec, ens, field, a, b, ctx, inner);
        if (diagnostics) diagnostics->push_back(std::move(diag));
        sweep_left_labels(spec, ens, field, a, b, ctx, options.threads);
    }
    return field;
}

FieldSample evaluate_field_at(const TwoTimeField& field, int t_index, int s_index) {
    TriangularIndex idx(field.n_steps());
    idx.checked_flat(t_index, s_index);
    FieldSample out;
    out.values = field.y_values(t_index, s_index);
    const CellStats st = field.y_stats(t_index, s_index);
    out.mean = st.mean;
    out.se = st.se;
    return out;
}

std::vector<double> realized_backward_sum(const TwoTimeField& field, int label, int from_level) {
    const PathEnsemble& ens = field.ensemble();
    const ProblemSpec& spec = ens.spec();
    const int n_steps = field.n_steps();
    TriangularIndex(n_steps).checked_flat(label, from_level);
    const auto um = static_cast<std::size_t>(spec.dim_value);
    const auto ud = static_cast<std::size_t>(spec.dim_state);
    const std::size_t n = field.n_paths();
    const double dt = field.grid().dt();
    const bool uses_diag = generator_uses_diagonal(spec);
    std::vector<double> out = field.y_values(label, n_steps);
    std::array<double, kMaxDim> y{}, dg{}, gv{};
    std::array<double, kMaxDim * kMaxDim> z{};
    for (int k = from_level; k < n_steps; ++k) {
        for (std::size_t p = 0; p < n; ++p) {
            field.z_at(label, k, p, z);
            const auto dw = ens.dw(p, k);
            if (!spec.generator_is_zero()) {
                field.y_at(label, k + 1, p, y);
                if (uses_diag) field.y_at(k + 1, k + 1, p, dg);
                spec.eval_generator(field.grid().node(label), field.grid().node(k + 1), ens.x(p, k + 1),
                                    std::span<const double>(y).first(um),
                                    std::span<const double>(dg).first(um),
                                    std::span<const double>(z).first(um * ud), gv);
            }
            for (std::size_t l = 0; l < um; ++l) {
                double mart = 0.0;
                if (k >= ens.start_index()) {
                    for (std::size_t j = 0; j < ud; ++j) mart += z[l * ud + j] * dw[j];
                }
                out[p * um + l] += (spec.generator_is_zero() ? 0.0 : dt * gv[l]) - mart;
            }
        }
    }
    return out;
}

void export_field_csv(const TwoTimeField& field, std::ostream& out) {
    const int m = field.dim_value();
    const int d = field.dim_state();
    out << "i,k,t,s";
    for (int l = 0; l < m; ++l) out << ",mean_y" << l;
    for (int l = 0; l < m; ++l) out << ",se_y" << l;
    for (int l = 0; l < m; ++l) {
        for (int j = 0; j < d; ++j) out << ",mean_z" << l << '_' << j;
    }
    out << '\n';
    out.precision(17);
    for (const auto& [i, k] : TriangularIndex(field.n_steps()).sweep_order()) {
        if (!field.has_cell(i, k)) continue;
        const CellStats y = field.y_stats(i, k);
        out << i << ',' << k << ',' << field.grid().node(i) << ',' << field.grid().node(k);
        for (double v : y.mean) out << ',' << v;
        for (double v : y.se) out << ',' << v;
        if (k < field.n_steps()) {
            for (double v : field.z_stats(i, k).mean) out << ',' << v;
        } else {
            for (int c = 0; c < m * d; ++c) out << ",";
        }
        out << '\n';
    }
}

}  // namespace ebsvie
