#include "ebsvie/variational.hpp"

#include <array>
#include <cmath>

#include "ebsvie/errors.hpp"
#include "ebsvie/parallel.hpp"
#include "level_context.hpp"

namespace ebsvie {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxDim, kMaxDim>;

VariationalField::VariationalField(const TwoTimeField& base, const ProblemSpec& spec)
    : base_(&base),
      spec_(spec),
      m_(spec.dim_value),
      d_(spec.dim_state),
      index_(base.n_steps()) {
    levels_.resize(static_cast<std::size_t>(base.n_steps() + 1));
    cells_.resize(index_.size());
    solved_.assign(index_.size(), 0);
}

bool VariationalField::has_cell(int i, int k) const {
    return index_.contains(i, k) && solved_[index_.flat(i, k)] != 0;
}

void VariationalField::require(int i, int k) const {
    if (!index_.contains(i, k) || !solved_[index_.flat(i, k)]) {
        throw ArgumentError("malliavin", "variational cell (" + std::to_string(i) + "," +
                                             std::to_string(k) + ") not available");
    }
}

void VariationalField::set_cell(int i, int k, Cell cell) {
    const std::size_t f = index_.checked_flat(i, k);
    cells_[f] = std::move(cell);
    solved_[f] = 1;
}

const VariationalField::Cell& VariationalField::cell(int i, int k) const {
    require(i, k);
    return cells_[index_.flat(i, k)];
}

void VariationalField::set_level(int k, LevelModel model) {
    levels_.at(static_cast<std::size_t>(k)) = std::move(model);
}

void VariationalField::matrix_value(const Eigen::MatrixXd& coeffs, int k, std::size_t p,
                                    std::span<double> out) const {
    const auto& basis = levels_[static_cast<std::size_t>(k)].basis;
    const auto x = base_->ensemble().x(p, k);
    for (Eigen::Index c = 0; c < coeffs.cols(); ++c) {
        out[static_cast<std::size_t>(c)] = detail::combine(basis, x, coeffs, c);
    }
}

void VariationalField::grad_y_at(int i, int k, std::size_t p, std::span<double> out) const {
    require(i, k);
    const PathEnsemble& ens = base_->ensemble();
    std::array<double, kMaxDim * kMaxDim> g{};
    if (k == n_steps()) {
        spec_.eval_free_term_jac(ens.grid().node(i), ens.x(p, k), g);
    } else {
        matrix_value(cells_[index_.flat(i, k)].g, k, p, g);
    }
    Eigen::Map<const Mat> G(g.data(), m_, d_);
    Eigen::Map<const Mat> gx(ens.grad_x(p, k).data(), d_, d_);
    const Mat prod = G * gx;
    for (int r = 0; r < m_; ++r) {
        for (int c = 0; c < d_; ++c) out[static_cast<std::size_t>(r * d_ + c)] = prod(r, c);
    }
}

void VariationalField::grad_z_at(int i, int k, std::size_t p, std::span<double> out) const {
    require(i, k);
    if (k == n_steps()) throw ArgumentError("malliavin", "grad Z is undefined on the terminal level");
    const PathEnsemble& ens = base_->ensemble();
    const auto& cell = cells_[index_.flat(i, k)];
    Eigen::Map<const Mat> gx(ens.grad_x(p, k).data(), d_, d_);
    std::array<double, kMaxDim * kMaxDim> g{};
    for (int j = 0; j < d_; ++j) {
        matrix_value(cell.gz[static_cast<std::size_t>(j)], k, p, g);
        Eigen::Map<const Mat> G(g.data(), m_, d_);
        const Mat prod = G * gx;
        for (int l = 0; l < m_; ++l) {
            for (int c = 0; c < d_; ++c) {
                out[static_cast<std::size_t>((l * d_ + j) * d_ + c)] = prod(l, c);
            }
        }
    }
}

CellStats VariationalField::grad_y_stats(int i, int k) const {
    require(i, k);
    const std::size_t n = base_->n_paths();
    const auto w = static_cast<std::size_t>(m_ * d_);
    std::vector<double> sum(w, 0.0), sq(w, 0.0);
    std::array<double, kMaxDim * kMaxDim> v{};
    for (std::size_t p = 0; p < n; ++p) {
        grad_y_at(i, k, p, v);
        for (std::size_t c = 0; c < w; ++c) sum[c] += v[c];
    }
    CellStats s;
    for (std::size_t c = 0; c < w; ++c) s.mean.push_back(sum[c] / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p) {
        grad_y_at(i, k, p, v);
        for (std::size_t c = 0; c < w; ++c) {
            const double dv = v[c] - s.mean[c];
            sq[c] += dv * dv;
        }
    }
    for (std::size_t c = 0; c < w; ++c) {
        s.se.push_back(n > 1 ? std::sqrt(sq[c] / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0);
    }
    return s;
}

namespace {

/// Label-independent projections of the transition against the level-(k+1)
/// basis, weighted by the one-step flow J = A + sum_i sigma^i_x dW^i.
struct FlowProjections {
    std::vector<Eigen::MatrixXd> kj;                ///< [c*d+e]: nb x nb'
    std::vector<std::vector<Eigen::MatrixXd>> kzj;  ///< [c*d+e][j]
};

struct PathFlow {
    std::vector<double> a;      ///< n x d x d: I + b_x dt
    std::vector<double> bsig;   ///< n x d x d x d: sigma^i_x at [p][i][r][c]
};

PathFlow path_flow(const ProblemSpec& spec, const PathEnsemble& ens, int k) {
    const auto ud = static_cast<std::size_t>(ens.dim());
    const std::size_t n = ens.n_paths();
    PathFlow f;
    f.a.resize(n * ud * ud);
    f.bsig.resize(n * ud * ud * ud);
    const double s = ens.grid().node(k);
    const double dt = ens.grid().dt();
    std::array<double, kMaxDim * kMaxDim> bj{};
    for (std::size_t p = 0; p < n; ++p) {
        const auto x = ens.x(p, k);
        spec.eval_drift_jac(s, x, bj);
        for (std::size_t r = 0; r < ud; ++r) {
            for (std::size_t c = 0; c < ud; ++c) {
                f.a[p * ud * ud + r * ud + c] = (r == c ? 1.0 : 0.0) + bj[r * ud + c] * dt;
            }
        }
        spec.eval_diffusion_jac(s, x, std::span<double>(f.bsig.data() + p * ud * ud * ud, ud * ud * ud));
    }
    return f;
}

FlowProjections flow_projections(const detail::LevelContext& ctx, const PathFlow& flow, int d,
                                 double dt) {
    const auto ud = static_cast<std::size_t>(d);
    const Eigen::Index n = ctx.M.rows();
    FlowProjections out;
    for (std::size_t c = 0; c < ud; ++c) {
        for (std::size_t e = 0; e < ud; ++e) {
            Eigen::MatrixXd w(n, ctx.M.cols());
            std::vector<Eigen::MatrixXd> wz(ud, Eigen::MatrixXd(n, ctx.M.cols()));
            for (Eigen::Index p = 0; p < n; ++p) {
                const auto up = static_cast<std::size_t>(p);
                const double a = flow.a[up * ud * ud + c * ud + e];
                w.row(p) = a * ctx.M.row(p);
                for (std::size_t i = 0; i < ud; ++i) {
                    const double bs = flow.bsig[up * ud * ud * ud + i * ud * ud + c * ud + e];
                    if (bs != 0.0) w.row(p) += bs * dt * ctx.MZ[i].row(p);
                }
                for (std::size_t j = 0; j < ud; ++j) {
                    wz[j].row(p) = a * ctx.MZ[j].row(p);
                    for (std::size_t i = 0; i < ud; ++i) {
                        const double bs = flow.bsig[up * ud * ud * ud + i * ud * ud + c * ud + e];
                        if (bs != 0.0) wz[j].row(p) += bs * ctx.MZZ[i * ud + j].row(p);
                    }
                }
            }
            out.kj.push_back(ctx.proj->project(w));
            std::vector<Eigen::MatrixXd> kz;
            for (std::size_t j = 0; j < ud; ++j) kz.push_back(ctx.proj->project(wz[j]));
            out.kzj.push_back(std::move(kz));
        }
    }
    return out;
}

/// G(x) at level k+1 for label i, m x d: psi_x on the terminal level.
void next_gradient(const ProblemSpec& spec, const VariationalField& var, int i, int kn,
                   std::span<const double> x, std::span<double> out) {
    if (kn == var.n_steps()) {
        spec.eval_free_term_jac(var.ensemble().grid().node(i), x, out);
        return;
    }
    const auto& g = var.cell(i, kn).g;
    const auto& basis = var.level_model(kn).basis;
    for (Eigen::Index c = 0; c < g.cols(); ++c) out[static_cast<std::size_t>(c)] = detail::combine(basis, x, g, c);
}

VariationalField::Cell frozen_cell(const ProblemSpec& spec, const VariationalField& var,
                                   const TwoTimeField& base, int i, int k, bool uses_diag) {
    const PathEnsemble& ens = base.ensemble();
    const int m = spec.dim_value, d = spec.dim_state;
    const auto um = static_cast<std::size_t>(m), ud = static_cast<std::size_t>(d);
    const auto x = std::span<const double>(ens.start().x);
    std::array<double, kMaxDim * kMaxDim> gn{}, dn{};
    next_gradient(spec, var, i, k + 1, x, gn);
    if (uses_diag) next_gradient(spec, var, k + 1, k + 1, x, dn);
    VariationalField::Cell cell;
    cell.g.resize(1, m * d);
    for (std::size_t c = 0; c < um * ud; ++c) cell.g(0, static_cast<Eigen::Index>(c)) = gn[c];
    if (!spec.generator_is_zero()) {
        std::array<double, kMaxDim> y{}, yp{};
        std::array<double, kMaxDim * kMaxDim> z{};
        base.y_at(i, k + 1, 0, y);
        if (uses_diag) base.y_at(k + 1, k + 1, 0, yp);
        const GeneratorJacobian jac = spec.eval_generator_grads(
            ens.grid().node(i), ens.grid().node(k + 1), x, std::span<const double>(y).first(um),
            std::span<const double>(yp).first(um), std::span<const double>(z).first(um * ud));
        Eigen::Map<const Mat> gx(jac.gx.data(), m, d), gy(jac.gy.data(), m, m), gyp(jac.gyp.data(), m, m);
        Eigen::Map<const Mat> Gn(gn.data(), m, d), Dn(dn.data(), m, d);
        const Mat h = gx + gy * Gn + gyp * Dn;
        const double dt = ens.grid().dt();
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < d; ++c) cell.g(0, r * d + c) += dt * h(r, c);
        }
    }
    cell.gz.assign(ud, Eigen::MatrixXd::Zero(1, m * d));
    return cell;
}

VariationalField::Cell active_cell(const ProblemSpec& spec, const VariationalField& var,
                                   const TwoTimeField& base, const detail::LevelContext& ctx,
                                   const FlowProjections& fp, const PathFlow& flow, int i,
                                   bool uses_diag) {
    const PathEnsemble& ens = base.ensemble();
    const int k = ctx.k;
    const int m = spec.dim_value, d = spec.dim_state;
    const auto um = static_cast<std::size_t>(m), ud = static_cast<std::size_t>(d);
    const std::size_t n = ens.n_paths();
    const auto n_i = static_cast<Eigen::Index>(n);
    const double dt = ens.grid().dt();
    const double t_i = ens.grid().node(i);
    VariationalField::Cell cell;

    if (ctx.terminal_next) {
        Eigen::MatrixXd target(n_i, m * d * (1 + d));
        const TensorRule& rule = ctx.rule;
        std::array<double, kMaxDim * kMaxDim> f0{}, fq{};
        std::array<double, kMaxDim> node{};
        for (std::size_t p = 0; p < n; ++p) {
            const double* mu = ctx.mu.data() + p * ud;
            const double* sg = ctx.scaled_sigma.data() + p * ud * ud;
            Eigen::Map<const Mat> A(flow.a.data() + p * ud * ud, d, d);
            spec.eval_free_term_jac(t_i, std::span<const double>(mu, ud), f0);
            Eigen::Map<const Mat> F0(f0.data(), m, d);
            Mat ey = F0 * A;
            std::array<Mat, kMaxDim> ez;
            for (std::size_t j = 0; j < ud; ++j) {
                Eigen::Map<const Mat> Bj(flow.bsig.data() + p * ud * ud * ud + j * ud * ud, d, d);
                ez[j] = F0 * Bj;
            }
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double* xi = rule.nodes.data() + q * ud;
                for (std::size_t r = 0; r < ud; ++r) {
                    double v = mu[r];
                    for (std::size_t c = 0; c < ud; ++c) v += sg[r * ud + c] * xi[c];
                    node[r] = v;
                }
                spec.eval_free_term_jac(t_i, std::span<const double>(node.data(), ud), fq);
                Eigen::Map<const Mat> Fq(fq.data(), m, d);
                Mat J = A;
                for (std::size_t j = 0; j < ud; ++j) {
                    Eigen::Map<const Mat> Bj(flow.bsig.data() + p * ud * ud * ud + j * ud * ud, d, d);
                    J += Bj * (ctx.sqrt_dt * xi[j]);
                }
                const Mat dj = rule.weights[q] * ((Fq - F0) * J);
                ey += dj;
                for (std::size_t j = 0; j < ud; ++j) ez[j] += dj * (xi[j] / ctx.sqrt_dt);
            }
            const auto pi = static_cast<Eigen::Index>(p);
            for (int r = 0; r < m; ++r) {
                for (int c = 0; c < d; ++c) {
                    target(pi, r * d + c) = ey(r, c);
                    for (int j = 0; j < d; ++j) target(pi, m * d * (1 + j) + r * d + c) = ez[static_cast<std::size_t>(j)](r, c);
                }
            }
        }
        const Eigen::MatrixXd coeffs = ctx.proj->project(target);
        cell.g = coeffs.leftCols(m * d);
        for (int j = 0; j < d; ++j) cell.gz.push_back(coeffs.middleCols(m * d * (1 + j), m * d));
    } else {
        const Eigen::MatrixXd& C = var.cell(i, k + 1).g;
        const Eigen::Index nb = ctx.K.rows();
        cell.g = Eigen::MatrixXd::Zero(nb, m * d);
        cell.gz.assign(ud, Eigen::MatrixXd::Zero(nb, m * d));
        for (int r = 0; r < m; ++r) {
            for (int e = 0; e < d; ++e) {
                for (int c = 0; c < d; ++c) {
                    const auto ce = static_cast<std::size_t>(c * d + e);
                    cell.g.col(r * d + e) += fp.kj[ce] * C.col(r * d + c);
                    for (std::size_t j = 0; j < ud; ++j) {
                        cell.gz[j].col(r * d + e) += fp.kzj[ce][j] * C.col(r * d + c);
                    }
                }
            }
        }
    }

    if (!spec.generator_is_zero()) {
        Eigen::MatrixXd target(n_i, m * d);
        std::array<double, kMaxDim> y{}, yp{};
        std::array<double, kMaxDim * kMaxDim> z{}, gn{}, dn{}, gzv{};
        const double s_next = ens.grid().node(k + 1);
        for (std::size_t p = 0; p < n; ++p) {
            const auto xn = ens.x(p, k + 1);
            base.y_at(i, k + 1, p, y);
            if (uses_diag) base.y_at(k + 1, k + 1, p, yp);
            base.z_at(i, k, p, z);
            const GeneratorJacobian jac = spec.eval_generator_grads(
                t_i, s_next, xn, std::span<const double>(y).first(um), std::span<const double>(yp).first(um),
                std::span<const double>(z).first(um * ud));
            next_gradient(spec, var, i, k + 1, xn, gn);
            if (uses_diag) next_gradient(spec, var, k + 1, k + 1, xn, dn);
            Eigen::Map<const Mat> gx(jac.gx.data(), m, d), gy(jac.gy.data(), m, m), gyp(jac.gyp.data(), m, m);
            Eigen::Map<const Mat> Gn(gn.data(), m, d), Dn(dn.data(), m, d);
            Mat J(d, d);
            Eigen::Map<const Mat> A(flow.a.data() + p * ud * ud, d, d);
            J = A;
            const auto dw = ens.dw(p, k);
            for (std::size_t j = 0; j < ud; ++j) {
                Eigen::Map<const Mat> Bj(flow.bsig.data() + p * ud * ud * ud + j * ud * ud, d, d);
                J += Bj * dw[j];
            }
            Mat h = (gx + gy * Gn + gyp * Dn) * J;
            for (int j = 0; j < d; ++j) {
                const auto& gzc = cell.gz[static_cast<std::size_t>(j)];
                for (Eigen::Index c = 0; c < gzc.cols(); ++c) {
                    gzv[static_cast<std::size_t>(c)] = detail::combine(ctx.model.basis, ens.x(p, k), gzc, c);
                }
                // sum_l gz[r, l*d + j] GZ_j[l, e]
                for (int r = 0; r < m; ++r) {
                    for (int e = 0; e < d; ++e) {
                        double acc = 0.0;
                        for (int l = 0; l < m; ++l) {
                            acc += jac.gz[static_cast<std::size_t>(r * m * d + l * d + j)] *
                                   gzv[static_cast<std::size_t>(l * d + e)];
                        }
                        h(r, e) += acc;
                    }
                }
            }
            const auto pi = static_cast<Eigen::Index>(p);
            for (int r = 0; r < m; ++r) {
                for (int e = 0; e < d; ++e) target(pi, r * d + e) = h(r, e);
            }
        }
        cell.g += dt * ctx.proj->project(target);
    }
    if (!cell.g.allFinite()) {
        throw DivergenceError("malliavin", "non-finite grad Y at cell (" + std::to_string(i) + "," +
                                               std::to_string(k) + ")");
    }
    return cell;
}

}  // namespace

VariationalField solve_variational_ebsvie(const ProblemSpec& spec, const PathEnsemble& ens,
                                          const TwoTimeField& base, const BasisSpec& basis,
                                          int threads) {
    spec.check();
    if (&base.ensemble() != &ens) {
        throw ArgumentError("malliavin", "base field was solved on a different ensemble");
    }
    const int n_steps = ens.grid().n_steps();
    const bool uses_diag = generator_uses_diagonal(spec);
    VariationalField var(base, spec);
    for (int i = 0; i <= n_steps; ++i) {
        if (base.has_cell(i, n_steps)) var.set_cell(i, n_steps, {});
    }
    for (int k = n_steps - 1; k >= 0; --k) {
        std::vector<int> labels;
        for (int i = 0; i <= k; ++i) {
            if (base.has_cell(i, k)) labels.push_back(i);
        }
        if (labels.empty()) break;
        const PolynomialBasis* next = k + 1 < n_steps ? &var.level_model(k + 1).basis : nullptr;
        const auto ctx = detail::build_level(spec, ens, k, basis, next, true, threads);
        var.set_level(k, ctx.frozen ? detail::constant_level_model(spec.dim_state) : ctx.model);
        std::vector<VariationalField::Cell> cells(labels.size());
        if (ctx.frozen) {
            for (std::size_t q = 0; q < labels.size(); ++q) {
                cells[q] = frozen_cell(spec, var, base, labels[q], k, uses_diag);
            }
        } else {
            const PathFlow flow = path_flow(spec, ens, k);
            FlowProjections fp;
            if (!ctx.terminal_next) fp = flow_projections(ctx, flow, spec.dim_state, ens.grid().dt());
            parallel_for(labels.size(), threads, [&](std::size_t begin, std::size_t end) {
                for (std::size_t q = begin; q < end; ++q) {
                    cells[q] = active_cell(spec, var, base, ctx, fp, flow, labels[q], uses_diag);
                }
            });
        }
        for (std::size_t q = 0; q < labels.size(); ++q) var.set_cell(labels[q], k, std::move(cells[q]));
    }
    return var;
}

namespace {

class PathwiseZ final : public PathwiseSource {
public:
    PathwiseZ(const VariationalField& var, const ProblemSpec& spec) : var_(&var), spec_(spec) {}

    void y_at(int i, int k, std::size_t p, std::span<double> out) const override {
        var_->base().y_at(i, k, p, out);
    }

    void z_at(int i, int k, std::size_t p, std::span<double> out) const override {
        const PathEnsemble& ens = var_->ensemble();
        const int m = spec_.dim_value, d = spec_.dim_state;
        if (k < ens.start_index()) {
            std::fill_n(out.begin(), static_cast<std::size_t>(m * d), 0.0);
            return;
        }
        std::array<double, kMaxDim * kMaxDim> gy{}, sg{};
        var_->grad_y_at(i, k, p, gy);
        spec_.eval_diffusion(ens.grid().node(k), ens.x(p, k), sg);
        Eigen::Map<const Mat> GY(gy.data(), m, d), S(sg.data(), d, d);
        Eigen::Map<const Mat> GX(ens.grad_x(p, k).data(), d, d);
        const Mat prod = d == 1 ? Mat(GY * (S(0, 0) / GX(0, 0))) : Mat(GY * Mat(Mat(GX).partialPivLu().solve(Mat(S))));
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < d; ++c) out[static_cast<std::size_t>(r * d + c)] = prod(r, c);
        }
    }

private:
    const VariationalField* var_;
    ProblemSpec spec_;
};

}  // namespace

TwoTimeField pathwise_z(const VariationalField& var, const PathEnsemble& ens, const ProblemSpec& spec) {
    if (&var.ensemble() != &ens) throw ArgumentError("malliavin", "variational field uses another ensemble");
    const int d = ens.dim();
    for (int k = ens.start_index(); k <= ens.grid().n_steps(); ++k) {
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            Eigen::Map<const Mat> GX(ens.grad_x(p, k).data(), d, d);
            double cond;
            if (d == 1) {
                cond = GX(0, 0) != 0.0 ? 1.0 : INFINITY;
            } else {
                Eigen::JacobiSVD<Mat> svd(GX);
                const auto& sv = svd.singularValues();
                cond = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : INFINITY;
            }
            if (!(cond <= 1e12)) {
                throw SingularityError("malliavin", "grad X singular on path " + std::to_string(p) +
                                                        " at step " + std::to_string(k));
            }
        }
    }
    return TwoTimeField::from_source(ens, spec.dim_value, std::make_shared<PathwiseZ>(var, spec));
}

FiniteDiffResult finite_diff_y(const ProblemSpec& spec, const TimeGrid& grid,
                               const StartPoint& start, double h, int direction,
                               const FiniteDiffParams& params) {
    if (h == 0.0) throw ArgumentError("malliavin", "h must be non-zero");
    if (direction < 0 || direction >= spec.dim_state) {
        throw ArgumentError("malliavin", "direction outside [0, d)");
    }
    FiniteDiffResult res;
    res.h = h;
    res.direction = direction;
    StartPoint shifted = start;
    shifted.x[static_cast<std::size_t>(direction)] += h;
    SimulationOptions so;
    so.threads = params.threads;
    res.base_paths = std::make_shared<PathEnsemble>(
        simulate_paths(spec, grid, start, params.n_paths, params.seed, so));
    res.shifted_paths = std::make_shared<PathEnsemble>(
        simulate_paths(spec, grid, shifted, params.n_paths, params.seed, so));
    SolverOptions opts;
    opts.threads = params.threads;
    opts.labels = params.labels;
    res.base_field = std::make_shared<TwoTimeField>(
        solve_ebsvie_regression(spec, *res.base_paths, params.basis, opts));
    res.shifted_field = std::make_shared<TwoTimeField>(
        solve_ebsvie_regression(spec, *res.shifted_paths, params.basis, opts));
    const VariationalField var =
        solve_variational_ebsvie(spec, *res.base_paths, *res.base_field, params.basis, params.threads);

    const int m = spec.dim_value, d = spec.dim_state;
    const auto um = static_cast<std::size_t>(m);
    const std::size_t n = params.n_paths;
    std::array<double, kMaxDim> ya{}, yb{};
    std::array<double, kMaxDim * kMaxDim> gy{};
    for (const auto& [i, k] : TriangularIndex(grid.n_steps()).sweep_order()) {
        if (!res.base_field->has_cell(i, k) || !var.has_cell(i, k)) continue;
        QuotientCell qc;
        qc.i = i;
        qc.k = k;
        qc.quotient_mean.assign(um, 0.0);
        qc.gradient_mean.assign(um, 0.0);
        const CellStats sa = res.base_field->y_stats(i, k);
        const CellStats sb = res.shifted_field->y_stats(i, k);
        for (std::size_t p = 0; p < n; ++p) {
            var.grad_y_at(i, k, p, gy);
            for (std::size_t l = 0; l < um; ++l) {
                qc.gradient_mean[l] += gy[l * static_cast<std::size_t>(d) + static_cast<std::size_t>(direction)];
            }
        }
        for (std::size_t l = 0; l < um; ++l) {
            qc.quotient_mean[l] = (sb.mean[l] - sa.mean[l]) / h;
            qc.gradient_mean[l] /= static_cast<double>(n);
            qc.deviation = std::max(qc.deviation, std::abs(qc.quotient_mean[l] - qc.gradient_mean[l]));
        }
        if (qc.deviation >= res.max_deviation) {
            res.max_deviation = qc.deviation;
            res.worst_i = i;
            res.worst_k = k;
        }
        res.cells.push_back(std::move(qc));
    }
    // Pathwise spread of the difference at the worst cell.
    std::vector<double> diff(n);
    double mean = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        res.base_field->y_at(res.worst_i, res.worst_k, p, ya);
        res.shifted_field->y_at(res.worst_i, res.worst_k, p, yb);
        var.grad_y_at(res.worst_i, res.worst_k, p, gy);
        diff[p] = (yb[0] - ya[0]) / h - gy[static_cast<std::size_t>(direction)];
        mean += diff[p];
    }
    mean /= static_cast<double>(n);
    double var_sum = 0.0;
    for (double v : diff) var_sum += (v - mean) * (v - mean);
    res.se_at_worst = n > 1 ? std::sqrt(var_sum / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return res;
}

}  // namespace ebsvie
