#include "ebsvie/paths.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <Eigen/Dense>

#include "ebsvie/errors.hpp"
#include "ebsvie/parallel.hpp"
#include "ebsvie/rng.hpp"

namespace ebsvie {
namespace {

constexpr char kMagic[8] = {'E', 'B', 'S', 'V', 'P', 'A', 'T', 'H'};
constexpr std::uint32_t kVersion = 1;

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor,
                                  kMaxDim, kMaxDim>;

int resolve_start_index(const TimeGrid& grid, const StartPoint& start) {
    if (!(start.t >= 0.0) || start.t > grid.horizon() * (1.0 + 1e-12)) {
        throw ArgumentError("sde", "start time " + std::to_string(start.t) + " outside [0, T]");
    }
    const int k0 = grid.index_of(start.t);
    if (k0 < 0) {
        throw ArgumentError("sde", "start time " + std::to_string(start.t) +
                                       " is not a node of the time grid");
    }
    return k0;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw LoadError("sde", "truncated ensemble file");
    return v;
}

}  // namespace

PathEnsemble::PathEnsemble(ProblemSpec spec, TimeGrid grid, StartPoint start,
                           std::size_t n_paths, std::uint64_t seed)
    : spec_(std::move(spec)),
      grid_(grid),
      start_(std::move(start)),
      n_paths_(n_paths),
      seed_(seed),
      d_(spec_.dim_state) {
    spec_.check();
    if (n_paths_ < 1) throw ArgumentError("sde", "n_paths must be >= 1");
    if (std::abs(grid_.horizon() - spec_.horizon) > 1e-12 * spec_.horizon) {
        throw ArgumentError("sde", "grid horizon differs from the problem horizon");
    }
    if (static_cast<int>(start_.x.size()) != d_) {
        throw ArgumentError("sde", "start point has " + std::to_string(start_.x.size()) +
                                       " coordinates, state dimension is " + std::to_string(d_));
    }
    start_index_ = resolve_start_index(grid_, start_);
    start_.t = grid_.node(start_index_);
    const auto n = static_cast<std::size_t>(grid_.n_steps());
    dw_.assign(n * n_paths_ * ud(), 0.0);
    x_.assign((n + 1) * n_paths_ * ud(), 0.0);
    grad_x_.assign((n + 1) * n_paths_ * ud() * ud(), 0.0);
}

PathEnsemble simulate_paths(const ProblemSpec& spec, const TimeGrid& grid,
                            const StartPoint& start, std::size_t n_paths, std::uint64_t seed,
                            const SimulationOptions& options) {
    PathEnsemble ens(spec, grid, start, n_paths, seed);
    const int d = ens.dim();
    const auto ud = static_cast<std::size_t>(d);
    const int n_steps = grid.n_steps();
    const int k0 = ens.start_index();
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    auto& dw = ens.raw_dw();
    auto& xs = ens.raw_x();
    auto& gx = ens.raw_grad_x();
    const auto stride_x = n_paths * ud;
    const auto stride_g = n_paths * ud * ud;

    parallel_for(n_paths, options.threads, [&](std::size_t begin, std::size_t end) {
        std::array<double, kMaxDim> drift{}, cur{};
        std::array<double, kMaxDim * kMaxDim> sigma{}, bjac{}, g{}, gnext{};
        std::array<double, kMaxDim * kMaxDim * kMaxDim> sjac{};
        for (std::size_t p = begin; p < end; ++p) {
            PathStream stream(seed, p);
            for (std::size_t l = 0; l < ud; ++l) cur[l] = start.x[l];
            g.fill(0.0);
            for (int l = 0; l < d; ++l) g[static_cast<std::size_t>(l * d + l)] = 1.0;
            std::copy_n(cur.begin(), ud, xs.begin() + static_cast<std::ptrdiff_t>(p * ud));
            std::copy_n(g.begin(), ud * ud, gx.begin() + static_cast<std::ptrdiff_t>(p * ud * ud));
            for (int k = 0; k < n_steps; ++k) {
                const auto uk = static_cast<std::size_t>(k);
                double* inc = dw.data() + uk * stride_x + p * ud;
                for (std::size_t l = 0; l < ud; ++l) inc[l] = sqrt_dt * stream.normal();
                if (k >= k0) {
                    const double s = grid.node(k);
                    auto xspan = std::span<const double>(cur).first(ud);
                    spec.eval_drift(s, xspan, drift);
                    spec.eval_diffusion(s, xspan, sigma);
                    spec.eval_drift_jac(s, xspan, bjac);
                    spec.eval_diffusion_jac(s, xspan, sjac);
                    // grad X step uses the pre-step state.
                    for (int r = 0; r < d; ++r) {
                        for (int c = 0; c < d; ++c) {
                            double acc = g[static_cast<std::size_t>(r * d + c)];
                            double bdot = 0.0;
                            for (int q = 0; q < d; ++q) {
                                bdot += bjac[static_cast<std::size_t>(r * d + q)] *
                                        g[static_cast<std::size_t>(q * d + c)];
                            }
                            acc += bdot * dt;
                            for (int i = 0; i < d; ++i) {
                                double sdot = 0.0;
                                for (int q = 0; q < d; ++q) {
                                    sdot += sjac[static_cast<std::size_t>(i * d * d + r * d + q)] *
                                            g[static_cast<std::size_t>(q * d + c)];
                                }
                                acc += sdot * inc[i];
                            }
                            gnext[static_cast<std::size_t>(r * d + c)] = acc;
                        }
                    }
                    g = gnext;
                    for (int l = 0; l < d; ++l) {
                        double diff = 0.0;
                        for (int i = 0; i < d; ++i) {
                            diff += sigma[static_cast<std::size_t>(l * d + i)] * inc[i];
                        }
                        cur[static_cast<std::size_t>(l)] += drift[static_cast<std::size_t>(l)] * dt + diff;
                    }
                    for (std::size_t l = 0; l < ud; ++l) {
                        if (!std::isfinite(cur[l])) {
                            throw SimulationError("sde", "non-finite state on path " +
                                                             std::to_string(p) + " at step " +
                                                             std::to_string(k));
                        }
                    }
                }
                std::copy_n(cur.begin(), ud,
                            xs.begin() + static_cast<std::ptrdiff_t>((uk + 1) * stride_x + p * ud));
                std::copy_n(g.begin(), ud * ud,
                            gx.begin() + static_cast<std::ptrdiff_t>((uk + 1) * stride_g + p * ud * ud));
            }
        }
    });
    return ens;
}

MalliavinField malliavin_derivative(const PathEnsemble& ens, int r_index) {
    const int n_steps = ens.grid().n_steps();
    if (r_index < 0 || r_index > n_steps) {
        throw ArgumentError("sde", "r_index " + std::to_string(r_index) + " outside [0, N]");
    }
    const int d = ens.dim();
    const auto ud = static_cast<std::size_t>(d);
    MalliavinField field;
    field.n_paths = ens.n_paths();
    field.n_levels = n_steps + 1;
    field.d = d;
    field.r_index = r_index;
    field.values.assign(ens.n_paths() * static_cast<std::size_t>(n_steps + 1) * ud * ud, 0.0);
    if (r_index <= ens.start_index()) return field;

    const double s_r = ens.grid().node(r_index);
    std::array<double, kMaxDim * kMaxDim> sigma{};
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        ens.spec().eval_diffusion(s_r, ens.x(p, r_index), sigma);
        Eigen::Map<const SmallMatrix> grad_r(ens.grad_x(p, r_index).data(), d, d);
        Eigen::JacobiSVD<SmallMatrix> svd(grad_r);
        const auto& sv = svd.singularValues();
        const double cond = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : INFINITY;
        if (!(cond <= 1e12)) {
            throw SingularityError("sde", "grad X(r) numerically singular on path " +
                                              std::to_string(p) + " (condition " +
                                              std::to_string(cond) + ")");
        }
        Eigen::Map<const SmallMatrix> sig(sigma.data(), d, d);
        const SmallMatrix solved = grad_r.fullPivLu().solve(sig);
        for (int k = r_index + 1; k <= n_steps; ++k) {
            Eigen::Map<const SmallMatrix> grad_k(ens.grad_x(p, k).data(), d, d);
            const SmallMatrix prod = grad_k * solved;
            double* out = field.values.data() +
                          (p * static_cast<std::size_t>(n_steps + 1) + static_cast<std::size_t>(k)) * ud * ud;
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) out[r * d + c] = prod(r, c);
            }
        }
    }
    return field;
}

void export_binary(const PathEnsemble& ens, std::ostream& out) {
    const auto n = static_cast<std::uint64_t>(ens.grid().n_steps());
    const auto d = static_cast<std::uint64_t>(ens.dim());
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(ens.n_paths()));
    write_pod(out, n);
    write_pod(out, d);
    write_pod(out, ens.seed());
    write_pod(out, ens.grid().horizon());
    write_pod(out, ens.start().t);
    for (double v : ens.start().x) write_pod(out, v);
    const int ns = ens.grid().n_steps();
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        for (int k = 0; k < ns; ++k) {
            for (double v : ens.dw(p, k)) write_pod(out, v);
        }
    }
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        for (int k = 0; k <= ns; ++k) {
            for (double v : ens.x(p, k)) write_pod(out, v);
        }
    }
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        for (int k = 0; k <= ns; ++k) {
            for (double v : ens.grad_x(p, k)) write_pod(out, v);
        }
    }
}

PathEnsemble import_binary(std::istream& in, const ProblemSpec& spec) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw LoadError("sde", "not an ensemble file (bad magic)");
    }
    if (read_pod<std::uint32_t>(in) != kVersion) throw LoadError("sde", "unsupported version");
    const auto n_paths = read_pod<std::uint64_t>(in);
    const auto n = read_pod<std::uint64_t>(in);
    const auto d = read_pod<std::uint64_t>(in);
    const auto seed = read_pod<std::uint64_t>(in);
    const auto horizon = read_pod<double>(in);
    StartPoint start;
    start.t = read_pod<double>(in);
    for (std::uint64_t l = 0; l < d; ++l) start.x.push_back(read_pod<double>(in));
    if (static_cast<int>(d) != spec.dim_state) {
        throw LoadError("sde", "ensemble dimension does not match the problem");
    }
    PathEnsemble ens(spec, TimeGrid(horizon, static_cast<int>(n)), start, n_paths, seed);
    const auto ns = static_cast<int>(n);
    const auto ud = static_cast<std::size_t>(d);
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (int k = 0; k < ns; ++k) {
            for (std::size_t l = 0; l < ud; ++l) {
                ens.raw_dw()[(static_cast<std::size_t>(k) * n_paths + p) * ud + l] = read_pod<double>(in);
            }
        }
    }
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (int k = 0; k <= ns; ++k) {
            for (std::size_t l = 0; l < ud; ++l) {
                ens.raw_x()[(static_cast<std::size_t>(k) * n_paths + p) * ud + l] = read_pod<double>(in);
            }
        }
    }
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (int k = 0; k <= ns; ++k) {
            for (std::size_t l = 0; l < ud * ud; ++l) {
                ens.raw_grad_x()[(static_cast<std::size_t>(k) * n_paths + p) * ud * ud + l] =
                    read_pod<double>(in);
            }
        }
    }
    return ens;
}

void export_summary_csv(const PathEnsemble& ens, std::ostream& out) {
    const int d = ens.dim();
    out << "k,s";
    for (int l = 0; l < d; ++l) out << ",mean_x" << l;
    for (int l = 0; l < d; ++l) out << ",var_x" << l;
    out << '\n';
    out.precision(17);
    const double n = static_cast<double>(ens.n_paths());
    for (int k = 0; k <= ens.grid().n_steps(); ++k) {
        std::vector<double> mean(static_cast<std::size_t>(d), 0.0), m2(static_cast<std::size_t>(d), 0.0);
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            const auto xp = ens.x(p, k);
            for (int l = 0; l < d; ++l) mean[static_cast<std::size_t>(l)] += xp[static_cast<std::size_t>(l)];
        }
        for (auto& v : mean) v /= n;
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            const auto xp = ens.x(p, k);
            for (int l = 0; l < d; ++l) {
                const double dv = xp[static_cast<std::size_t>(l)] - mean[static_cast<std::size_t>(l)];
                m2[static_cast<std::size_t>(l)] += dv * dv;
            }
        }
        out << k << ',' << ens.grid().node(k);
        for (double v : mean) out << ',' << v;
        for (double v : m2) out << ',' << v / n;
        out << '\n';
    }
}

}  // namespace ebsvie
