#include "level_context.hpp"

#include <array>
#include <cmath>

#include "ebsvie/parallel.hpp"

namespace ebsvie::detail {

LevelModel constant_level_model(int dim) {
    LevelModel m;
    m.basis = PolynomialBasis(dim, 0, {}, {}, {});
    m.basis_mean = Eigen::VectorXd::Ones(1);
    m.gram = Eigen::MatrixXd::Ones(1, 1);
    return m;
}

double combine(const PolynomialBasis& basis, std::span<const double> x,
               const Eigen::MatrixXd& coeffs, Eigen::Index col) {
    double scratch[kMaxBasisSize];
    return basis.eval_combination(
        x,
        std::span<const double>(coeffs.data() + col * coeffs.rows(),
                                static_cast<std::size_t>(coeffs.rows())),
        scratch);
}

LevelContext build_level(const ProblemSpec& spec, const PathEnsemble& ens, int k,
                         const BasisSpec& basis, const PolynomialBasis* next_basis,
                         bool keep_moments, int threads) {
    const int d = ens.dim();
    const auto ud = static_cast<std::size_t>(d);
    const std::size_t n = ens.n_paths();
    const int n_steps = ens.grid().n_steps();
    LevelContext ctx;
    ctx.k = k;
    ctx.frozen = k < ens.start_index();
    ctx.terminal_next = k + 1 == n_steps;
    const double dt = ens.grid().dt();
    ctx.sqrt_dt = std::sqrt(dt);
    if (ctx.frozen) {
        ctx.model = constant_level_model(d);
        return ctx;
    }

    ctx.model.basis = PolynomialBasis::fit(ens.level_states(k), n, d, basis.degree);
    auto proj = std::make_shared<LeastSquaresProjector>(
        ctx.model.basis, ens.level_states(k), n,
        "cells (i, k) with k = " + std::to_string(k));
    ctx.model.basis_mean = proj->basis_mean();
    ctx.model.gram = proj->gram();
    ctx.proj = proj;

    const double s = ens.grid().node(k);
    ctx.mu.resize(n * ud);
    ctx.scaled_sigma.resize(n * ud * ud);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::array<double, kMaxDim> drift{};
        std::array<double, kMaxDim * kMaxDim> sigma{};
        for (std::size_t p = begin; p < end; ++p) {
            const auto x = ens.x(p, k);
            spec.eval_drift(s, x, drift);
            spec.eval_diffusion(s, x, sigma);
            for (std::size_t l = 0; l < ud; ++l) ctx.mu[p * ud + l] = x[l] + drift[l] * dt;
            for (std::size_t e = 0; e < ud * ud; ++e) ctx.scaled_sigma[p * ud * ud + e] = sigma[e] * ctx.sqrt_dt;
        }
    });

    if (ctx.terminal_next) {
        ctx.rule = tensor_rule((basis.degree + 4) / 2 + 3, d);
        return ctx;
    }

    const PolynomialBasis& nb_basis = *next_basis;
    const int nbn = nb_basis.size();
    ctx.rule = tensor_rule((nb_basis.degree() + 4) / 2, d);
    const auto n_i = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd M(n_i, nbn);
    std::vector<Eigen::MatrixXd> MZ(ud, Eigen::MatrixXd(n_i, nbn));
    std::vector<Eigen::MatrixXd> MZZ;
    if (keep_moments) MZZ.assign(ud * ud, Eigen::MatrixXd(n_i, nbn));
    const TensorRule& rule = ctx.rule;
    const double inv_sqrt_dt = 1.0 / ctx.sqrt_dt;

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::array<double, kMaxBasisSize> f0{}, fq{}, acc{};
        std::array<double, kMaxBasisSize * kMaxDim> accz{};
        std::array<double, kMaxBasisSize * kMaxDim * kMaxDim> acczz{};
        std::array<double, kMaxDim> node{};
        const auto un = static_cast<std::size_t>(nbn);
        for (std::size_t p = begin; p < end; ++p) {
            const double* mu = ctx.mu.data() + p * ud;
            const double* sg = ctx.scaled_sigma.data() + p * ud * ud;
            nb_basis.eval(std::span<const double>(mu, ud), f0);
            std::fill_n(acc.begin(), un, 0.0);
            std::fill_n(accz.begin(), un * ud, 0.0);
            if (keep_moments) std::fill_n(acczz.begin(), un * ud * ud, 0.0);
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double* xi = rule.nodes.data() + q * ud;
                for (std::size_t r = 0; r < ud; ++r) {
                    double v = mu[r];
                    for (std::size_t c = 0; c < ud; ++c) v += sg[r * ud + c] * xi[c];
                    node[r] = v;
                }
                nb_basis.eval(std::span<const double>(node.data(), ud), fq);
                const double w = rule.weights[q];
                for (std::size_t b = 0; b < un; ++b) {
                    const double df = w * (fq[b] - f0[b]);
                    acc[b] += df;
                    for (std::size_t j = 0; j < ud; ++j) accz[j * un + b] += df * xi[j];
                    if (keep_moments) {
                        for (std::size_t i = 0; i < ud; ++i) {
                            for (std::size_t j = 0; j < ud; ++j) {
                                acczz[(i * ud + j) * un + b] += df * xi[i] * xi[j];
                            }
                        }
                    }
                }
            }
            const auto pi = static_cast<Eigen::Index>(p);
            for (std::size_t b = 0; b < un; ++b) {
                const auto bi = static_cast<Eigen::Index>(b);
                M(pi, bi) = f0[b] + acc[b];
                for (std::size_t j = 0; j < ud; ++j) MZ[j](pi, bi) = accz[j * un + b] * inv_sqrt_dt;
                if (keep_moments) {
                    for (std::size_t i = 0; i < ud; ++i) {
                        for (std::size_t j = 0; j < ud; ++j) {
                            MZZ[i * ud + j](pi, bi) =
                                (i == j ? f0[b] : 0.0) + acczz[(i * ud + j) * un + b];
                        }
                    }
                }
            }
        }
    });

    ctx.K = ctx.proj->project(M);
    ctx.KZ.reserve(ud);
    for (std::size_t j = 0; j < ud; ++j) ctx.KZ.push_back(ctx.proj->project(MZ[j]));
    if (keep_moments) {
        ctx.M = std::move(M);
        ctx.MZ = std::move(MZ);
        ctx.MZZ = std::move(MZZ);
    }
    return ctx;
}

}  // namespace ebsvie::detail
