#include "ebsvie/field.hpp"

#include <algorithm>
#include <cmath>

#include "ebsvie/errors.hpp"

namespace ebsvie {
namespace {

std::string cell_name(int i, int k) {
    return "(" + std::to_string(i) + "," + std::to_string(k) + ")";
}

CellStats sample_stats(const std::vector<double>& values, std::size_t n, std::size_t width) {
    CellStats s;
    s.mean.assign(width, 0.0);
    s.se.assign(width, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < width; ++c) s.mean[c] += values[p * width + c];
    }
    for (auto& v : s.mean) v /= static_cast<double>(n);
    if (n < 2) return s;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t c = 0; c < width; ++c) {
            const double dv = values[p * width + c] - s.mean[c];
            s.se[c] += dv * dv;
        }
    }
    for (auto& v : s.se) v = std::sqrt(v / static_cast<double>(n - 1) / static_cast<double>(n));
    return s;
}

CellStats coefficient_stats(const LevelModel& level, const Eigen::MatrixXd& c, std::size_t n) {
    CellStats s;
    for (Eigen::Index col = 0; col < c.cols(); ++col) {
        const double mean = level.basis_mean.dot(c.col(col));
        double var = c.col(col).dot(level.gram * c.col(col)) - mean * mean;
        var = std::max(var, 0.0);
        // Population variance of an exactly constant cell is zero; guard
        // against roundoff from the quadratic form.
        if (c.rows() == 1) var = 0.0;
        s.mean.push_back(mean);
        s.se.push_back(n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0);
    }
    return s;
}

}  // namespace

TwoTimeField::TwoTimeField(const PathEnsemble& ens, int dim_value, FieldBackend backend)
    : ens_(&ens),
      m_(dim_value),
      d_(ens.dim()),
      backend_(backend),
      index_(ens.grid().n_steps()) {
    if (m_ < 1 || m_ > kMaxDim) throw ArgumentError("solver_mc", "value dimension out of range");
    solved_.assign(index_.size(), backend == FieldBackend::Regression ? 0 : 1);
}

TwoTimeField TwoTimeField::regression(const PathEnsemble& ens, int dim_value) {
    TwoTimeField f(ens, dim_value, FieldBackend::Regression);
    f.levels_.resize(static_cast<std::size_t>(ens.grid().n_steps() + 1));
    f.cells_.resize(f.index_.size());
    return f;
}

TwoTimeField TwoTimeField::explicit_values(const PathEnsemble& ens, int dim_value) {
    TwoTimeField f(ens, dim_value, FieldBackend::Explicit);
    const std::size_t per_cell = ens.n_paths() * static_cast<std::size_t>(dim_value);
    f.y_.assign(f.index_.size() * per_cell, 0.0);
    f.z_.assign(f.index_.size() * per_cell * static_cast<std::size_t>(ens.dim()), 0.0);
    return f;
}

TwoTimeField TwoTimeField::from_source(const PathEnsemble& ens, int dim_value,
                                       std::shared_ptr<const PathwiseSource> source) {
    TwoTimeField f(ens, dim_value, FieldBackend::Source);
    f.source_ = std::move(source);
    return f;
}

bool TwoTimeField::has_cell(int i, int k) const {
    return index_.contains(i, k) && solved_[index_.flat(i, k)] != 0;
}

void TwoTimeField::require_cell(int i, int k) const {
    if (!index_.contains(i, k)) {
        throw ArgumentError("solver_mc", "index " + cell_name(i, k) + " outside the triangle");
    }
    if (!solved_[index_.flat(i, k)]) {
        throw ArgumentError("solver_mc", "cell " + cell_name(i, k) + " was not solved");
    }
}

void TwoTimeField::require_z(int i, int k) const {
    require_cell(i, k);
    if (k == n_steps()) throw ArgumentError("solver_mc", "Z is undefined on the terminal level");
}

void TwoTimeField::y_at(int i, int k, std::size_t p, std::span<double> out) const {
    require_cell(i, k);
    const auto um = static_cast<std::size_t>(m_);
    switch (backend_) {
        case FieldBackend::Regression: {
            if (k == n_steps()) {
                ens_->spec().eval_free_term(grid().node(i), ens_->x(p, k), out);
                return;
            }
            const LevelModel& level = levels_[static_cast<std::size_t>(k)];
            const auto& c = cells_[index_.flat(i, k)].y;
            double scratch[kMaxBasisSize];
            for (std::size_t l = 0; l < um; ++l) {
                out[l] = level.basis.eval_combination(
                    ens_->x(p, k),
                    std::span<const double>(c.data() + static_cast<Eigen::Index>(l) * c.rows(),
                                            static_cast<std::size_t>(c.rows())),
                    scratch);
            }
            return;
        }
        case FieldBackend::Explicit: {
            const double* src = y_.data() + (index_.flat(i, k) * n_paths() + p) * um;
            std::copy_n(src, um, out.begin());
            return;
        }
        case FieldBackend::Source:
            source_->y_at(i, k, p, out);
            return;
    }
}

void TwoTimeField::z_at(int i, int k, std::size_t p, std::span<double> out) const {
    require_z(i, k);
    const auto w = static_cast<std::size_t>(m_ * d_);
    switch (backend_) {
        case FieldBackend::Regression: {
            const LevelModel& level = levels_[static_cast<std::size_t>(k)];
            const auto& c = cells_[index_.flat(i, k)].z;
            double scratch[kMaxBasisSize];
            for (std::size_t l = 0; l < w; ++l) {
                out[l] = level.basis.eval_combination(
                    ens_->x(p, k),
                    std::span<const double>(c.data() + static_cast<Eigen::Index>(l) * c.rows(),
                                            static_cast<std::size_t>(c.rows())),
                    scratch);
            }
            return;
        }
        case FieldBackend::Explicit: {
            const double* src = z_.data() + (index_.flat(i, k) * n_paths() + p) * w;
            std::copy_n(src, w, out.begin());
            return;
        }
        case FieldBackend::Source:
            source_->z_at(i, k, p, out);
            return;
    }
}

std::vector<double> TwoTimeField::y_values(int i, int k) const {
    require_cell(i, k);
    const auto um = static_cast<std::size_t>(m_);
    std::vector<double> out(n_paths() * um);
    for (std::size_t p = 0; p < n_paths(); ++p) y_at(i, k, p, std::span<double>(out).subspan(p * um, um));
    return out;
}

std::vector<double> TwoTimeField::z_values(int i, int k) const {
    require_z(i, k);
    const auto w = static_cast<std::size_t>(m_ * d_);
    std::vector<double> out(n_paths() * w);
    for (std::size_t p = 0; p < n_paths(); ++p) z_at(i, k, p, std::span<double>(out).subspan(p * w, w));
    return out;
}

CellStats TwoTimeField::y_stats(int i, int k) const {
    require_cell(i, k);
    if (backend_ == FieldBackend::Regression && k < n_steps()) {
        return coefficient_stats(levels_[static_cast<std::size_t>(k)], cells_[index_.flat(i, k)].y,
                                 n_paths());
    }
    return sample_stats(y_values(i, k), n_paths(), static_cast<std::size_t>(m_));
}

CellStats TwoTimeField::z_stats(int i, int k) const {
    require_z(i, k);
    if (backend_ == FieldBackend::Regression) {
        return coefficient_stats(levels_[static_cast<std::size_t>(k)], cells_[index_.flat(i, k)].z,
                                 n_paths());
    }
    return sample_stats(z_values(i, k), n_paths(), static_cast<std::size_t>(m_ * d_));
}

void TwoTimeField::set_level_model(int k, LevelModel model) {
    if (backend_ != FieldBackend::Regression) {
        throw ArgumentError("solver_mc", "level models exist only on regression fields");
    }
    levels_.at(static_cast<std::size_t>(k)) = std::move(model);
}

const LevelModel& TwoTimeField::level_model(int k) const {
    if (backend_ != FieldBackend::Regression) {
        throw ArgumentError("solver_mc", "level models exist only on regression fields");
    }
    return levels_.at(static_cast<std::size_t>(k));
}

void TwoTimeField::set_cell(int i, int k, CellCoefficients coeffs) {
    if (backend_ != FieldBackend::Regression) {
        throw ArgumentError("solver_mc", "coefficients exist only on regression fields");
    }
    const std::size_t f = index_.checked_flat(i, k);
    cells_[f] = std::move(coeffs);
    solved_[f] = 1;
}

const CellCoefficients& TwoTimeField::cell(int i, int k) const {
    require_cell(i, k);
    if (backend_ != FieldBackend::Regression) {
        throw ArgumentError("solver_mc", "coefficients exist only on regression fields");
    }
    return cells_[index_.flat(i, k)];
}

std::span<double> TwoTimeField::explicit_y(int i, int k) {
    if (backend_ != FieldBackend::Explicit) throw ArgumentError("solver_mc", "not an explicit field");
    const std::size_t per = n_paths() * static_cast<std::size_t>(m_);
    return {y_.data() + index_.checked_flat(i, k) * per, per};
}

std::span<double> TwoTimeField::explicit_z(int i, int k) {
    if (backend_ != FieldBackend::Explicit) throw ArgumentError("solver_mc", "not an explicit field");
    const std::size_t per = n_paths() * static_cast<std::size_t>(m_ * d_);
    return {z_.data() + index_.checked_flat(i, k) * per, per};
}

}  // namespace ebsvie
