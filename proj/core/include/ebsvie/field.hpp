#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ebsvie/basis.hpp"
#include "ebsvie/grid.hpp"
#include "ebsvie/paths.hpp"

namespace ebsvie {

/// Per-level regression data shared by every label of that level.
struct LevelModel {
    PolynomialBasis basis;
    Eigen::VectorXd basis_mean;  ///< sample mean of phi(X_k)
    Eigen::MatrixXd gram;        ///< sample mean of phi phi'
};

/// Fitted coefficients of one cell (i,k): Y(t_i,s_k) = phi(X_k)' y and
/// Z(t_i,s_k) = phi(X_k)' z, z column l*d + j holding Z(l, j).
struct CellCoefficients {
    Eigen::MatrixXd y;  ///< nb x m
    Eigen::MatrixXd z;  ///< nb x (m d); empty on the terminal level
};

struct CellStats {
    std::vector<double> mean;
    std::vector<double> se;
};

/// Pathwise values supplied by an external representation (e.g. a PDE
/// solution read along the paths).
class PathwiseSource {
public:
    virtual ~PathwiseSource() = default;
    virtual void y_at(int i, int k, std::size_t p, std::span<double> out) const = 0;
    virtual void z_at(int i, int k, std::size_t p, std::span<double> out) const = 0;
};

enum class FieldBackend { Regression, Source, Explicit };

/// Y(t_i,s_k) and Z(t_i,s_k) over the triangle, for every path of the
/// ensemble it was solved on. The regression backend keeps coefficients and
/// evaluates paths on demand; the terminal level is psi(t_i, X_N) itself.
/// The ensemble must outlive the field.
class TwoTimeField {
public:
    static TwoTimeField regression(const PathEnsemble& ens, int dim_value);
    static TwoTimeField explicit_values(const PathEnsemble& ens, int dim_value);
    static TwoTimeField from_source(const PathEnsemble& ens, int dim_value,
                                    std::shared_ptr<const PathwiseSource> source);

    FieldBackend backend() const noexcept { return backend_; }
    const PathEnsemble& ensemble() const noexcept { return *ens_; }
    const TimeGrid& grid() const noexcept { return ens_->grid(); }
    int n_steps() const noexcept { return ens_->grid().n_steps(); }
    std::size_t n_paths() const noexcept { return ens_->n_paths(); }
    int dim_value() const noexcept { return m_; }
    int dim_state() const noexcept { return d_; }
    int start_index() const noexcept { return ens_->start_index(); }

    /// False for cells a partial solve skipped.
    bool has_cell(int i, int k) const;

    void y_at(int i, int k, std::size_t p, std::span<double> out) const;
    void z_at(int i, int k, std::size_t p, std::span<double> out) const;
    /// All paths, n x m (resp. n x m d) row-major.
    std::vector<double> y_values(int i, int k) const;
    std::vector<double> z_values(int i, int k) const;
    std::vector<double> diagonal(int k) const { return y_values(k, k); }

    CellStats y_stats(int i, int k) const;
    CellStats z_stats(int i, int k) const;

    // Regression backend.
    void set_level_model(int k, LevelModel model);
    const LevelModel& level_model(int k) const;
    void set_cell(int i, int k, CellCoefficients coeffs);
    const CellCoefficients& cell(int i, int k) const;

    // Explicit backend: n x m and n x m d slices of one cell.
    std::span<double> explicit_y(int i, int k);
    std::span<double> explicit_z(int i, int k);

private:
    TwoTimeField(const PathEnsemble& ens, int dim_value, FieldBackend backend);
    void require_cell(int i, int k) const;
    void require_z(int i, int k) const;

    const PathEnsemble* ens_;
    int m_;
    int d_;
    FieldBackend backend_;
    TriangularIndex index_;
    std::vector<LevelModel> levels_;
    std::vector<CellCoefficients> cells_;
    std::vector<char> solved_;
    std::vector<double> y_;
    std::vector<double> z_;
    std::shared_ptr<const PathwiseSource> source_;
};

}  // namespace ebsvie
