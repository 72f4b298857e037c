#pragma once

#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "ebsvie/basis.hpp"
#include "ebsvie/field.hpp"
#include "ebsvie/mc_solver.hpp"
#include "ebsvie/paths.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

/// grad Y(t_i, s_k) = G_{i,k}(X_k) grad X_k and grad Z_j = GZ_{i,k,j}(X_k) grad X_k
/// with G, GZ_j matrix-valued (m x d) polynomials in the level basis. The
/// terminal level uses psi_x(t_i, X_N) grad X_N directly. Keeps references
/// to the base field and its ensemble.
class VariationalField {
public:
    struct Cell {
        Eigen::MatrixXd g;                ///< nb x (m d), column r*d + c
        std::vector<Eigen::MatrixXd> gz;  ///< d entries, nb x (m d)
    };

    VariationalField(const TwoTimeField& base, const ProblemSpec& spec);

    const TwoTimeField& base() const noexcept { return *base_; }
    const PathEnsemble& ensemble() const noexcept { return base_->ensemble(); }
    int dim_value() const noexcept { return m_; }
    int dim_state() const noexcept { return d_; }
    int n_steps() const noexcept { return base_->n_steps(); }

    bool has_cell(int i, int k) const;
    /// m x d row-major.
    void grad_y_at(int i, int k, std::size_t p, std::span<double> out) const;
    /// Derivative of Z(l, j) in x_c at [(l*d + j)*d + c]; zero on frozen levels.
    void grad_z_at(int i, int k, std::size_t p, std::span<double> out) const;

    /// Sample mean and standard error of grad Y over paths, m x d.
    CellStats grad_y_stats(int i, int k) const;

    void set_cell(int i, int k, Cell cell);
    const Cell& cell(int i, int k) const;
    void set_level(int k, LevelModel model);
    const LevelModel& level_model(int k) const { return levels_.at(static_cast<std::size_t>(k)); }

private:
    void require(int i, int k) const;
    void matrix_value(const Eigen::MatrixXd& coeffs, int k, std::size_t p, std::span<double> out) const;

    const TwoTimeField* base_;
    ProblemSpec spec_;
    int m_;
    int d_;
    TriangularIndex index_;
    std::vector<LevelModel> levels_;
    std::vector<Cell> cells_;
    std::vector<char> solved_;
};

/// Same backward sweep as the regression solver for the linear equation
///   grad Y(i,k) = E[grad Y(i,k+1) + dt H | F_k],
///   H = g_x grad X + g_y grad Y + g_y' grad Y(diag) + sum_j g_zj grad Z_j,
/// with the partials evaluated along the base solution.
VariationalField solve_variational_ebsvie(const ProblemSpec& spec, const PathEnsemble& ens,
                                          const TwoTimeField& base, const BasisSpec& basis,
                                          int threads = 1);

/// Z = grad Y (grad X)^{-1} sigma(s_k, X_k) pathwise; Y is the base field's.
/// Zero before the start time. Throws SingularityError when some grad X_k
/// has condition number above 1e12.
TwoTimeField pathwise_z(const VariationalField& var, const PathEnsemble& ens,
                        const ProblemSpec& spec);

struct QuotientCell {
    int i = 0;
    int k = 0;
    std::vector<double> quotient_mean;  ///< mean of (Y^{x+h e} - Y^x) / h, m entries
    std::vector<double> gradient_mean;  ///< mean of grad Y e, m entries
    double deviation = 0.0;             ///< max over components of |difference|
};

struct FiniteDiffResult {
    double h = 0.0;
    int direction = 0;
    std::vector<QuotientCell> cells;
    double max_deviation = 0.0;
    int worst_i = 0;
    int worst_k = 0;
    /// Standard error of the pathwise difference at the worst cell.
    double se_at_worst = 0.0;
    std::shared_ptr<PathEnsemble> base_paths;
    std::shared_ptr<PathEnsemble> shifted_paths;
    std::shared_ptr<TwoTimeField> base_field;
    std::shared_ptr<TwoTimeField> shifted_field;
};

struct FiniteDiffParams {
    std::size_t n_paths = 10000;
    std::uint64_t seed = 1;
    BasisSpec basis;
    int threads = 1;
    /// Labels compared; empty means every label.
    std::vector<int> labels;
};

/// One-sided difference quotient in direction e_direction with common
/// random numbers, compared with the variational gradient over the grid.
FiniteDiffResult finite_diff_y(const ProblemSpec& spec, const TimeGrid& grid,
                               const StartPoint& start, double h, int direction,
                               const FiniteDiffParams& params);

}  // namespace ebsvie
