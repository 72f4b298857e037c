#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "ebsvie/field.hpp"

namespace ebsvie {

enum class PlotKind { Diagonal, Slice, Convergence, ZCompare };

/// "diagonal", "slice", "convergence", "z-compare"; ArgumentError otherwise.
PlotKind plot_kind_from(std::string_view name);

struct ConvergenceRow {
    int n_steps = 0;
    double error = 0.0;
};

/// Per-cell means of the three Z estimators (component (0,0)) and pairwise
/// RMS differences over paths.
struct ZCompareRow {
    int i = 0;
    int k = 0;
    double z_regression = 0.0;
    double z_pathwise = 0.0;
    double z_pde = 0.0;
    double rms_reg_path = 0.0;
    double rms_reg_pde = 0.0;
    double rms_path_pde = 0.0;
};

struct ZComparison {
    std::vector<ZCompareRow> rows;
    /// rms(a - b) / rms((a + b) / 2) over all compared cells and paths.
    double rel_reg_path = 0.0;
    double rel_reg_pde = 0.0;
    double rel_path_pde = 0.0;
};

/// Cells with start_index <= k < N solved in all three fields.
ZComparison compare_z(const TwoTimeField& regression, const TwoTimeField& pathwise,
                      const TwoTimeField& pde);

/// Columns s, y<l>: the diagonal means.
void write_diagonal_csv(const TwoTimeField& field, std::ostream& out);
/// Columns s, y<l>, se<l> for one label.
void write_slice_csv(const TwoTimeField& field, int label, std::ostream& out);
/// Columns N, err, ratio (previous err / err; empty on the first row).
void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out);
void write_zcompare_csv(const ZComparison& cmp, std::ostream& out);

}  // namespace ebsvie
