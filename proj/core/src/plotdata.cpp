#include "ebsvie/plotdata.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "ebsvie/errors.hpp"

namespace ebsvie {

PlotKind plot_kind_from(std::string_view name) {
    if (name == "diagonal") return PlotKind::Diagonal;
    if (name == "slice") return PlotKind::Slice;
    if (name == "convergence") return PlotKind::Convergence;
    if (name == "z-compare") return PlotKind::ZCompare;
    throw ArgumentError("cli", "unknown plot kind '" + std::string(name) + "'");
}

ZComparison compare_z(const TwoTimeField& regression, const TwoTimeField& pathwise, const TwoTimeField& pde) {
    const int n = regression.n_steps();
    const auto w = static_cast<std::size_t>(regression.dim_value() * regression.dim_state());
    ZComparison cmp;
    double s_rp = 0, s_rd = 0, s_pd = 0, n_rp = 0, n_rd = 0, n_pd = 0;
    for (int k = regression.start_index(); k < n; ++k) {
        for (int i = 0; i <= k; ++i) {
            if (!regression.has_cell(i, k) || !pathwise.has_cell(i, k) || !pde.has_cell(i, k)) continue;
            const auto a = regression.z_values(i, k);
            const auto b = pathwise.z_values(i, k);
            const auto c = pde.z_values(i, k);
            const std::size_t np = a.size() / w;
            ZCompareRow row;
            row.i = i;
            row.k = k;
            double ab = 0, ac = 0, bc = 0;
            for (std::size_t p = 0; p < np; ++p) {
                const double va = a[p * w], vb = b[p * w], vc = c[p * w];
                row.z_regression += va;
                row.z_pathwise += vb;
                row.z_pde += vc;
                ab += (va - vb) * (va - vb);
                ac += (va - vc) * (va - vc);
                bc += (vb - vc) * (vb - vc);
                n_rp += 0.25 * (va + vb) * (va + vb);
                n_rd += 0.25 * (va + vc) * (va + vc);
                n_pd += 0.25 * (vb + vc) * (vb + vc);
            }
            s_rp += ab;
            s_rd += ac;
            s_pd += bc;
            const auto dn = static_cast<double>(np);
            row.z_regression /= dn;
            row.z_pathwise /= dn;
            row.z_pde /= dn;
            row.rms_reg_path = std::sqrt(ab / dn);
            row.rms_reg_pde = std::sqrt(ac / dn);
            row.rms_path_pde = std::sqrt(bc / dn);
            cmp.rows.push_back(row);
        }
    }
    auto rel = [](double num, double den) { return num == 0.0 ? 0.0 : std::sqrt(num / den); };
    cmp.rel_reg_path = rel(s_rp, n_rp);
    cmp.rel_reg_pde = rel(s_rd, n_rd);
    cmp.rel_path_pde = rel(s_pd, n_pd);
    return cmp;
}

void write_diagonal_csv(const TwoTimeField& field, std::ostream& out) {
    const int m = field.dim_value();
    out.precision(17);
    out << 's';
    for (int l = 0; l < m; ++l) out << ",y" << l;
    out << '\n';
    for (int k = 0; k <= field.n_steps(); ++k) {
        if (!field.has_cell(k, k)) continue;
        out << field.grid().node(k);
        for (double v : field.y_stats(k, k).mean) out << ',' << v;
        out << '\n';
    }
}

void write_slice_csv(const TwoTimeField& field, int label, std::ostream& out) {
    const int m = field.dim_value();
    out.precision(17);
    out << 's';
    for (int l = 0; l < m; ++l) out << ",y" << l;
    for (int l = 0; l < m; ++l) out << ",se" << l;
    out << '\n';
    for (int k = std::max(label, 0); k <= field.n_steps(); ++k) {
        if (!field.has_cell(label, k)) continue;
        const CellStats st = field.y_stats(label, k);
        out << field.grid().node(k);
        for (double v : st.mean) out << ',' << v;
        for (double v : st.se) out << ',' << v;
        out << '\n';
    }
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out) {
    out.precision(17);
    out << "N,err,ratio\n";
    for (std::size_t q = 0; q < rows.size(); ++q) {
        out << rows[q].n_steps << ',' << rows[q].error << ',';
        if (q > 0 && rows[q].error != 0.0) out << rows[q - 1].error / rows[q].error;
        out << '\n';
    }
}

void write_zcompare_csv(const ZComparison& cmp, std::ostream& out) {
    out.precision(17);
    out << "i,k,z_regression,z_pathwise,z_pde,rms_reg_path,rms_reg_pde,rms_path_pde\n";
    for (const auto& r : cmp.rows) {
        out << r.i << ',' << r.k << ',' << r.z_regression << ',' << r.z_pathwise << ',' << r.z_pde << ','
            << r.rms_reg_path << ',' << r.rms_reg_pde << ',' << r.rms_path_pde << '\n';
    }
}

}  // namespace ebsvie
