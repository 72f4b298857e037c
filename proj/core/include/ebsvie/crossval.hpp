#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ebsvie/basis.hpp"
#include "ebsvie/grid.hpp"
#include "ebsvie/pde.hpp"
#include "ebsvie/problem.hpp"

namespace ebsvie {

struct SamplePoint {
    double t = 0.0;
    double s = 0.0;
    double x = 0.0;
};

struct CrossValPoint {
    SamplePoint point;
    int t_index = 0;
    int s_index = 0;
    double theta_mc = 0.0;
    double se = 0.0;
    double theta_pde = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CrossValReport {
    std::vector<CrossValPoint> points;
    double budget_constant = 0.0;
    double budget = 0.0;  ///< C (dt + dx^2)
    int passes() const;
};

struct McParams {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 20240601;
    BasisSpec basis;
    int threads = 1;
};

struct PdeParams {
    double theta_weight = 0.5;
    int threads = 1;
};

/// `count` Halton points (bases 2, 3, 5): (t, s) from the triangle, both
/// snapped to grid nodes with s < T, x in the central half of the mesh.
std::vector<SamplePoint> default_sample_points(const TimeGrid& grid, const SpatialMesh& mesh,
                                               int count = 20);

/// C = max |Theta - (x^2 + T - s)| / (dt + dx^2) of the PDE solution of the
/// heat instance psi = x^2 on this grid and mesh, over the central half of
/// the mesh.
double calibrate_budget(const TimeGrid& grid, const SpatialMesh& mesh, const PdeParams& pde = {});

/// Theta_mc(t, s, x) = mean of Y(t, s) on a fresh ensemble started at (s, x)
/// with seed derived from mc.seed and the point index; SE from the realized
/// backward sums. Verdict: |Theta_mc - Theta_pde| <= 3 SE + C (dt + dx^2).
/// Points must be grid nodes with t <= s and x in the inner 80% of the mesh.
CrossValReport cross_validate(const ProblemSpec& spec, const TimeGrid& grid,
                              const SpatialMesh& mesh, const std::vector<SamplePoint>& points,
                              const McParams& mc, const PdeParams& pde, double budget_constant);

void write_crossval_csv(const CrossValReport& report, std::ostream& out);
void write_crossval_json(const CrossValReport& report, std::ostream& out);

}  // namespace ebsvie
