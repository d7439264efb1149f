#pragma once

#include <optional>

#include "nlpde/systems.hpp"

namespace nlpde {

enum class SchemeKind { Explicit, Imex };

struct SchemeConfig {
    SchemeKind kind = SchemeKind::Explicit;
    double cfl_safety = 0.9; // in (0, 1]
};

struct LinearSolveReport {
    SchemeKind scheme = SchemeKind::Explicit;
    double cfl_ratio = 0.0; // dtau / stable step; <= 1 required for explicit
    double wall_time_s = 0.0;
    double sup_norm = 0.0;
    std::optional<double> schauder_ratio;
};

namespace detail {

/// Linear problem addressed by slice indices rather than (t,s) values, so
/// fixed-point callers can freeze jet-dependent coefficients per (i,j)
/// without tabulating them up front. Coefficient slices hold the m x m
/// matrix row-major per point (SpatialSlice with width m*m).
struct NodeLinearProblem {
    int d = 1, r = 1, m = 1;
    MultiIndexTable mit; // MultiIndexTable(d, 2r)
    std::vector<int> active_A, active_B; // multi-index ids with nonzero coefficients
    std::function<void(int i, int j, int id, SpatialSlice& out)> coeff_A, coeff_B;
    std::function<bool(int i, int j, SpatialSlice& out)> source; // false = zero
    std::function<SpatialSlice(int i)> initial;
};

/// Explicit/IMEX marching over the triangle per the pinned recurrence.
TriangleField march(const NodeLinearProblem& prob, const TriangleGrid& grid,
                    const SchemeConfig& scheme, LinearSolveReport& report);

NodeLinearProblem view_of(const LinearSystemSpec& spec, const TriangleGrid& grid);

} // namespace detail

std::pair<TriangleField, LinearSolveReport> solve_nonlocal_linear(const LinearSystemSpec& spec,
                                                                  const TriangleGrid& grid,
                                                                  const SchemeConfig& scheme);

/// Reduction when B == 0: same recurrence with the diagonal sum skipped;
/// bitwise equal to solve_nonlocal_linear on the same spec in serial mode.
TriangleField solve_local_family(const LinearSystemSpec& spec, const TriangleGrid& grid,
                                 const SchemeConfig& scheme);

/// ||u||^(l) / (||f||^(l-2r) + ||g||^(l)) with the discrete norm estimators;
/// 0 by convention when both data norms vanish.
double schauder_ratio(const TriangleField& u, const LinearSystemSpec& spec,
                      const TriangleGrid& grid, double l);

} // namespace nlpde
