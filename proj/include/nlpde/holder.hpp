#pragma once

#include <functional>
#include <map>
#include <vector>

#include "nlpde/grid.hpp"

namespace nlpde {

/// Discrete estimate of the parabolic Hölder norm of one time-slice family.
/// sup_terms is keyed by (s-derivative order, spatial order); each entry sums
/// over all canonical spatial multi-indices of that order and over components.
struct HolderReport {
    std::map<std::pair<int, int>, double> sup_terms;
    double seminorm_y = 0.0;                // top-order spatial seminorm sum
    std::map<double, double> seminorm_s;    // fractional s-exponent -> value
    double total = 0.0;
    double l = 0.0;
    double alpha = 0.0;
};

/// Scalar values per s-level: levels[j][k], j = 0..n_levels-1.
using LevelValues = std::vector<std::vector<double>>;

/// max over s-levels and point pairs of |phi(s,y)-phi(s,y')| / dist(y,y')^alpha
/// with periodic (wrapped) distance. All pairs when n_points <= 128, otherwise
/// a deterministic stride subsample of >= 10^4 pairs (see seminorm_y_impl).
double seminorm_y(const LevelValues& levels, double alpha, const TriangleGrid& g);

/// max over level pairs (j != j') and points of |phi(s_j,y)-phi(s_j',y)| / |s_j-s_j'|^alpha.
double seminorm_s(const LevelValues& levels, double alpha, double dtau);

namespace detail {
/// force_exhaustive bypasses the subsampling threshold (calibration tests).
double seminorm_y_impl(const LevelValues& levels, double alpha, const TriangleGrid& g,
                       bool force_exhaustive);
}

/// Parabolic norm estimate at fixed t with levels j = 0..n_levels-1.
/// `at(j,k,a)` reads component a at level j, point k. s-derivatives are
/// first-order finite differences (one-sided at endpoints); l >= 2r+1 would
/// need second s-differences and is refused.
HolderReport norm_parabolic(const TriangleGrid& g, int n_levels,
                            const std::function<double(int, int, int)>& at, double l);

/// Triangle norm: sup over t-levels of the per-t parabolic norms (summed over
/// components). with_t_derivative adds the norm of the finite-difference
/// du/dt field (requires n_tau >= 2).
double norm_triangle(const TriangleField& u, double l, bool with_t_derivative);

/// Per-t-level report behind norm_triangle, exposed for the CLI.
HolderReport norm_parabolic_at(const TriangleField& u, int i, double l);

} // namespace nlpde
