#pragma once

#include "nlpde/expr.hpp"
#include "nlpde/systems.hpp"

namespace nlpde {

/// Expression-based exact solution u*(t,s,y) with analytic derivatives.
/// Construction runs a lattice self-check of every derivative expression
/// against finite differences (chained: order k+1 vs FD of order k).
struct ManufacturedSolution {
    int d = 1, r = 1;
    Expression u, u_s, u_t;
    std::vector<std::pair<MultiIndex, Expression>> dy; // all 1 <= |I| <= 2r+1

    double eval(const Expression& e, double t, double s, const double* y) const;
    const Expression& deriv(const MultiIndex& I) const;
};

/// Builds and self-checks a manufactured solution. derivs maps multi-index
/// suffixes ("1", "11", "112", ...) to expression strings; every canonical
/// suffix with order <= 2r+1 must be present.
ManufacturedSolution make_manufactured(int d, int r, const std::string& u,
                                       const std::string& u_s, const std::string& u_t,
                                       const std::vector<std::pair<std::string, std::string>>& derivs);

/// Samples u* at every stored triangle node.
TriangleField exact_field(const ManufacturedSolution& star, const TriangleGrid& grid);

/// Forcing so that u* solves the skeleton exactly:
/// linear: f := u*_s - sum A d_I u*(t,s,y) - sum B d_I u*(s,s,y);
/// fully-nonlinear: the residual phi(t,s,y) is added into F (and F_t, F_s,
/// F_y pick up phi's derivatives by finite differences). Both run a random
/// continuum-point residual self-check (<= 1e-12 scaled).
LinearSystemSpec mms_forcing(const ManufacturedSolution& star, const LinearSystemSpec& skeleton);
FullyNonlinearSpec mms_forcing(const ManufacturedSolution& star,
                               const FullyNonlinearSpec& skeleton);

struct MmsProblem {
    std::string name;
    SystemSpec spec;             // forced system; u* solves it exactly
    ManufacturedSolution star;
};

/// Catalog: nonlocal_heat_linear_mms, local_family_mms, fullnl_exp_mms.
MmsProblem make_mms_problem(const std::string& name);

/// Anti-bug oracle: the explicit recurrence re-implemented as plain nested
/// loops (desk-scale only: n_tau <= 16, n_y <= 32). Bitwise identical to
/// linsolve in serial mode by construction.
TriangleField naive_oracle_solve(const LinearSystemSpec& spec, const TriangleGrid& grid);

struct FieldDiff {
    double sup_diff = 0.0;
    double l2_diff = 0.0; // weights dtau * dy^d per stored node
};
FieldDiff compare_fields(const TriangleField& a, const TriangleField& b);

enum class Route { Linear, QuasilinearSpatial, FullyNonlinearTemporal };

struct ConvergenceResult {
    std::vector<TriangleGrid> grids;
    std::vector<double> sup_errors;
    std::vector<double> l2_errors;
    double spatial_order = 0.0;  // least-squares slope in log(dy)
    double temporal_order = 0.0; // spatial_order / 2 under dtau ~ dy^2 scaling
    double fit_residual = 0.0;   // rms log-residual of the fit
};

/// Solves the problem on each grid via the given route and fits the observed
/// order against dy. Requires >= 3 grids.
ConvergenceResult convergence_study(const MmsProblem& prob,
                                    const std::vector<TriangleGrid>& grids, Route route);

} // namespace nlpde
