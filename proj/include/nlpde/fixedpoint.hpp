#pragma once

#include "nlpde/linsolve.hpp"

namespace nlpde {

struct FixedPointConfig {
    double tol = 1e-8;        // sup-norm stopping threshold on iterate distance
    int max_iter = 50;
    double target_ratio = 0.5; // contraction goal; 3 consecutive ratios above
                               // it trigger a window shrink
    std::optional<JetValues> ball_center; // optional B(z_bar, R0) guard
    double ball_radius = 0.0;
};

struct SolveReport {
    int iterations = 0;
    std::vector<double> e;       // e_k = ||u_{k+1} - u_k||_inf
    std::vector<double> ratios;  // e_{k+1} / e_k
    std::vector<double> windows; // delta values attempted, non-increasing
    double window = 0.0;         // final window actually solved on
    double residual = 0.0;       // independent discrete equation residual
    double r_max = 0.0;          // max ||u_k - g||_inf over the iteration
    bool converged = false;
};

/// One application of the contraction map: freeze the quasilinear
/// coefficients on the jet of u_k (both local and diagonal arguments) and
/// solve the resulting nonlocal linear system.
TriangleField gamma_map(const TriangleField& u_k, const QuasilinearSystemSpec& spec,
                        const TriangleGrid& grid, const SchemeConfig& scheme,
                        const FixedPointConfig& cfg = {});

std::pair<TriangleField, SolveReport> solve_quasilinear_fixedpoint(
    const QuasilinearSystemSpec& spec, const TriangleGrid& grid, const SchemeConfig& scheme,
    const FixedPointConfig& cfg);

/// Temporal-variant inner map M(u) = (w1, w2): w2 solves the local family
/// w2_s = F_t(u) + sum F_qij(u) w2_yiyj(t,s,y) with w2(t,0) = g_t; w1 solves
/// the nonlocal linear system
/// w1_s = F_s(u) + sum F_qij(u) w1_yiyj(t) + sum F_nij(u) w1_yiyj(s,s)
///        + sum F_nij(u) w2_yiyj(s,s)
/// with w1(t,0,y) = F(t,0,y, g_yy(t,y), g_yy(0,y)).
std::pair<TriangleField, TriangleField> temporal_M(const TriangleField& u_k,
                                                   const FullyNonlinearSpec& spec,
                                                   const TriangleGrid& grid,
                                                   const SchemeConfig& scheme);

/// Reconstruction N: U(t,s,y) = g(t,y) + integral_0^s w1(t,tau,y) dtau by the
/// composite trapezoid rule; U(t,0,.) = g(t,.) exactly.
TriangleField temporal_N(const TriangleField& w1, const InitialData& init,
                         const TriangleGrid& grid);

std::pair<TriangleField, SolveReport> solve_fully_nonlinear_temporal(
    const FullyNonlinearSpec& spec, const TriangleGrid& grid, const SchemeConfig& scheme,
    const FixedPointConfig& cfg);

/// Independent residual evaluators (no shared assembly with the solvers
/// beyond jets): max over j < i of the forward s-difference minus the RHS.
double discrete_residual(const TriangleField& u, const QuasilinearSystemSpec& spec);
double discrete_residual(const TriangleField& u, const FullyNonlinearSpec& spec);

} // namespace nlpde
