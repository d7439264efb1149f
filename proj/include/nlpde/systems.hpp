#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nlpde/grid.hpp"

namespace nlpde {

/// Coefficient evaluator for linear systems: writes an m x m matrix
/// (row-major) at (t,s,y). Null std::function means identically zero.
using LinearCoeffEval = std::function<void(double t, double s, const double* y, double* out)>;
using LinearVecEval = std::function<void(double t, double s, const double* y, double* out)>;

/// Jet-dependent evaluators (quasilinear coefficients, nonlinearities).
using JetMatrixEval =
    std::function<void(double t, double s, const double* y, const JetValues& z, double* out)>;
using JetVecEval =
    std::function<void(double t, double s, const double* y, const JetValues& z, double* out)>;

/// Initial data g(t,y) with optional analytic spatial derivatives and g_t.
/// Missing derivatives fall back to grid finite differences (one stderr
/// notice per process).
struct InitialData {
    int d = 1;
    int m = 1;
    std::function<void(double t, const double* y, double* out)> g;
    // keyed by canonical multi-index suffix, e.g. "1", "11", "112"
    std::vector<std::pair<MultiIndex, std::function<void(double, const double*, double*)>>> dg;
    std::function<void(double t, const double* y, double* out)> g_t;
};

SpatialSlice sample_g(const InitialData& init, const TriangleGrid& g, double t);
SpatialSlice sample_dg(const InitialData& init, const TriangleGrid& g, double t,
                       const MultiIndex& I);
SpatialSlice sample_gt(const InitialData& init, const TriangleGrid& g, double t);

/// u_s = sum_I A^I du(t,s,y) + sum_I B^I du(s,s,y) + f, u(t,0,y) = g(t,y).
/// Coefficient maps are over all canonical |I| <= 2r (table order); the
/// evaluator value carries the multiplicity of non-canonical permutations.
struct LinearSystemSpec {
    int d = 1, r = 1, m = 1;
    MultiIndexTable mit;            // MultiIndexTable(d, 2r)
    std::vector<LinearCoeffEval> A; // indexed by multi-index id; null = zero
    std::vector<LinearCoeffEval> B;
    LinearVecEval f;                // null = zero
    InitialData init;

    void validate(const char* where) const;
    bool b_is_zero() const {
        for (const auto& e : B)
            if (e) return false;
        return true;
    }
};

LinearSystemSpec make_linear_spec(int d, int r, int m);

/// Quasilinear: top-order coefficients depend on the jet of order 2r-1.
/// A_top/B_top are indexed by position within ids_of_order(2r) of mit.
struct QuasilinearSystemSpec {
    int d = 1, r = 1, m = 1;
    MultiIndexTable mit;            // MultiIndexTable(d, 2r)
    std::vector<JetMatrixEval> A_top;
    std::vector<JetMatrixEval> B_top;
    JetVecEval F_low;               // lower-order part; consumes jet order 2r-1
    InitialData init;

    std::vector<int> top_ids() const { return mit.ids_of_order(2 * r); }
};

/// Fully-nonlinear scalar problem u_s = F(t,s,y, jet_2r(t,s,y), jet_2r(s,s,y)).
/// Derivative callbacks are optional; missing ones are realized by central
/// differences on F.
struct FullyNonlinearSpec {
    int d = 1, r = 1;
    MultiIndexTable mit;            // MultiIndexTable(d, 2r)
    JetVecEval F;                   // scalar-valued (m = 1)
    std::vector<JetVecEval> F_y;    // d entries, dF/dy_k
    JetVecEval F_s, F_t;
    std::vector<JetVecEval> F_q;    // per top-order position: dF/d(local top entry)
    std::vector<JetVecEval> F_n;    // per top-order position: dF/d(diagonal top entry)
    InitialData init;               // derivatives to 2r+1 and g_t

    std::vector<int> top_ids() const { return mit.ids_of_order(2 * r); }

    // Resolved accessors: analytic callback when present, FD on F otherwise.
    double eval_F(double t, double s, const double* y, const JetValues& z) const;
    double eval_F_y(int k, double t, double s, const double* y, const JetValues& z) const;
    double eval_F_s(double t, double s, const double* y, const JetValues& z) const;
    double eval_F_t(double t, double s, const double* y, const JetValues& z) const;
    double eval_F_q(int top_pos, double t, double s, const double* y, const JetValues& z) const;
    double eval_F_n(int top_pos, double t, double s, const double* y, const JetValues& z) const;
};

using SystemSpec = std::variant<LinearSystemSpec, QuasilinearSystemSpec, FullyNonlinearSpec>;

struct EllipticityWitness {
    double t = 0, s = 0;
    std::vector<double> y, xi, v;
    std::vector<double> z_local, z_diag; // jet sample at the worst case
    double ratio = 0;
    bool combined = false; // true if the A+B inequality was the violated one
};

struct EllipticityReport {
    bool passed = false;
    double lambda_est = 0.0; // min quadratic-form ratio over the sample
    EllipticityWitness worst_case;
    long samples = 0;
};

struct EllipticitySamplePlan {
    int t_samples = 5;
    int s_samples = 5;
    int y_stride = 1;
    int xi_directions = 64;  // per spec; d=1 collapses to {+1,-1}
    int v_directions = 32;   // m>1 only
    double ball_radius = 1.0;
    std::optional<JetValues> ball_center; // default: zero jet
};

EllipticityReport check_ellipticity(const SystemSpec& spec, const TriangleGrid& grid,
                                    const EllipticitySamplePlan& plan, double lambda_target);

struct AssumptionReport {
    double K_est = 0.0;
    double L_est = 0.0;
    EllipticityReport ellipticity;
    JetValues ball_center;
    double R0 = 0.0;
    double alpha = 0.5;
};

AssumptionReport check_assumption(const SystemSpec& spec, const JetValues& z_bar, double R0,
                                  const TriangleGrid& grid, double alpha = 0.5);

/// Preset catalog. Names: nonlocal_heat_linear, local_family, negative_b_linear,
/// biharmonic_linear, fullnl_exp, fullnl_exp_2d. MMS-forced variants are
/// assembled in the verify module.
SystemSpec make_preset(const std::string& name);

/// Grid parameters a preset was designed around (d, r, m).
struct PresetShape {
    int d = 1, r = 1, m = 1;
};
PresetShape preset_shape(const std::string& name);

} // namespace nlpde
