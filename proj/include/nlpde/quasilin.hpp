#pragma once

#include "nlpde/systems.hpp"

namespace nlpde {

/// Induced quasilinear system for (u, v^(1), ..., v^(d)) with v^(k) = du/dy_k.
/// Component 0 is u; component k >= 1 is v^(k).
struct InducedSystem {
    QuasilinearSystemSpec spec;      // (d+1) components
    std::vector<std::string> roles;  // "u", "v1", ..., "vd"
};

/// Spatial quasilinearization of a scalar second-order problem
/// u_s = F(t,s,y, u_yy(t,s,y), u_yy(s,s,y)):
///  - each v^(k) satisfies v_s = F_yk(v) + sum F_qij(v) v_yiyj(t) + sum F_nij(v) v_yiyj(s,s)
///  - u satisfies u_s = sum_ij u_yiyj(t) + sum_ij u_yiyj(s,s)
///                      + F(..., v_y(t), v_y(s,s)) - sum_ij v^(i)_yj(t) - sum_ij v^(i)_yj(s,s)
/// with the full ordered double sums kept literally (so mixed canonical
/// coefficients carry multiplicity 2). Initial data becomes (g, g_y1, ..., g_yd).
InducedSystem quasilinearize_spatial(const FullyNonlinearSpec& fnl);

/// max over k < l and grid nodes of |d_yl v^(k) - d_yk v^(l)| (stencils);
/// 0 for d = 1.
double check_exchange_symmetry(const std::vector<TriangleField>& v_fields);

struct EquivalenceReport {
    double grad_residual = 0.0; // max_k ||v^(k) - stencil d_yk u||_inf
    double pde_residual = 0.0;  // forward s-difference of u vs F on u's jets
};

EquivalenceReport check_equivalence(const TriangleField& u,
                                    const std::vector<TriangleField>& v_fields,
                                    const FullyNonlinearSpec& original);

/// Views of one induced-system field: the u component and the v components
/// as standalone scalar fields (helpers for the equivalence checks).
TriangleField extract_component(const TriangleField& coupled, int component);

} // namespace nlpde
