#include "nlpde/grid.hpp"

#include <algorithm>

namespace nlpde {

TriangleGrid build_grid(double T, int n_tau, double L, int n_y, int d, int r, int m) {
    const char* where = "grid::build_grid";
    if (!(T > 0.0)) fail(ErrorCode::InvalidParameter, where, "T must be > 0");
    if (n_tau < 1) fail(ErrorCode::InvalidParameter, where, "n_tau must be >= 1");
    if (!(L > 0.0)) fail(ErrorCode::InvalidParameter, where, "L must be > 0");
    if (d != 1 && d != 2) fail(ErrorCode::InvalidParameter, where, "d must be 1 or 2");
    if (r != 1 && r != 2) fail(ErrorCode::InvalidParameter, where, "r must be 1 or 2");
    if (m < 1) fail(ErrorCode::InvalidParameter, where, "m must be >= 1");
    if (n_y < 4 * r + 1)
        fail(ErrorCode::InvalidParameter, where,
             "n_y=" + std::to_string(n_y) + " too small: stencil width " +
                 std::to_string(4 * r + 1) + " must fit");
    TriangleGrid g;
    g.T = T;
    g.n_tau = n_tau;
    g.d = d;
    g.L = L;
    g.n_y = n_y;
    g.r = r;
    g.m = m;
    return g;
}

namespace {

// Apply one centred stencil along `axis` (stride/extent derived from the
// row-major layout: axis 0 stride n_y (d=2) or 1 (d=1), axis 1 stride 1).
void apply_axis_stencil(std::vector<double>& v, int n_y, int d, int m, int axis,
                        bool second_order, double dy) {
    const int n_points = d == 1 ? n_y : n_y * n_y;
    const int stride = (d == 2 && axis == 0) ? n_y : 1;
    std::vector<double> out(v.size());
    const double c1 = 0.5 / dy;
    const double c2 = 1.0 / (dy * dy);
    for (int k = 0; k < n_points; ++k) {
        // position along the differentiated axis and its periodic neighbours
        int pos = (stride == 1) ? (k % n_y) : (k / n_y);
        int base = k - pos * stride;
        int kp = base + ((pos + 1) % n_y) * stride;
        int km = base + ((pos + n_y - 1) % n_y) * stride;
        for (int a = 0; a < m; ++a) {
            size_t idx = static_cast<size_t>(k) * m + a;
            size_t ip = static_cast<size_t>(kp) * m + a;
            size_t im = static_cast<size_t>(km) * m + a;
            out[idx] = second_order ? c2 * (v[ip] - 2.0 * v[idx] + v[im])
                                    : c1 * (v[ip] - v[im]);
        }
    }
    v.swap(out);
}

} // namespace

SpatialSlice stencil_apply(const SpatialSlice& slice, const MultiIndex& I, double dy,
                           int n_y, int d, int max_order) {
    if (I.order() > max_order)
        fail(ErrorCode::UnsupportedOrder, "grid::stencil_apply",
             "derivative order " + std::to_string(I.order()) + " exceeds supported " +
                 std::to_string(max_order));
    SpatialSlice out = slice;
    for (int axis = 0; axis < d; ++axis) {
        int c = I.c[static_cast<size_t>(axis)];
        for (int k = 0; k < c / 2; ++k) apply_axis_stencil(out.v, n_y, d, out.m, axis, true, dy);
        if (c % 2 == 1) apply_axis_stencil(out.v, n_y, d, out.m, axis, false, dy);
    }
    return out;
}

SpatialSlice diagonal_slice(const TriangleField& field, int j) {
    const TriangleGrid& g = field.grid();
    if (j < 0 || j > g.n_tau)
        fail(ErrorCode::IndexOutOfRange, "grid::diagonal_slice",
             "j=" + std::to_string(j) + " outside [0, n_tau]");
    return field.copy_slice(j, j);
}

JetTable jet_at(const TriangleField& field, int i, int j, int order) {
    const TriangleGrid& g = field.grid();
    if (j > i || i > g.n_tau || j < 0)
        fail(ErrorCode::IndexOutOfRange, "grid::jet_at", "invalid slice pair");
    if (order > 2 * g.r)
        fail(ErrorCode::UnsupportedOrder, "grid::jet_at",
             "jet order " + std::to_string(order) + " exceeds 2r");
    JetTable jt;
    jt.mit = MultiIndexTable(g.d, order);
    jt.order = order;
    SpatialSlice loc = field.copy_slice(i, j);
    SpatialSlice dia = diagonal_slice(field, j);
    jt.local.reserve(static_cast<size_t>(jt.mit.size()));
    jt.diag.reserve(static_cast<size_t>(jt.mit.size()));
    for (const MultiIndex& mi : jt.mit) {
        jt.local.push_back(stencil_apply(loc, mi, g.dy(), g.n_y, g.d, order));
        jt.diag.push_back(stencil_apply(dia, mi, g.dy(), g.n_y, g.d, order));
    }
    return jt;
}

JetValues jet_values_at(const JetTable& jt, int k, int m) {
    JetValues jv(jt.mit.d(), jt.order, m);
    for (int id = 0; id < jt.mit.size(); ++id)
        for (int a = 0; a < m; ++a) {
            jv.loc(id, a) = jt.local[static_cast<size_t>(id)].at(k, a);
            jv.dia(id, a) = jt.diag[static_cast<size_t>(id)].at(k, a);
        }
    return jv;
}

} // namespace nlpde
