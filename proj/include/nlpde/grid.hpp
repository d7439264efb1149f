#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nlpde/errors.hpp"
#include "nlpde/multiindex.hpp"

namespace nlpde {

/// Discretization of the triangle {(t,s): 0 <= s <= t <= T} times a
/// periodic box [0,L)^d. The same step is used for t and s so the
/// diagonal (s_j, s_j) is always a grid node.
struct TriangleGrid {
    double T = 1.0;   // final time
    int n_tau = 1;    // time steps; dtau = T/n_tau for both t and s
    int d = 1;        // spatial dimension, 1 or 2
    double L = 1.0;   // box edge length per dimension
    int n_y = 8;      // grid points per dimension; dy = L/n_y, periodic
    int r = 1;        // half-order; the system order is 2r
    int m = 1;        // component count

    double dtau() const { return T / n_tau; }
    double dy() const { return L / n_y; }
    double t(int i) const { return i * dtau(); }
    double s(int j) const { return j * dtau(); }

    int n_points() const { return d == 1 ? n_y : n_y * n_y; }
    int n_pairs() const { return (n_tau + 1) * (n_tau + 2) / 2; }

    /// Linear index of the (i,j) slice pair, j <= i.
    int pair_index(int i, int j) const { return i * (i + 1) / 2 + j; }

    /// Spatial linear index: axis 1 outer, axis 2 inner (row-major).
    int point_index(int k1, int k2 = 0) const { return d == 1 ? k1 : k1 * n_y + k2; }

    void y_of(int k, double* y) const {
        if (d == 1) {
            y[0] = (k % n_y) * dy();
        } else {
            y[0] = (k / n_y) * dy();
            y[1] = (k % n_y) * dy();
        }
    }

    bool same_shape(const TriangleGrid& o) const {
        return n_tau == o.n_tau && d == o.d && n_y == o.n_y && r == o.r && m == o.m &&
               T == o.T && L == o.L;
    }

    /// Grid truncated to the triangle [0, n_tau_new * dtau].
    TriangleGrid truncated(int n_tau_new) const {
        TriangleGrid g = *this;
        g.T = n_tau_new * dtau();
        g.n_tau = n_tau_new;
        return g;
    }
};

TriangleGrid build_grid(double T, int n_tau, double L, int n_y, int d, int r, int m);

/// Values over the spatial grid for a fixed (i,j); shape (n_points, m).
struct SpatialSlice {
    int n_points = 0;
    int m = 0;
    std::vector<double> v; // component-major within point: v[k*m + a]

    SpatialSlice() = default;
    SpatialSlice(int np, int mm) : n_points(np), m(mm), v(static_cast<size_t>(np) * mm, 0.0) {}

    double& at(int k, int a) { return v[static_cast<size_t>(k) * m + a]; }
    double at(int k, int a) const { return v[static_cast<size_t>(k) * m + a]; }
};

/// m-component grid function on the lower triangle j <= i.
class TriangleField {
public:
    TriangleField() = default;
    explicit TriangleField(const TriangleGrid& g)
        : grid_(g),
          data_(static_cast<size_t>(g.n_pairs()) * g.n_points() * g.m, 0.0) {}

    const TriangleGrid& grid() const { return grid_; }

    std::span<double> slice(int i, int j) {
        check_pair(i, j);
        size_t n = slice_len();
        return {data_.data() + static_cast<size_t>(grid_.pair_index(i, j)) * n, n};
    }
    std::span<const double> slice(int i, int j) const {
        check_pair(i, j);
        size_t n = slice_len();
        return {data_.data() + static_cast<size_t>(grid_.pair_index(i, j)) * n, n};
    }

    double& at(int i, int j, int k, int a) {
        return slice(i, j)[static_cast<size_t>(k) * grid_.m + a];
    }
    double at(int i, int j, int k, int a) const {
        return slice(i, j)[static_cast<size_t>(k) * grid_.m + a];
    }

    SpatialSlice copy_slice(int i, int j) const {
        SpatialSlice s(grid_.n_points(), grid_.m);
        auto src = slice(i, j);
        std::copy(src.begin(), src.end(), s.v.begin());
        return s;
    }

    void set_slice(int i, int j, const SpatialSlice& s) {
        auto dst = slice(i, j);
        std::copy(s.v.begin(), s.v.end(), dst.begin());
    }

    std::span<const double> raw() const { return data_; }
    std::span<double> raw() { return data_; }

    bool all_finite() const {
        for (double x : data_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    void check_pair(int i, int j) const {
        if (i < 0 || i > grid_.n_tau || j < 0 || j > i)
            fail(ErrorCode::IndexOutOfRange, "grid::TriangleField",
                 "slice (" + std::to_string(i) + "," + std::to_string(j) +
                     ") outside the lower triangle");
    }
    size_t slice_len() const { return static_cast<size_t>(grid_.n_points()) * grid_.m; }

    TriangleGrid grid_;
    std::vector<double> data_;
};

/// Central-difference approximation of the multi-index derivative on a
/// periodic slice. Per axis: odd part uses [-1/2, 0, 1/2]/dy, even part
/// composes [1, -2, 1]/dy^2 with itself; mixed derivatives by tensor
/// composition in canonical axis order. Second-order accurate.
SpatialSlice stencil_apply(const SpatialSlice& slice, const MultiIndex& I, double dy,
                           int n_y, int d, int max_order);

/// Stored values at (i=j, j); the single source of truth for diagonal reads.
SpatialSlice diagonal_slice(const TriangleField& field, int j);

/// All spatial derivatives of one (i,j) slice pair up to `order`,
/// both at the local argument (t_i, s_j, .) and the diagonal (s_j, s_j, .).
struct JetTable {
    MultiIndexTable mit;
    int order = 0;
    std::vector<SpatialSlice> local; // indexed by multi-index id
    std::vector<SpatialSlice> diag;
};

JetTable jet_at(const TriangleField& field, int i, int j, int order);

/// One-point view into a JetTable at spatial index k.
struct JetPoint {
    const JetTable* jt = nullptr;
    int k = 0;

    double local(int id, int a = 0) const { return jt->local[static_cast<size_t>(id)].at(k, a); }
    double diag(int id, int a = 0) const { return jt->diag[static_cast<size_t>(id)].at(k, a); }
};

/// Standalone jet at one point: every canonical multi-index with |I| <= order,
/// in both local (t,s,y) and diagonal (s,s,y) flavours. Owns its values so
/// evaluator callbacks can be probed with perturbed entries.
struct JetValues {
    MultiIndexTable mit;
    int order = 0;
    int m = 1;
    std::vector<double> local; // [id*m + a]
    std::vector<double> diag;

    JetValues() = default;
    JetValues(int d, int order_, int m_)
        : mit(d, order_), order(order_), m(m_),
          local(static_cast<size_t>(mit.size()) * m_, 0.0),
          diag(static_cast<size_t>(mit.size()) * m_, 0.0) {}

    double loc(int id, int a = 0) const { return local[static_cast<size_t>(id) * m + a]; }
    double dia(int id, int a = 0) const { return diag[static_cast<size_t>(id) * m + a]; }
    double& loc(int id, int a = 0) { return local[static_cast<size_t>(id) * m + a]; }
    double& dia(int id, int a = 0) { return diag[static_cast<size_t>(id) * m + a]; }
};

/// Materialize the jet of one spatial point from a JetTable.
JetValues jet_values_at(const JetTable& jt, int k, int m);

} // namespace nlpde
