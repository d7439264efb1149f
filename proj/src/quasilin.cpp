#include "nlpde/quasilin.hpp"

#include <cmath>
#include <memory>

namespace nlpde {

namespace {

/// Rebuild the original scalar problem's order-2 jet from the induced
/// system's order-1 jet: u from component 0, first derivatives from the v
/// component values, second derivatives d_yi d_yj u from d_yj v^(i).
JetValues map_jet(const JetValues& z, int d) {
    JetValues zf(d, 2, 1);
    const MultiIndexTable& mit1 = z.mit;     // order <= 1, induced
    const MultiIndexTable& mit2 = zf.mit;    // order <= 2, original
    zf.loc(0) = z.loc(0, 0);
    zf.dia(0) = z.dia(0, 0);
    for (int a = 0; a < d; ++a) {
        int id1 = mit2.id_of(make_multiindex(d, a == 0 ? 1 : 0, a == 0 ? 0 : 1));
        zf.loc(id1) = z.loc(0, a + 1);
        zf.dia(id1) = z.dia(0, a + 1);
    }
    for (int id : mit2.ids_of_order(2)) {
        const MultiIndex& mi = mit2.at(id);
        int first = -1, last = -1;
        for (int a = 0; a < d; ++a)
            if (mi.c[static_cast<size_t>(a)] > 0) {
                if (first < 0) first = a;
                last = a;
            }
        int id_der = mit1.id_of(make_multiindex(d, last == 0 ? 1 : 0, last == 0 ? 0 : 1));
        zf.loc(id) = z.loc(id_der, first + 1);
        zf.dia(id) = z.dia(id_der, first + 1);
    }
    return zf;
}

int axis_id(const MultiIndexTable& mit, int d, int axis) {
    return mit.id_of(make_multiindex(d, axis == 0 ? 1 : 0, axis == 0 ? 0 : 1));
}

} // namespace

InducedSystem quasilinearize_spatial(const FullyNonlinearSpec& fnl) {
    const char* where = "quasilin::quasilinearize_spatial";
    if (!fnl.F) fail(ErrorCode::MissingDerivativeCallback, where, "nonlinearity F missing");
    if (fnl.r != 1)
        fail(ErrorCode::UnsupportedOrder, where, "spatial quasilinearization covers r = 1 only");
    if (fnl.init.m != 1)
        fail(ErrorCode::UnsupportedMultiComponent, where, "scalar source problems only");
    for (const MultiIndex& mi : MultiIndexTable(fnl.d, 1))
        if (mi.order() == 1 && ![&] {
                for (const auto& kv : fnl.init.dg)
                    if (kv.first.c == mi.c) return true;
                return false;
            }())
            fail(ErrorCode::MissingDerivativeCallback, where,
                 "initial data derivative g_y" + mi.suffix() + " missing");

    const int d = fnl.d;
    const int M = d + 1;
    auto f = std::make_shared<FullyNonlinearSpec>(fnl);

    InducedSystem ind;
    ind.roles.push_back("u");
    for (int k = 1; k <= d; ++k) ind.roles.push_back("v" + std::to_string(k));

    QuasilinearSystemSpec& q = ind.spec;
    q.d = d;
    q.r = 1;
    q.m = M;
    q.mit = MultiIndexTable(d, 2);
    auto tops = q.top_ids();
    q.A_top.resize(tops.size());
    q.B_top.resize(tops.size());

    for (size_t pos = 0; pos < tops.size(); ++pos) {
        // the u-equation's top part is the full double sum sum_ij d_yi d_yj,
        // so canonical mixed entries carry their permutation multiplicity
        const double u_coeff = q.mit.at(tops[pos]).multiplicity();
        q.A_top[pos] = [f, d, M, pos, u_coeff](double t, double s, const double* y,
                                               const JetValues& z, double* out) {
            std::fill(out, out + M * M, 0.0);
            out[0] = u_coeff;
            JetValues zf = map_jet(z, d);
            double fq = f->eval_F_q(static_cast<int>(pos), t, s, y, zf);
            for (int k = 1; k < M; ++k) out[k * M + k] = fq;
        };
        q.B_top[pos] = [f, d, M, pos, u_coeff](double t, double s, const double* y,
                                               const JetValues& z, double* out) {
            std::fill(out, out + M * M, 0.0);
            out[0] = u_coeff;
            JetValues zf = map_jet(z, d);
            double fn = f->eval_F_n(static_cast<int>(pos), t, s, y, zf);
            for (int k = 1; k < M; ++k) out[k * M + k] = fn;
        };
    }

    q.F_low = [f, d, M](double t, double s, const double* y, const JetValues& z, double* out) {
        JetValues zf = map_jet(z, d);
        double div_local = 0.0, div_diag = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                int idj = axis_id(z.mit, d, j);
                div_local += z.loc(idj, i + 1);
                div_diag += z.dia(idj, i + 1);
            }
        out[0] = f->eval_F(t, s, y, zf) - div_local - div_diag;
        for (int k = 1; k < M; ++k) out[k] = f->eval_F_y(k - 1, t, s, y, zf);
    };

    // initial data (g, g_y1, ..., g_yd)
    q.init.d = d;
    q.init.m = M;
    q.init.g = [f, d, M](double t, const double* y, double* out) {
        f->init.g(t, y, out);
        for (int k = 1; k < M; ++k) {
            bool found = false;
            MultiIndex ek = make_multiindex(d, k == 1 ? 1 : 0, k == 1 ? 0 : 1);
            for (const auto& kv : f->init.dg)
                if (kv.first.c == ek.c) {
                    kv.second(t, y, out + k);
                    found = true;
                    break;
                }
            if (!found) out[k] = 0.0; // unreachable: presence checked above
        }
    };
    // analytic derivatives of the induced data where the source provides them
    for (const MultiIndex& mi : MultiIndexTable(d, 2)) {
        if (mi.order() == 0) continue;
        bool complete = true;
        std::vector<std::function<void(double, const double*, double*)>> parts;
        for (int k = 0; k < M; ++k) {
            MultiIndex want = mi;
            if (k >= 1) ++want.c[static_cast<size_t>(k - 1)];
            bool found = false;
            for (const auto& kv : f->init.dg)
                if (kv.first.c == want.c) {
                    parts.push_back(kv.second);
                    found = true;
                    break;
                }
            if (!found) complete = false;
        }
        if (!complete) continue;
        q.init.dg.emplace_back(mi, [parts, M](double t, const double* y, double* out) {
            for (int k = 0; k < M; ++k) parts[static_cast<size_t>(k)](t, y, out + k);
        });
    }
    return ind;
}

double check_exchange_symmetry(const std::vector<TriangleField>& v_fields) {
    if (v_fields.size() < 2) return 0.0;
    const TriangleGrid& g = v_fields.front().grid();
    double worst = 0.0;
    for (size_t k = 0; k < v_fields.size(); ++k) {
        for (size_t l = k + 1; l < v_fields.size(); ++l) {
            if (!v_fields[l].grid().same_shape(g))
                fail(ErrorCode::GridMismatch, "quasilin::check_exchange_symmetry",
                     "v fields on different grids");
            MultiIndex el = make_multiindex(g.d, l == 0 ? 1 : 0, l == 0 ? 0 : 1);
            MultiIndex ek = make_multiindex(g.d, k == 0 ? 1 : 0, k == 0 ? 0 : 1);
            for (int i = 0; i <= g.n_tau; ++i)
                for (int j = 0; j <= i; ++j) {
                    SpatialSlice dk = stencil_apply(v_fields[k].copy_slice(i, j), el, g.dy(),
                                                    g.n_y, g.d, 2 * g.r);
                    SpatialSlice dl = stencil_apply(v_fields[l].copy_slice(i, j), ek, g.dy(),
                                                    g.n_y, g.d, 2 * g.r);
                    for (size_t x = 0; x < dk.v.size(); ++x)
                        worst = std::max(worst, std::fabs(dk.v[x] - dl.v[x]));
                }
        }
    }
    return worst;
}

EquivalenceReport check_equivalence(const TriangleField& u,
                                    const std::vector<TriangleField>& v_fields,
                                    const FullyNonlinearSpec& original) {
    const TriangleGrid& g = u.grid();
    EquivalenceReport rep;
    for (size_t k = 0; k < v_fields.size(); ++k) {
        if (!v_fields[k].grid().same_shape(g))
            fail(ErrorCode::GridMismatch, "quasilin::check_equivalence",
                 "u and v on different grids");
        MultiIndex ek = make_multiindex(g.d, k == 0 ? 1 : 0, k == 0 ? 0 : 1);
        for (int i = 0; i <= g.n_tau; ++i)
            for (int j = 0; j <= i; ++j) {
                SpatialSlice du = stencil_apply(u.copy_slice(i, j), ek, g.dy(), g.n_y, g.d,
                                                2 * g.r);
                auto vk = v_fields[k].slice(i, j);
                for (size_t x = 0; x < du.v.size(); ++x)
                    rep.grad_residual = std::max(rep.grad_residual,
                                                 std::fabs(vk[x] - du.v[x]));
            }
    }

    const double dtau = g.dtau();
    double y[2];
    for (int i = 1; i <= g.n_tau; ++i) {
        for (int j = 0; j < i; ++j) {
            JetTable jt = jet_at(u, i, j, 2 * g.r);
            for (int k = 0; k < g.n_points(); ++k) {
                g.y_of(k, y);
                JetValues z = jet_values_at(jt, k, 1);
                double rhs = original.eval_F(g.t(i), g.s(j), y, z);
                double ds = (u.at(i, j + 1, k, 0) - u.at(i, j, k, 0)) / dtau;
                rep.pde_residual = std::max(rep.pde_residual, std::fabs(ds - rhs));
            }
        }
    }
    return rep;
}

TriangleField extract_component(const TriangleField& coupled, int component) {
    TriangleGrid g = coupled.grid();
    if (component < 0 || component >= g.m)
        fail(ErrorCode::IndexOutOfRange, "quasilin::extract_component", "component out of range");
    g.m = 1;
    TriangleField out(g);
    for (int i = 0; i <= g.n_tau; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k < g.n_points(); ++k)
                out.at(i, j, k, 0) = coupled.at(i, j, k, component);
    return out;
}

} // namespace nlpde
