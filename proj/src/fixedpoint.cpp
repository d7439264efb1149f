#include "nlpde/fixedpoint.hpp"

#include <cmath>
#include <memory>

namespace nlpde {

namespace {

// Per-thread jet cache: marching evaluates several coefficients at the same
// (i,j) consecutively on one thread, so one cached table per thread suffices.
struct JetCacheEntry {
    const TriangleField* field = nullptr;
    int i = -1, j = -1, order = -1;
    JetTable jt;
};
thread_local JetCacheEntry tl_jet_cache;

const JetTable& cached_jet(const TriangleField& u, int i, int j, int order) {
    JetCacheEntry& c = tl_jet_cache;
    if (c.field != &u || c.i != i || c.j != j || c.order != order) {
        c.jt = jet_at(u, i, j, order);
        c.field = &u;
        c.i = i;
        c.j = j;
        c.order = order;
    }
    return c.jt;
}

void check_ball(const JetValues& z, const FixedPointConfig& cfg, int i, int j) {
    if (!cfg.ball_center) return;
    const JetValues& c = *cfg.ball_center;
    double dev = 0.0;
    size_t n = std::min(z.local.size(), c.local.size());
    for (size_t x = 0; x < n; ++x) {
        dev = std::max(dev, std::fabs(z.local[x] - c.local[x]));
        dev = std::max(dev, std::fabs(z.diag[x] - c.diag[x]));
    }
    if (dev > cfg.ball_radius)
        fail(ErrorCode::BallExit, "fixedpoint::gamma_map",
             "iterate jet left the ball at slice (" + std::to_string(i) + "," +
                 std::to_string(j) + "): deviation " + std::to_string(dev));
}

double sup_diff(const TriangleField& a, const TriangleField& b) {
    auto ra = a.raw(), rb = b.raw();
    double best = 0.0;
    for (size_t x = 0; x < ra.size(); ++x) best = std::max(best, std::fabs(ra[x] - rb[x]));
    return best;
}

TriangleField constant_in_s_extension(const InitialData& init, const TriangleGrid& g) {
    TriangleField u(g);
    for (int i = 0; i <= g.n_tau; ++i) {
        SpatialSlice s = sample_g(init, g, g.t(i));
        for (int j = 0; j <= i; ++j) u.set_slice(i, j, s);
    }
    return u;
}

} // namespace

TriangleField gamma_map(const TriangleField& u_k, const QuasilinearSystemSpec& spec,
                        const TriangleGrid& grid, const SchemeConfig& scheme,
                        const FixedPointConfig& cfg) {
    const int m = spec.m;
    const int jet_order = 2 * spec.r - 1;
    auto tops = spec.top_ids();

    detail::NodeLinearProblem p;
    p.d = spec.d;
    p.r = spec.r;
    p.m = m;
    p.mit = spec.mit;
    for (size_t pos = 0; pos < tops.size(); ++pos) {
        if (spec.A_top[pos]) p.active_A.push_back(tops[pos]);
        if (spec.B_top[pos]) p.active_B.push_back(tops[pos]);
    }
    auto pos_of = [tops](int id) {
        for (size_t p2 = 0; p2 < tops.size(); ++p2)
            if (tops[p2] == id) return static_cast<int>(p2);
        fail(ErrorCode::IndexOutOfRange, "fixedpoint::gamma_map", "not a top-order id");
    };

    auto eval_frozen = [&u_k, &spec, &grid, &cfg, m, jet_order](
                           const JetMatrixEval& e, int i, int j, SpatialSlice& out) {
        const JetTable& jt = cached_jet(u_k, i, j, jet_order);
        double t = grid.t(i), s = grid.s(j);
        double y[2];
        for (int k = 0; k < grid.n_points(); ++k) {
            grid.y_of(k, y);
            JetValues z = jet_values_at(jt, k, m);
            check_ball(z, cfg, i, j);
            e(t, s, y, z, &out.v[static_cast<size_t>(k) * out.m]);
        }
    };
    p.coeff_A = [&spec, pos_of, eval_frozen](int i, int j, int id, SpatialSlice& out) {
        eval_frozen(spec.A_top[static_cast<size_t>(pos_of(id))], i, j, out);
    };
    p.coeff_B = [&spec, pos_of, eval_frozen](int i, int j, int id, SpatialSlice& out) {
        eval_frozen(spec.B_top[static_cast<size_t>(pos_of(id))], i, j, out);
    };
    if (spec.F_low)
        p.source = [&spec, eval_frozen](int i, int j, SpatialSlice& out) {
            eval_frozen(spec.F_low, i, j, out);
            return true;
        };
    p.initial = [&spec, &grid](int i) { return sample_g(spec.init, grid, grid.t(i)); };

    LinearSolveReport rep;
    return detail::march(p, grid, scheme, rep);
}

namespace {

/// Shared outer loop: Picard iteration with the 3-consecutive-bad-ratio
/// window shrink. apply(u, grid_w) performs one contraction step.
std::pair<TriangleField, SolveReport> iterate_to_fixed_point(
    const TriangleGrid& grid, const InitialData& init, const FixedPointConfig& cfg,
    const std::function<TriangleField(const TriangleField&, const TriangleGrid&)>& apply,
    const std::function<double(const TriangleField&)>& residual_of) {
    const char* where = "fixedpoint::solve";
    if (!(cfg.tol > 0.0)) fail(ErrorCode::InvalidParameter, where, "tol must be > 0");
    if (!(cfg.target_ratio > 0.0 && cfg.target_ratio < 1.0))
        fail(ErrorCode::InvalidParameter, where, "target_ratio must be in (0,1)");

    SolveReport rep;
    int n_win = grid.n_tau;
    while (true) {
        TriangleGrid gw = grid.truncated(n_win);
        rep.windows.push_back(gw.T);
        TriangleField u0 = constant_in_s_extension(init, gw);
        TriangleField u = u0;
        rep.e.clear();
        rep.ratios.clear();
        rep.iterations = 0;
        bool converged = false, shrink = false;
        int bad_streak = 0;
        for (int it = 0; it < cfg.max_iter; ++it) {
            TriangleField next;
            try {
                next = apply(u, gw);
            } catch (const Error& err) {
                if (err.code() == ErrorCode::BallExit) {
                    shrink = true;
                    break;
                }
                throw;
            }
            ++rep.iterations;
            double e = sup_diff(next, u);
            rep.e.push_back(e);
            rep.r_max = std::max(rep.r_max, sup_diff(next, u0));
            u = std::move(next);
            if (e <= cfg.tol) {
                converged = true;
                break;
            }
            if (rep.e.size() >= 2) {
                double ratio = e / rep.e[rep.e.size() - 2];
                rep.ratios.push_back(ratio);
                bad_streak = ratio > cfg.target_ratio ? bad_streak + 1 : 0;
                if (bad_streak >= 3) {
                    shrink = true;
                    break;
                }
            }
        }
        if (converged) {
            rep.converged = true;
            rep.window = gw.T;
            rep.residual = residual_of(u);
            return {std::move(u), rep};
        }
        (void)shrink;
        if (n_win / 2 >= 4)
            n_win /= 2;
        else
            fail(ErrorCode::MaxIterExceeded, where,
                 "no convergence after " + std::to_string(cfg.max_iter) +
                     " iterations at the minimal window (4 steps)");
    }
}

} // namespace

std::pair<TriangleField, SolveReport> solve_quasilinear_fixedpoint(
    const QuasilinearSystemSpec& spec, const TriangleGrid& grid, const SchemeConfig& scheme,
    const FixedPointConfig& cfg) {
    auto apply = [&spec, &scheme, &cfg](const TriangleField& u, const TriangleGrid& gw) {
        return gamma_map(u, spec, gw, scheme, cfg);
    };
    auto resid = [&spec](const TriangleField& u) { return discrete_residual(u, spec); };
    return iterate_to_fixed_point(grid, spec.init, cfg, apply, resid);
}

std::pair<TriangleField, TriangleField> temporal_M(const TriangleField& u_k,
                                                   const FullyNonlinearSpec& spec,
                                                   const TriangleGrid& grid,
                                                   const SchemeConfig& scheme) {
    const int two_r = 2 * spec.r;
    auto tops = spec.top_ids();
    auto pos_of = [tops](int id) {
        for (size_t p = 0; p < tops.size(); ++p)
            if (tops[p] == id) return static_cast<int>(p);
        fail(ErrorCode::IndexOutOfRange, "fixedpoint::temporal_M", "not a top-order id");
    };

    auto coeff_from = [&u_k, &spec, &grid, two_r](bool diagonal_part, int i, int j, int id,
                                                  SpatialSlice& out, auto pos_lookup) {
        const JetTable& jt = cached_jet(u_k, i, j, two_r);
        double t = grid.t(i), s = grid.s(j);
        double y[2];
        int pos = pos_lookup(id);
        for (int k = 0; k < grid.n_points(); ++k) {
            grid.y_of(k, y);
            JetValues z = jet_values_at(jt, k, 1);
            out.at(k, 0) = diagonal_part ? spec.eval_F_n(pos, t, s, y, z)
                                         : spec.eval_F_q(pos, t, s, y, z);
        }
    };

    // w2: local family w2_s = F_t(u) + sum F_qij(u) w2_yiyj(t,s,y), w2(t,0)=g_t
    detail::NodeLinearProblem p2;
    p2.d = spec.d;
    p2.r = spec.r;
    p2.m = 1;
    p2.mit = spec.mit;
    p2.active_A = tops;
    p2.coeff_A = [coeff_from, pos_of](int i, int j, int id, SpatialSlice& out) {
        coeff_from(false, i, j, id, out, pos_of);
    };
    p2.coeff_B = nullptr;
    p2.source = [&u_k, &spec, &grid, two_r](int i, int j, SpatialSlice& out) {
        const JetTable& jt = cached_jet(u_k, i, j, two_r);
        double t = grid.t(i), s = grid.s(j);
        double y[2];
        for (int k = 0; k < grid.n_points(); ++k) {
            grid.y_of(k, y);
            out.at(k, 0) = spec.eval_F_t(t, s, y, jet_values_at(jt, k, 1));
        }
        return true;
    };
    p2.initial = [&spec, &grid](int i) { return sample_gt(spec.init, grid, grid.t(i)); };
    LinearSolveReport rep2;
    TriangleField w2 = detail::march(p2, grid, scheme, rep2);

    // diagonal top-order derivatives of w2 per s-level, shared by w1's source
    std::vector<std::vector<SpatialSlice>> w2_diag_tops(static_cast<size_t>(grid.n_tau) + 1);
    for (int j = 0; j <= grid.n_tau; ++j) {
        SpatialSlice dia = diagonal_slice(w2, j);
        for (int id : tops)
            w2_diag_tops[static_cast<size_t>(j)].push_back(
                stencil_apply(dia, spec.mit.at(id), grid.dy(), grid.n_y, grid.d, two_r));
    }

    // w1: nonlocal linear with the w2 diagonal contribution in the source
    detail::NodeLinearProblem p1 = p2;
    p1.active_B = tops;
    p1.coeff_B = [coeff_from, pos_of](int i, int j, int id, SpatialSlice& out) {
        coeff_from(true, i, j, id, out, pos_of);
    };
    p1.source = [&u_k, &spec, &grid, two_r, tops, &w2_diag_tops](int i, int j,
                                                                SpatialSlice& out) {
        const JetTable& jt = cached_jet(u_k, i, j, two_r);
        double t = grid.t(i), s = grid.s(j);
        double y[2];
        for (int k = 0; k < grid.n_points(); ++k) {
            grid.y_of(k, y);
            JetValues z = jet_values_at(jt, k, 1);
            double acc = spec.eval_F_s(t, s, y, z);
            for (size_t p = 0; p < tops.size(); ++p)
                acc += spec.eval_F_n(static_cast<int>(p), t, s, y, z) *
                       w2_diag_tops[static_cast<size_t>(j)][p].at(k, 0);
            out.at(k, 0) = acc;
        }
        return true;
    };
    // w1(t,0,y) = F(t, 0, y, g_yy(t,y), g_yy(0,y))
    auto g_jets = [&spec, &grid](double t) {
        std::vector<SpatialSlice> out;
        for (const MultiIndex& mi : spec.mit) out.push_back(sample_dg(spec.init, grid, t, mi));
        return out;
    };
    auto diag0 = std::make_shared<std::vector<SpatialSlice>>(g_jets(0.0));
    p1.initial = [&spec, &grid, g_jets, diag0](int i) {
        double t = grid.t(i);
        auto loc = g_jets(t);
        SpatialSlice s(grid.n_points(), 1);
        double y[2];
        for (int k = 0; k < grid.n_points(); ++k) {
            grid.y_of(k, y);
            JetValues z(grid.d, 2 * grid.r, 1);
            for (int id = 0; id < spec.mit.size(); ++id) {
                z.loc(id) = loc[static_cast<size_t>(id)].at(k, 0);
                z.dia(id) = (*diag0)[static_cast<size_t>(id)].at(k, 0);
            }
            s.at(k, 0) = spec.eval_F(t, 0.0, y, z);
        }
        return s;
    };
    LinearSolveReport rep1;
    TriangleField w1 = detail::march(p1, grid, scheme, rep1);
    return {std::move(w1), std::move(w2)};
}

TriangleField temporal_N(const TriangleField& w1, const InitialData& init,
                         const TriangleGrid& grid) {
    TriangleField u(grid);
    const double dtau = grid.dtau();
    const size_t n = static_cast<size_t>(grid.n_points()) * grid.m;
    for (int i = 0; i <= grid.n_tau; ++i) {
        SpatialSlice g = sample_g(init, grid, grid.t(i));
        u.set_slice(i, 0, g);
        std::vector<double> interior(n, 0.0); // sum of full-weight inner terms
        for (int j = 1; j <= i; ++j) {
            auto w0 = w1.slice(i, 0);
            auto wj = w1.slice(i, j);
            auto dst = u.slice(i, j);
            for (size_t x = 0; x < n; ++x)
                dst[x] = g.v[x] + dtau * (0.5 * w0[x] + interior[x] + 0.5 * wj[x]);
            for (size_t x = 0; x < n; ++x) interior[x] += wj[x];
        }
    }
    return u;
}

std::pair<TriangleField, SolveReport> solve_fully_nonlinear_temporal(
    const FullyNonlinearSpec& spec, const TriangleGrid& grid, const SchemeConfig& scheme,
    const FixedPointConfig& cfg) {
    auto apply = [&spec, &scheme](const TriangleField& u, const TriangleGrid& gw) {
        auto [w1, w2] = temporal_M(u, spec, gw, scheme);
        (void)w2;
        return temporal_N(w1, spec.init, gw);
    };
    auto resid = [&spec](const TriangleField& u) { return discrete_residual(u, spec); };
    return iterate_to_fixed_point(grid, spec.init, cfg, apply, resid);
}

double discrete_residual(const TriangleField& u, const QuasilinearSystemSpec& spec) {
    const TriangleGrid& g = u.grid();
    const int m = spec.m;
    const int two_r = 2 * spec.r;
    auto tops = spec.top_ids();
    const int n_low = spec.mit.count_up_to(two_r - 1);
    double worst = 0.0;
    double y[2];
    std::vector<double> mat(static_cast<size_t>(m) * m), low(static_cast<size_t>(m));
    for (int i = 1; i <= g.n_tau; ++i) {
        for (int j = 0; j < i; ++j) {
            JetTable jt = jet_at(u, i, j, two_r);
            double t = g.t(i), s = g.s(j);
            for (int k = 0; k < g.n_points(); ++k) {
                g.y_of(k, y);
                JetValues zfull = jet_values_at(jt, k, m);
                // coefficient argument: sub-jet of order 2r-1 (table prefix)
                JetValues z(g.d, two_r - 1, m);
                std::copy(zfull.local.begin(),
                          zfull.local.begin() + static_cast<long>(n_low) * m, z.local.begin());
                std::copy(zfull.diag.begin(),
                          zfull.diag.begin() + static_cast<long>(n_low) * m, z.diag.begin());
                std::vector<double> rhs(static_cast<size_t>(m), 0.0);
                for (size_t p = 0; p < tops.size(); ++p) {
                    int id = tops[p];
                    if (spec.A_top[p]) {
                        spec.A_top[p](t, s, y, z, mat.data());
                        for (int a = 0; a < m; ++a)
                            for (int b = 0; b < m; ++b)
                                rhs[static_cast<size_t>(a)] +=
                                    mat[static_cast<size_t>(a) * m + b] * zfull.loc(id, b);
                    }
                    if (spec.B_top[p]) {
                        spec.B_top[p](t, s, y, z, mat.data());
                        for (int a = 0; a < m; ++a)
                            for (int b = 0; b < m; ++b)
                                rhs[static_cast<size_t>(a)] +=
                                    mat[static_cast<size_t>(a) * m + b] * zfull.dia(id, b);
                    }
                }
                if (spec.F_low) {
                    spec.F_low(t, s, y, z, low.data());
                    for (int a = 0; a < m; ++a) rhs[static_cast<size_t>(a)] += low[static_cast<size_t>(a)];
                }
                for (int a = 0; a < m; ++a) {
                    double ds = (u.at(i, j + 1, k, a) - u.at(i, j, k, a)) / g.dtau();
                    worst = std::max(worst, std::fabs(ds - rhs[static_cast<size_t>(a)]));
                }
            }
        }
    }
    return worst;
}

double discrete_residual(const TriangleField& u, const FullyNonlinearSpec& spec) {
    const TriangleGrid& g = u.grid();
    double worst = 0.0;
    double y[2];
    for (int i = 1; i <= g.n_tau; ++i) {
        for (int j = 0; j < i; ++j) {
            JetTable jt = jet_at(u, i, j, 2 * g.r);
            for (int k = 0; k < g.n_points(); ++k) {
                g.y_of(k, y);
                double rhs = spec.eval_F(g.t(i), g.s(j), y, jet_values_at(jt, k, 1));
                double ds = (u.at(i, j + 1, k, 0) - u.at(i, j, k, 0)) / g.dtau();
                worst = std::max(worst, std::fabs(ds - rhs));
            }
        }
    }
    return worst;
}

} // namespace nlpde
