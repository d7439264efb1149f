#include "nlpde/systems.hpp"

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>

#include "nlpde/holder.hpp"

namespace nlpde {

namespace {

void fd_fallback_notice(const char* what) {
    static std::once_flag flag;
    std::call_once(flag, [what] {
        std::fprintf(stderr, "note: analytic derivative missing for %s; using finite differences\n",
                     what);
    });
}

const std::function<void(double, const double*, double*)>* find_dg(const InitialData& init,
                                                                   const MultiIndex& I) {
    for (const auto& kv : init.dg)
        if (kv.first.c == I.c) return &kv.second;
    return nullptr;
}

} // namespace

SpatialSlice sample_g(const InitialData& init, const TriangleGrid& g, double t) {
    if (!init.g) fail(ErrorCode::EvaluatorFailure, "systems::sample_g", "initial data g missing");
    SpatialSlice s(g.n_points(), init.m);
    double y[2];
    for (int k = 0; k < g.n_points(); ++k) {
        g.y_of(k, y);
        init.g(t, y, &s.v[static_cast<size_t>(k) * init.m]);
    }
    return s;
}

SpatialSlice sample_dg(const InitialData& init, const TriangleGrid& g, double t,
                       const MultiIndex& I) {
    if (I.order() == 0) return sample_g(init, g, t);
    if (const auto* f = find_dg(init, I)) {
        SpatialSlice s(g.n_points(), init.m);
        double y[2];
        for (int k = 0; k < g.n_points(); ++k) {
            g.y_of(k, y);
            (*f)(t, y, &s.v[static_cast<size_t>(k) * init.m]);
        }
        return s;
    }
    fd_fallback_notice("initial data spatial derivative");
    return stencil_apply(sample_g(init, g, t), I, g.dy(), g.n_y, g.d, 2 * g.r + 1);
}

SpatialSlice sample_gt(const InitialData& init, const TriangleGrid& g, double t) {
    if (init.g_t) {
        SpatialSlice s(g.n_points(), init.m);
        double y[2];
        for (int k = 0; k < g.n_points(); ++k) {
            g.y_of(k, y);
            init.g_t(t, y, &s.v[static_cast<size_t>(k) * init.m]);
        }
        return s;
    }
    fd_fallback_notice("initial data g_t");
    double eps = std::cbrt(DBL_EPSILON) * std::max(std::fabs(t), 1.0);
    SpatialSlice up = sample_g(init, g, t + eps);
    SpatialSlice dn = sample_g(init, g, t - eps);
    SpatialSlice out(g.n_points(), init.m);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = (up.v[i] - dn.v[i]) / (2.0 * eps);
    return out;
}

void LinearSystemSpec::validate(const char* where) const {
    if (static_cast<int>(A.size()) != mit.size() || static_cast<int>(B.size()) != mit.size())
        fail(ErrorCode::InvalidParameter, where,
             "coefficient maps must have one entry per multi-index with |I| <= 2r");
    if (!init.g) fail(ErrorCode::InvalidParameter, where, "initial data g missing");
}

LinearSystemSpec make_linear_spec(int d, int r, int m) {
    LinearSystemSpec spec;
    spec.d = d;
    spec.r = r;
    spec.m = m;
    spec.mit = MultiIndexTable(d, 2 * r);
    spec.A.resize(static_cast<size_t>(spec.mit.size()));
    spec.B.resize(static_cast<size_t>(spec.mit.size()));
    spec.init.d = d;
    spec.init.m = m;
    return spec;
}

// ---------------------------------------------------------------------------
// Fully-nonlinear derivative accessors (analytic callback or FD on F)
// ---------------------------------------------------------------------------

namespace {

double scalar_eval(const JetVecEval& f, double t, double s, const double* y, const JetValues& z) {
    double out = 0.0;
    f(t, s, y, z, &out);
    return out;
}

double fd_step(double x) { return std::cbrt(DBL_EPSILON) * std::max(std::fabs(x), 1.0); }

} // namespace

double FullyNonlinearSpec::eval_F(double t, double s, const double* y, const JetValues& z) const {
    if (!F) fail(ErrorCode::EvaluatorFailure, "systems::FullyNonlinearSpec", "F missing");
    return scalar_eval(F, t, s, y, z);
}

double FullyNonlinearSpec::eval_F_y(int k, double t, double s, const double* y,
                                    const JetValues& z) const {
    if (!F_y.empty() && F_y[static_cast<size_t>(k)])
        return scalar_eval(F_y[static_cast<size_t>(k)], t, s, y, z);
    fd_fallback_notice("F_y");
    double yy[2] = {y[0], d == 2 ? y[1] : 0.0};
    double h = fd_step(y[k]);
    yy[k] = y[k] + h;
    double up = eval_F(t, s, yy, z);
    yy[k] = y[k] - h;
    double dn = eval_F(t, s, yy, z);
    return (up - dn) / (2.0 * h);
}

double FullyNonlinearSpec::eval_F_s(double t, double s, const double* y,
                                    const JetValues& z) const {
    if (F_s) return scalar_eval(F_s, t, s, y, z);
    fd_fallback_notice("F_s");
    double h = fd_step(s);
    return (eval_F(t, s + h, y, z) - eval_F(t, s - h, y, z)) / (2.0 * h);
}

double FullyNonlinearSpec::eval_F_t(double t, double s, const double* y,
                                    const JetValues& z) const {
    if (F_t) return scalar_eval(F_t, t, s, y, z);
    fd_fallback_notice("F_t");
    double h = fd_step(t);
    return (eval_F(t + h, s, y, z) - eval_F(t - h, s, y, z)) / (2.0 * h);
}

namespace {

double fd_wrt_jet(const FullyNonlinearSpec& spec, bool diagonal, int id, double t, double s,
                  const double* y, const JetValues& z) {
    JetValues pert = z;
    double x = diagonal ? z.dia(id) : z.loc(id);
    double h = fd_step(x);
    (diagonal ? pert.dia(id) : pert.loc(id)) = x + h;
    double up = spec.eval_F(t, s, y, pert);
    (diagonal ? pert.dia(id) : pert.loc(id)) = x - h;
    double dn = spec.eval_F(t, s, y, pert);
    return (up - dn) / (2.0 * h);
}

} // namespace

double FullyNonlinearSpec::eval_F_q(int top_pos, double t, double s, const double* y,
                                    const JetValues& z) const {
    if (!F_q.empty() && F_q[static_cast<size_t>(top_pos)])
        return scalar_eval(F_q[static_cast<size_t>(top_pos)], t, s, y, z);
    fd_fallback_notice("F_q");
    int id = top_ids()[static_cast<size_t>(top_pos)];
    return fd_wrt_jet(*this, false, id, t, s, y, z);
}

double FullyNonlinearSpec::eval_F_n(int top_pos, double t, double s, const double* y,
                                    const JetValues& z) const {
    if (!F_n.empty() && F_n[static_cast<size_t>(top_pos)])
        return scalar_eval(F_n[static_cast<size_t>(top_pos)], t, s, y, z);
    fd_fallback_notice("F_n");
    int id = top_ids()[static_cast<size_t>(top_pos)];
    return fd_wrt_jet(*this, true, id, t, s, y, z);
}

// ---------------------------------------------------------------------------
// Ellipticity checker
// ---------------------------------------------------------------------------

namespace {

struct TopCoefficients {
    // One m x m matrix (row-major) per canonical |I| = 2r position.
    std::vector<std::vector<double>> A, B;
};

struct SpecShape {
    int d, r, m;
    int jet_order; // order of the z argument; -1 if z-independent
};

SpecShape shape_of(const SystemSpec& spec) {
    return std::visit(
        [](const auto& s) -> SpecShape {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearSystemSpec>)
                return {s.d, s.r, s.m, -1};
            else if constexpr (std::is_same_v<T, QuasilinearSystemSpec>)
                return {s.d, s.r, s.m, 2 * s.r - 1};
            else
                return {s.d, s.r, 1, 2 * s.r};
        },
        spec);
}

TopCoefficients top_coefficients(const SystemSpec& spec, double t, double s, const double* y,
                                 const JetValues& z) {
    return std::visit(
        [&](const auto& sp) -> TopCoefficients {
            using T = std::decay_t<decltype(sp)>;
            TopCoefficients tc;
            if constexpr (std::is_same_v<T, LinearSystemSpec>) {
                auto ids = sp.mit.ids_of_order(2 * sp.r);
                for (int id : ids) {
                    std::vector<double> a(static_cast<size_t>(sp.m) * sp.m, 0.0), b = a;
                    if (sp.A[static_cast<size_t>(id)]) sp.A[static_cast<size_t>(id)](t, s, y, a.data());
                    if (sp.B[static_cast<size_t>(id)]) sp.B[static_cast<size_t>(id)](t, s, y, b.data());
                    tc.A.push_back(std::move(a));
                    tc.B.push_back(std::move(b));
                }
            } else if constexpr (std::is_same_v<T, QuasilinearSystemSpec>) {
                auto ids = sp.top_ids();
                for (size_t p = 0; p < ids.size(); ++p) {
                    std::vector<double> a(static_cast<size_t>(sp.m) * sp.m, 0.0), b = a;
                    if (sp.A_top[p]) sp.A_top[p](t, s, y, z, a.data());
                    if (sp.B_top[p]) sp.B_top[p](t, s, y, z, b.data());
                    tc.A.push_back(std::move(a));
                    tc.B.push_back(std::move(b));
                }
            } else {
                auto ids = sp.top_ids();
                for (size_t p = 0; p < ids.size(); ++p) {
                    tc.A.push_back({sp.eval_F_q(static_cast<int>(p), t, s, y, z)});
                    tc.B.push_back({sp.eval_F_n(static_cast<int>(p), t, s, y, z)});
                }
            }
            return tc;
        },
        spec);
}

std::vector<std::vector<double>> xi_directions(int d, int count) {
    std::vector<std::vector<double>> out;
    if (d == 1) {
        out.push_back({1.0});
        out.push_back({-1.0});
    } else {
        for (int q = 0; q < count; ++q) {
            double th = 2.0 * M_PI * q / count;
            out.push_back({std::cos(th), std::sin(th)});
        }
    }
    return out;
}

std::vector<std::vector<double>> v_directions(int m, int count) {
    std::vector<std::vector<double>> out;
    if (m == 1) {
        out.push_back({1.0});
        out.push_back({-1.0});
        return out;
    }
    if (m == 2) {
        for (int q = 0; q < count; ++q) {
            double th = M_PI * q / count;
            out.push_back({std::cos(th), std::sin(th)});
        }
        return out;
    }
    // deterministic quasi-random directions on the unit sphere
    for (int q = 0; q < count; ++q) {
        std::vector<double> v(static_cast<size_t>(m));
        double norm = 0.0;
        for (int i = 0; i < m; ++i) {
            v[static_cast<size_t>(i)] = std::sin(0.5 + 1.6180339887 * (q + 1) * (i + 1));
            norm += v[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        out.push_back(std::move(v));
    }
    return out;
}

/// Deterministic lattice of jets in B(center, radius): the center, axis
/// perturbations at +-radius and +-radius/2, and 8 fixed mixed directions.
std::vector<JetValues> jet_samples(const JetValues& center, double radius) {
    std::vector<JetValues> out;
    out.push_back(center);
    const int n = center.mit.size() * center.m;
    auto push_axis = [&](bool diagonal, int flat, double delta) {
        JetValues z = center;
        (diagonal ? z.diag : z.local)[static_cast<size_t>(flat)] += delta;
        out.push_back(std::move(z));
    };
    for (int flat = 0; flat < n; ++flat) {
        for (double dlt : {radius, -radius, radius * 0.5, -radius * 0.5}) {
            push_axis(false, flat, dlt);
            push_axis(true, flat, dlt);
        }
    }
    unsigned state = 0x9e3779b9u;
    auto next = [&state]() {
        state = state * 1664525u + 1013904223u;
        return (state >> 8) / 16777216.0 * 2.0 - 1.0;
    };
    for (int q = 0; q < 8; ++q) {
        JetValues z = center;
        double norm = 0.0;
        std::vector<double> dir(static_cast<size_t>(2 * n));
        for (double& x : dir) {
            x = next();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (int flat = 0; flat < n; ++flat) {
            z.local[static_cast<size_t>(flat)] += radius * dir[static_cast<size_t>(flat)] / norm;
            z.diag[static_cast<size_t>(flat)] += radius * dir[static_cast<size_t>(n + flat)] / norm;
        }
        out.push_back(std::move(z));
    }
    return out;
}

std::vector<int> index_lattice(int max_incl, int count) {
    std::vector<int> out;
    if (max_incl <= 0 || count <= 1) {
        out.push_back(0);
        if (max_incl > 0) out.push_back(max_incl);
        return out;
    }
    for (int q = 0; q < count; ++q) {
        int idx = static_cast<int>(std::lround(static_cast<double>(max_incl) * q / (count - 1)));
        if (out.empty() || out.back() != idx) out.push_back(idx);
    }
    return out;
}

} // namespace

EllipticityReport check_ellipticity(const SystemSpec& spec, const TriangleGrid& grid,
                                    const EllipticitySamplePlan& plan, double lambda_target) {
    SpecShape sh = shape_of(spec);
    EllipticityReport rep;
    rep.lambda_est = std::numeric_limits<double>::infinity();

    const double sign = (sh.r % 2 == 1) ? 1.0 : -1.0; // (-1)^(r-1)
    auto xis = xi_directions(sh.d, plan.xi_directions);
    auto vs = v_directions(sh.m, plan.v_directions);

    std::vector<JetValues> zs;
    if (sh.jet_order < 0) {
        zs.push_back(JetValues(sh.d, 0, sh.m)); // placeholder, unused
    } else {
        JetValues center = plan.ball_center ? *plan.ball_center
                                            : JetValues(sh.d, sh.jet_order, sh.m);
        zs = jet_samples(center, plan.ball_radius);
    }

    MultiIndexTable top_table(sh.d, 2 * sh.r);
    auto top_ids = top_table.ids_of_order(2 * sh.r);

    int y_stride = std::max(plan.y_stride, (grid.n_points() + 63) / 64);
    auto t_idx = index_lattice(grid.n_tau, plan.t_samples);

    for (int i : t_idx) {
        for (int j : index_lattice(i, plan.s_samples)) {
            double t = grid.t(i), s = grid.s(j);
            for (int k = 0; k < grid.n_points(); k += y_stride) {
                double y[2];
                grid.y_of(k, y);
                for (const JetValues& z : zs) {
                    TopCoefficients tc = top_coefficients(spec, t, s, y, z);
                    for (const auto& xi : xis) {
                        // xi^I per canonical top index
                        std::vector<double> xi_pow(top_ids.size());
                        for (size_t p = 0; p < top_ids.size(); ++p) {
                            const MultiIndex& mi = top_table.at(top_ids[p]);
                            double w = 1.0;
                            for (int a = 0; a < sh.d; ++a)
                                for (int c = 0; c < mi.c[static_cast<size_t>(a)]; ++c)
                                    w *= xi[static_cast<size_t>(a)];
                            xi_pow[p] = w;
                        }
                        for (const auto& v : vs) {
                            for (int combined = 0; combined <= 1; ++combined) {
                                double form = 0.0;
                                for (size_t p = 0; p < top_ids.size(); ++p) {
                                    for (int a = 0; a < sh.m; ++a)
                                        for (int b = 0; b < sh.m; ++b) {
                                            double coef = tc.A[p][static_cast<size_t>(a) * sh.m + b];
                                            if (combined)
                                                coef += tc.B[p][static_cast<size_t>(a) * sh.m + b];
                                            form += coef * v[static_cast<size_t>(a)] *
                                                    v[static_cast<size_t>(b)] * xi_pow[p];
                                        }
                                }
                                double ratio = sign * form; // |xi| = |v| = 1
                                ++rep.samples;
                                if (ratio < rep.lambda_est) {
                                    rep.lambda_est = ratio;
                                    rep.worst_case.t = t;
                                    rep.worst_case.s = s;
                                    rep.worst_case.y.assign(y, y + sh.d);
                                    rep.worst_case.xi = xi;
                                    rep.worst_case.v = v;
                                    rep.worst_case.z_local = z.local;
                                    rep.worst_case.z_diag = z.diag;
                                    rep.worst_case.ratio = ratio;
                                    rep.worst_case.combined = combined != 0;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    rep.passed = rep.lambda_est >= lambda_target;
    if (!rep.passed && rep.lambda_est == std::numeric_limits<double>::infinity())
        rep.lambda_est = 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Assumption checker
// ---------------------------------------------------------------------------

namespace {

struct GenericH {
    std::string name;
    int out_dim;
    std::function<void(double t, double s, const double* y, const JetValues& z, double* out)> eval;
};

std::vector<GenericH> collect_h(const SystemSpec& spec) {
    std::vector<GenericH> hs;
    std::visit(
        [&](const auto& sp) {
            using T = std::decay_t<decltype(sp)>;
            if constexpr (std::is_same_v<T, LinearSystemSpec>) {
                for (int id = 0; id < sp.mit.size(); ++id) {
                    if (sp.A[static_cast<size_t>(id)])
                        hs.push_back({"A." + sp.mit.at(id).suffix(), sp.m * sp.m,
                                      [&sp, id](double t, double s, const double* y,
                                                const JetValues&, double* out) {
                                          sp.A[static_cast<size_t>(id)](t, s, y, out);
                                      }});
                    if (sp.B[static_cast<size_t>(id)])
                        hs.push_back({"B." + sp.mit.at(id).suffix(), sp.m * sp.m,
                                      [&sp, id](double t, double s, const double* y,
                                                const JetValues&, double* out) {
                                          sp.B[static_cast<size_t>(id)](t, s, y, out);
                                      }});
                }
                if (sp.f)
                    hs.push_back({"f", sp.m,
                                  [&sp](double t, double s, const double* y, const JetValues&,
                                        double* out) { sp.f(t, s, y, out); }});
            } else if constexpr (std::is_same_v<T, QuasilinearSystemSpec>) {
                auto ids = sp.top_ids();
                for (size_t p = 0; p < ids.size(); ++p) {
                    if (sp.A_top[p])
                        hs.push_back({"A." + sp.mit.at(ids[p]).suffix(), sp.m * sp.m,
                                      [&sp, p](double t, double s, const double* y,
                                               const JetValues& z, double* out) {
                                          sp.A_top[p](t, s, y, z, out);
                                      }});
                    if (sp.B_top[p])
                        hs.push_back({"B." + sp.mit.at(ids[p]).suffix(), sp.m * sp.m,
                                      [&sp, p](double t, double s, const double* y,
                                               const JetValues& z, double* out) {
                                          sp.B_top[p](t, s, y, z, out);
                                      }});
                }
                if (sp.F_low)
                    hs.push_back({"F", sp.m,
                                  [&sp](double t, double s, const double* y, const JetValues& z,
                                        double* out) { sp.F_low(t, s, y, z, out); }});
            } else {
                hs.push_back({"F", 1,
                              [&sp](double t, double s, const double* y, const JetValues& z,
                                    double* out) { *out = sp.eval_F(t, s, y, z); }});
            }
        },
        spec);
    return hs;
}

using HEval = std::function<void(double, double, const double*, const JetValues&, double*)>;

HEval derive_t(HEval h, int dim) {
    return [h, dim](double t, double s, const double* y, const JetValues& z, double* out) {
        double hstep = fd_step(t);
        std::vector<double> up(static_cast<size_t>(dim)), dn(static_cast<size_t>(dim));
        h(t + hstep, s, y, z, up.data());
        h(t - hstep, s, y, z, dn.data());
        for (int i = 0; i < dim; ++i)
            out[i] = (up[static_cast<size_t>(i)] - dn[static_cast<size_t>(i)]) / (2.0 * hstep);
    };
}

HEval derive_z(HEval h, int dim, bool diagonal, int flat) {
    return [h, dim, diagonal, flat](double t, double s, const double* y, const JetValues& z,
                                    double* out) {
        JetValues pert = z;
        auto& coord = (diagonal ? pert.diag : pert.local)[static_cast<size_t>(flat)];
        double x = coord;
        double hstep = fd_step(x);
        std::vector<double> up(static_cast<size_t>(dim)), dn(static_cast<size_t>(dim));
        coord = x + hstep;
        h(t, s, y, pert, up.data());
        coord = x - hstep;
        h(t, s, y, pert, dn.data());
        for (int i = 0; i < dim; ++i)
            out[i] = (up[static_cast<size_t>(i)] - dn[static_cast<size_t>(i)]) / (2.0 * hstep);
    };
}

} // namespace

AssumptionReport check_assumption(const SystemSpec& spec, const JetValues& z_bar, double R0,
                                  const TriangleGrid& grid, double alpha) {
    SpecShape sh = shape_of(spec);
    if (sh.jet_order >= 0 &&
        (z_bar.mit.d() != sh.d || z_bar.order != sh.jet_order || z_bar.m != sh.m))
        fail(ErrorCode::InvalidParameter, "systems::check_assumption",
             "ball center jet must have d=" + std::to_string(sh.d) + ", order " +
                 std::to_string(sh.jet_order) + ", m=" + std::to_string(sh.m));
    AssumptionReport rep;
    rep.ball_center = z_bar;
    rep.R0 = R0;
    rep.alpha = alpha;

    EllipticitySamplePlan eplan;
    eplan.ball_center = z_bar;
    eplan.ball_radius = R0;
    rep.ellipticity = check_ellipticity(spec, grid, eplan, 0.0);

    auto hs = collect_h(spec);
    const bool z_dep = sh.jet_order >= 0;
    const int n_flat = z_dep ? z_bar.mit.size() * z_bar.m : 0;

    // Derivative set per Tables 1-2: first order in t and every jet entry;
    // second-order crosses (t,z), (z,z) local x local, local x diag.
    std::vector<std::pair<std::string, HEval>> variants;
    for (const auto& h : hs) {
        variants.emplace_back(h.name, h.eval);
        variants.emplace_back(h.name + "_t", derive_t(h.eval, h.out_dim));
        for (int flat = 0; flat < n_flat; ++flat) {
            HEval dl = derive_z(h.eval, h.out_dim, false, flat);
            HEval dd = derive_z(h.eval, h.out_dim, true, flat);
            variants.emplace_back(h.name + "_zl" + std::to_string(flat), dl);
            variants.emplace_back(h.name + "_zd" + std::to_string(flat), dd);
            variants.emplace_back(h.name + "_t_zl" + std::to_string(flat),
                                  derive_t(dl, h.out_dim));
            variants.emplace_back(h.name + "_t_zd" + std::to_string(flat),
                                  derive_t(dd, h.out_dim));
            for (int flat2 = flat; flat2 < n_flat; ++flat2)
                variants.emplace_back(h.name + "_zl_zl", derive_z(dl, h.out_dim, false, flat2));
            for (int flat2 = 0; flat2 < n_flat; ++flat2)
                variants.emplace_back(h.name + "_zl_zd", derive_z(dl, h.out_dim, true, flat2));
        }
    }

    std::vector<JetValues> zs =
        z_dep ? jet_samples(z_bar, R0) : std::vector<JetValues>{JetValues(sh.d, 0, sh.m)};
    // cap z samples for the K sweep
    if (zs.size() > 9) zs.resize(9);
    auto t_idx = index_lattice(grid.n_tau, 3);
    int dim_max = sh.m * sh.m;
    std::vector<double> buf(static_cast<size_t>(dim_max));

    // K_est: discrete |H(t,.,.,z)|^(alpha) over the (s,y) grid
    for (const auto& [name, h] : variants) {
        (void)name;
        for (int i : t_idx) {
            double t = grid.t(i);
            auto s_idx = index_lattice(i, 4);
            for (const JetValues& z : zs) {
                LevelValues levels;
                double sup = 0.0;
                for (int j : s_idx) {
                    double s = grid.s(j);
                    std::vector<double> level(static_cast<size_t>(grid.n_points()));
                    for (int k = 0; k < grid.n_points(); ++k) {
                        double y[2];
                        grid.y_of(k, y);
                        h(t, s, y, z, buf.data());
                        double mx = 0.0;
                        for (double x : buf) mx = std::max(mx, std::fabs(x));
                        level[static_cast<size_t>(k)] = buf[0];
                        sup = std::max(sup, mx);
                    }
                    levels.push_back(std::move(level));
                }
                double norm = sup + seminorm_y(levels, alpha, grid);
                if (s_idx.size() > 1) {
                    double spacing = grid.dtau() * std::max(1, s_idx[1] - s_idx[0]);
                    norm += seminorm_s(levels, alpha / (2 * sh.r), spacing);
                }
                rep.K_est = std::max(rep.K_est, norm);
            }
        }
    }

    // L_est: max difference quotient over z-pairs inside the ball
    if (z_dep) {
        auto zpairs = jet_samples(z_bar, R0);
        for (const auto& h : hs) {
            for (int i : t_idx) {
                double t = grid.t(i);
                int j = i / 2;
                double s = grid.s(j);
                for (int k = 0; k < grid.n_points(); k += std::max(1, grid.n_points() / 8)) {
                    double y[2];
                    grid.y_of(k, y);
                    for (size_t p = 0; p < zpairs.size(); ++p) {
                        for (size_t q = p + 1; q < zpairs.size(); ++q) {
                            double dist2 = 0.0;
                            for (size_t x = 0; x < zpairs[p].local.size(); ++x) {
                                double dl = zpairs[p].local[x] - zpairs[q].local[x];
                                double dd = zpairs[p].diag[x] - zpairs[q].diag[x];
                                dist2 += dl * dl + dd * dd;
                            }
                            if (dist2 == 0.0) continue;
                            std::vector<double> va(static_cast<size_t>(dim_max)),
                                vb(static_cast<size_t>(dim_max));
                            h.eval(t, s, y, zpairs[p], va.data());
                            h.eval(t, s, y, zpairs[q], vb.data());
                            double diff = 0.0;
                            for (int x = 0; x < h.out_dim; ++x)
                                diff = std::max(diff,
                                                std::fabs(va[static_cast<size_t>(x)] -
                                                          vb[static_cast<size_t>(x)]));
                            rep.L_est = std::max(rep.L_est, diff / std::sqrt(dist2));
                        }
                    }
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Preset catalog
// ---------------------------------------------------------------------------

namespace {

// g(t,y) = amp * (1+t) * sum_a sin(y_a) with full analytic derivatives.
InitialData sine_initial_data(int d, double amp) {
    InitialData init;
    init.d = d;
    init.m = 1;
    init.g = [d, amp](double t, const double* y, double* out) {
        double acc = 0.0;
        for (int a = 0; a < d; ++a) acc += std::sin(y[a]);
        *out = amp * (1.0 + t) * acc;
    };
    init.g_t = [d, amp](double, const double* y, double* out) {
        double acc = 0.0;
        for (int a = 0; a < d; ++a) acc += std::sin(y[a]);
        *out = amp * acc;
    };
    // d/dy^c sin(y) cycles sin -> cos -> -sin -> -cos
    auto cyc = [](double y, int c) {
        switch (c % 4) {
            case 0: return std::sin(y);
            case 1: return std::cos(y);
            case 2: return -std::sin(y);
            default: return -std::cos(y);
        }
    };
    MultiIndexTable mit(d, 5);
    for (const MultiIndex& mi : mit) {
        if (mi.order() == 0) continue;
        init.dg.emplace_back(mi, [d, amp, mi, cyc](double t, const double* y, double* out) {
            // derivative of a separable sum: mixed derivatives vanish
            double acc = 0.0;
            for (int a = 0; a < d; ++a) {
                bool pure = true;
                for (int b = 0; b < d; ++b)
                    if (b != a && mi.c[static_cast<size_t>(b)] > 0) pure = false;
                if (pure && mi.c[static_cast<size_t>(a)] > 0)
                    acc += cyc(y[a], mi.c[static_cast<size_t>(a)]);
            }
            *out = amp * (1.0 + t) * acc;
        });
    }
    return init;
}

LinearCoeffEval const_coeff(double v) {
    return [v](double, double, const double*, double* out) { *out = v; };
}

} // namespace

SystemSpec make_preset(const std::string& name) {
    if (name == "nonlocal_heat_linear" || name == "local_family" ||
        name == "negative_b_linear") {
        LinearSystemSpec spec = make_linear_spec(1, 1, 1);
        int q11 = spec.mit.id_of(make_multiindex(1, 2));
        spec.A[static_cast<size_t>(q11)] = const_coeff(1.0);
        if (name == "nonlocal_heat_linear") spec.B[static_cast<size_t>(q11)] = const_coeff(1.0);
        if (name == "negative_b_linear") spec.B[static_cast<size_t>(q11)] = const_coeff(-2.0);
        spec.init = sine_initial_data(1, 1.0);
        return spec;
    }
    if (name == "biharmonic_linear") {
        LinearSystemSpec spec = make_linear_spec(1, 2, 1);
        int id4 = spec.mit.id_of(make_multiindex(1, 4));
        spec.A[static_cast<size_t>(id4)] = const_coeff(-1.0);
        spec.init = sine_initial_data(1, 1.0);
        return spec;
    }
    if (name == "fullnl_exp" || name == "fullnl_exp_2d") {
        const int d = name == "fullnl_exp" ? 1 : 2;
        FullyNonlinearSpec spec;
        spec.d = d;
        spec.r = 1;
        spec.mit = MultiIndexTable(d, 2);
        auto tops = spec.top_ids();
        // positions of the pure second derivatives along each axis
        std::vector<int> lap_pos;
        for (size_t p = 0; p < tops.size(); ++p) {
            const MultiIndex& mi = spec.mit.at(tops[p]);
            bool pure = false;
            for (int a = 0; a < d; ++a)
                if (mi.c[static_cast<size_t>(a)] == 2) pure = true;
            if (pure) lap_pos.push_back(static_cast<int>(p));
        }
        auto lap = [tops, lap_pos](const JetValues& z, bool diagonal) {
            double acc = 0.0;
            for (int p : lap_pos)
                acc += diagonal ? z.dia(tops[static_cast<size_t>(p)])
                                : z.loc(tops[static_cast<size_t>(p)]);
            return acc;
        };
        spec.F = [lap](double, double, const double*, const JetValues& z, double* out) {
            *out = lap(z, false) + std::tanh(lap(z, true));
        };
        spec.F_s = [](double, double, const double*, const JetValues&, double* out) { *out = 0.0; };
        spec.F_t = [](double, double, const double*, const JetValues&, double* out) { *out = 0.0; };
        spec.F_y.resize(static_cast<size_t>(d));
        for (int k = 0; k < d; ++k)
            spec.F_y[static_cast<size_t>(k)] =
                [](double, double, const double*, const JetValues&, double* out) { *out = 0.0; };
        spec.F_q.resize(tops.size());
        spec.F_n.resize(tops.size());
        for (size_t p = 0; p < tops.size(); ++p) {
            bool is_lap = false;
            for (int lp : lap_pos)
                if (lp == static_cast<int>(p)) is_lap = true;
            spec.F_q[p] = [is_lap](double, double, const double*, const JetValues&, double* out) {
                *out = is_lap ? 1.0 : 0.0;
            };
            spec.F_n[p] = [is_lap, lap](double, double, const double*, const JetValues& z,
                                        double* out) {
                double th = std::tanh(lap(z, true));
                *out = is_lap ? 1.0 - th * th : 0.0;
            };
        }
        spec.init = sine_initial_data(d, 0.2);
        return spec;
    }
    fail(ErrorCode::UnknownPreset, "systems::make_preset", "'" + name + "'");
}

PresetShape preset_shape(const std::string& name) {
    if (name == "nonlocal_heat_linear" || name == "local_family" || name == "negative_b_linear")
        return {1, 1, 1};
    if (name == "biharmonic_linear") return {1, 2, 1};
    if (name == "fullnl_exp") return {1, 1, 1};
    if (name == "fullnl_exp_2d") return {2, 1, 1};
    fail(ErrorCode::UnknownPreset, "systems::preset_shape", "'" + name + "'");
}

} // namespace nlpde
