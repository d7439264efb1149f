#include "nlpde/linsolve.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "nlpde/holder.hpp"
#include "nlpde/parallel.hpp"

namespace nlpde {

namespace {

std::vector<int> sample_indices(int max_incl, int count) {
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

double matrix_inf_norm_sup(const SpatialSlice& c, int m) {
    double best = 0.0;
    for (int k = 0; k < c.n_points; ++k)
        for (int a = 0; a < m; ++a) {
            double row = 0.0;
            for (int b = 0; b < m; ++b) row += std::fabs(c.at(k, a * m + b));
            best = std::max(best, row);
        }
    return best;
}

// y += M(k) * x per point, M row-major m x m.
void accumulate_matvec(std::vector<double>& y, const SpatialSlice& coeff,
                       const SpatialSlice& x, int m) {
    for (int k = 0; k < x.n_points; ++k)
        for (int a = 0; a < m; ++a) {
            double acc = 0.0;
            for (int b = 0; b < m; ++b) acc += coeff.at(k, a * m + b) * x.at(k, b);
            y[static_cast<size_t>(k) * m + a] += acc;
        }
}

void thomas_solve(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                  std::vector<double>& rhs) {
    const size_t n = diag.size();
    for (size_t i = 1; i < n; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// Cyclic tridiagonal solve (Sherman-Morrison): corner elements alpha at
// (0, n-1) and beta at (n-1, 0).
void cyclic_tridiag_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                          const std::vector<double>& sup, double alpha, double beta,
                          std::vector<double>& rhs) {
    const size_t n = diag.size();
    double gamma = -diag[0];
    std::vector<double> d = diag;
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;
    std::vector<double> a = sub, c = sup;
    std::vector<double> y = rhs;
    {
        std::vector<double> aa = a, dd = d, cc = c;
        thomas_solve(aa, dd, cc, y);
    }
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = beta;
    {
        std::vector<double> aa = a, dd = d, cc = c;
        thomas_solve(aa, dd, cc, u);
    }
    double vy = y[0] + alpha / gamma * y[n - 1];
    double vz = u[0] + alpha / gamma * u[n - 1];
    double factor = vy / (1.0 + vz);
    for (size_t i = 0; i < n; ++i) rhs[i] = y[i] - factor * u[i];
}

} // namespace

namespace detail {

TriangleField march(const NodeLinearProblem& prob, const TriangleGrid& grid,
                    const SchemeConfig& scheme, LinearSolveReport& report) {
    const char* where = "linsolve::march";
    auto clock_start = std::chrono::steady_clock::now();
    if (!(scheme.cfl_safety > 0.0 && scheme.cfl_safety <= 1.0))
        fail(ErrorCode::InvalidParameter, where, "cfl_safety must be in (0,1]");
    const bool imex = scheme.kind == SchemeKind::Imex;
    if (imex && (prob.d != 1 || prob.r != 1 || prob.m != 1))
        fail(ErrorCode::InvalidParameter, where, "imex scheme supports d=1, r=1, m=1 only");

    const int m = prob.m;
    const int two_r = 2 * prob.r;
    auto top_ids = prob.mit.ids_of_order(two_r);
    auto is_top = [&top_ids](int id) {
        for (int t : top_ids)
            if (t == id) return true;
        return false;
    };

    // CFL bound from node-sampled top-order coefficient norms.
    double sup_coeff = 0.0;
    {
        SpatialSlice buf(grid.n_points(), m * m);
        for (int i : sample_indices(grid.n_tau, 5)) {
            for (int j : sample_indices(i, 5)) {
                for (int id : prob.active_A)
                    if (is_top(id)) {
                        prob.coeff_A(i, j, id, buf);
                        sup_coeff = std::max(sup_coeff, matrix_inf_norm_sup(buf, m));
                    }
                for (int id : prob.active_B)
                    if (is_top(id)) {
                        prob.coeff_B(i, j, id, buf);
                        sup_coeff = std::max(sup_coeff, matrix_inf_norm_sup(buf, m));
                    }
            }
        }
    }
    // Stability bound dtau <= safety * dy^{2r} / (2^{2r} d^2 (sup|A|+sup|B|));
    // the sampled sup_coeff majorizes each of the two sups, so 2*sup_coeff
    // majorizes their sum.
    double bound = std::numeric_limits<double>::infinity();
    if (sup_coeff > 0.0)
        bound = scheme.cfl_safety * std::pow(grid.dy(), two_r) /
                (std::pow(2.0, two_r) * grid.d * grid.d * (2.0 * sup_coeff));
    report.scheme = scheme.kind;
    report.cfl_ratio = std::isinf(bound) ? 0.0 : grid.dtau() / bound;
    if (!imex && report.cfl_ratio > 1.0)
        fail(ErrorCode::CflViolation, where,
             "dtau=" + std::to_string(grid.dtau()) + " exceeds stable step " +
                 std::to_string(bound) + " (ratio " + std::to_string(report.cfl_ratio) + ")");

    TriangleField u(grid);
    for (int i = 0; i <= grid.n_tau; ++i) u.set_slice(i, 0, prob.initial(i));

    const double dtau = grid.dtau();
    const int np = grid.n_points();
    const double dy2 = grid.dy() * grid.dy();

    for (int j = 0; j < grid.n_tau; ++j) {
        // diagonal derivatives at level j, shared read-only by all slices
        SpatialSlice diag = u.copy_slice(j, j);
        std::vector<SpatialSlice> ddiag;
        ddiag.reserve(prob.active_B.size());
        for (int id : prob.active_B)
            ddiag.push_back(stencil_apply(diag, prob.mit.at(id), grid.dy(), grid.n_y,
                                          grid.d, two_r));

        parallel_for(j + 1, grid.n_tau + 1, [&](int i) {
            SpatialSlice cur = u.copy_slice(i, j);
            std::vector<double> rhs(static_cast<size_t>(np) * m, 0.0);
            SpatialSlice coeff(np, m * m);
            for (int id : prob.active_A) {
                if (imex && is_top(id)) continue; // handled implicitly below
                prob.coeff_A(i, j, id, coeff);
                SpatialSlice der =
                    stencil_apply(cur, prob.mit.at(id), grid.dy(), grid.n_y, grid.d, two_r);
                accumulate_matvec(rhs, coeff, der, m);
            }
            for (size_t p = 0; p < prob.active_B.size(); ++p) {
                prob.coeff_B(i, j, prob.active_B[p], coeff);
                accumulate_matvec(rhs, coeff, ddiag[p], m);
            }
            if (prob.source) {
                SpatialSlice f(np, m);
                if (prob.source(i, j, f))
                    for (size_t x = 0; x < rhs.size(); ++x) rhs[x] += f.v[x];
            }
            SpatialSlice next(np, m);
            for (size_t x = 0; x < next.v.size(); ++x)
                next.v[x] = cur.v[x] + dtau * rhs[x];
            if (imex) {
                // (I - dtau * a_k D2) next = explicit part; d=1, m=1
                bool have_top = false;
                for (int id : prob.active_A)
                    if (is_top(id)) {
                        prob.coeff_A(i, j, id, coeff);
                        have_top = true;
                    }
                if (have_top) {
                    std::vector<double> sub(static_cast<size_t>(np)),
                        dia(static_cast<size_t>(np)), sup(static_cast<size_t>(np));
                    for (int k = 0; k < np; ++k) {
                        double c = dtau * coeff.at(k, 0) / dy2;
                        dia[static_cast<size_t>(k)] = 1.0 + 2.0 * c;
                        sub[static_cast<size_t>(k)] = -c;
                        sup[static_cast<size_t>(k)] = -c;
                    }
                    // periodic corner entries from rows 0 and n-1
                    double alpha = -dtau * coeff.at(0, 0) / dy2;
                    double beta = -dtau * coeff.at(np - 1, 0) / dy2;
                    cyclic_tridiag_solve(sub, dia, sup, alpha, beta, next.v);
                }
            }
            u.set_slice(i, j + 1, next);
        });

        for (int i = j + 1; i <= grid.n_tau; ++i) {
            auto s = u.slice(i, j + 1);
            for (double x : s)
                if (!std::isfinite(x))
                    fail(ErrorCode::NonFiniteDetected, where,
                         "non-finite value first at slice (" + std::to_string(i) + "," +
                             std::to_string(j + 1) + ")");
        }
    }

    double sup = 0.0;
    for (double x : u.raw()) sup = std::max(sup, std::fabs(x));
    report.sup_norm = sup;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return u;
}

NodeLinearProblem view_of(const LinearSystemSpec& spec, const TriangleGrid& grid) {
    spec.validate("linsolve::view_of");
    if (spec.d != grid.d || spec.r != grid.r || spec.m != grid.m)
        fail(ErrorCode::GridMismatch, "linsolve::view_of", "spec shape differs from grid shape");
    NodeLinearProblem p;
    p.d = spec.d;
    p.r = spec.r;
    p.m = spec.m;
    p.mit = spec.mit;
    for (int id = 0; id < spec.mit.size(); ++id) {
        if (spec.A[static_cast<size_t>(id)]) p.active_A.push_back(id);
        if (spec.B[static_cast<size_t>(id)]) p.active_B.push_back(id);
    }
    auto eval_coeff = [&spec, grid](const LinearCoeffEval& e, int i, int j, SpatialSlice& out) {
        double t = grid.t(i), s = grid.s(j);
        double y[2];
        try {
            for (int k = 0; k < grid.n_points(); ++k) {
                grid.y_of(k, y);
                e(t, s, y, &out.v[static_cast<size_t>(k) * out.m]);
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception& ex) {
            fail(ErrorCode::EvaluatorFailure, "linsolve::coefficient", ex.what());
        }
    };
    p.coeff_A = [&spec, eval_coeff](int i, int j, int id, SpatialSlice& out) {
        eval_coeff(spec.A[static_cast<size_t>(id)], i, j, out);
    };
    p.coeff_B = [&spec, eval_coeff](int i, int j, int id, SpatialSlice& out) {
        eval_coeff(spec.B[static_cast<size_t>(id)], i, j, out);
    };
    if (spec.f)
        p.source = [&spec, eval_coeff](int i, int j, SpatialSlice& out) {
            eval_coeff(spec.f, i, j, out);
            return true;
        };
    p.initial = [&spec, grid](int i) { return sample_g(spec.init, grid, grid.t(i)); };
    return p;
}

} // namespace detail

std::pair<TriangleField, LinearSolveReport> solve_nonlocal_linear(const LinearSystemSpec& spec,
                                                                  const TriangleGrid& grid,
                                                                  const SchemeConfig& scheme) {
    LinearSolveReport rep;
    detail::NodeLinearProblem p = detail::view_of(spec, grid);
    TriangleField u = detail::march(p, grid, scheme, rep);
    return {std::move(u), rep};
}

TriangleField solve_local_family(const LinearSystemSpec& spec, const TriangleGrid& grid,
                                 const SchemeConfig& scheme) {
    if (!spec.b_is_zero())
        fail(ErrorCode::InvalidParameter, "linsolve::solve_local_family",
             "all diagonal coefficients B must be zero");
    return solve_nonlocal_linear(spec, grid, scheme).first;
}

double schauder_ratio(const TriangleField& u, const LinearSystemSpec& spec,
                      const TriangleGrid& grid, double l) {
    const bool with_t = grid.n_tau >= 2;

    double nf = 0.0;
    if (spec.f) {
        TriangleField ff(grid);
        double y[2];
        for (int i = 0; i <= grid.n_tau; ++i)
            for (int j = 0; j <= i; ++j)
                for (int k = 0; k < grid.n_points(); ++k) {
                    grid.y_of(k, y);
                    std::vector<double> out(static_cast<size_t>(grid.m));
                    spec.f(grid.t(i), grid.s(j), y, out.data());
                    for (int a = 0; a < grid.m; ++a) ff.at(i, j, k, a) = out[static_cast<size_t>(a)];
                }
        nf = norm_triangle(ff, l - 2 * grid.r, false);
    }

    TriangleField gg(grid);
    for (int i = 0; i <= grid.n_tau; ++i) {
        SpatialSlice s = sample_g(spec.init, grid, grid.t(i));
        for (int j = 0; j <= i; ++j) gg.set_slice(i, j, s);
    }
    double ng = norm_triangle(gg, l, false);

    if (nf + ng == 0.0) return 0.0; // then u == 0 by uniqueness
    return norm_triangle(u, l, with_t) / (nf + ng);
}

} // namespace nlpde
