#include "nlpde/holder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nlpde {

namespace {

double wrapped_dist(const TriangleGrid& g, int k, int kp) {
    double y[2], yp[2];
    g.y_of(k, y);
    g.y_of(kp, yp);
    double acc = 0.0;
    for (int a = 0; a < g.d; ++a) {
        double diff = std::fabs(y[a] - yp[a]);
        diff = std::min(diff, g.L - diff);
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

// Deterministic pair set: every k paired with (k + off) mod N for a spread
// of Q offsets, Q sized so the set has >= 10^4 pairs.
std::vector<std::pair<int, int>> subsampled_pairs(int n) {
    int q_count = std::max(16, (10000 + n - 1) / n);
    std::set<int> offsets;
    for (int q = 1; q <= q_count; ++q)
        offsets.insert(1 + static_cast<int>((static_cast<long long>(n - 2) * q) / (q_count + 1)));
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<size_t>(n) * offsets.size());
    for (int off : offsets)
        for (int k = 0; k < n; ++k) pairs.emplace_back(k, (k + off) % n);
    return pairs;
}

} // namespace

namespace detail {

double seminorm_y_impl(const LevelValues& levels, double alpha, const TriangleGrid& g,
                       bool force_exhaustive) {
    if (!(alpha > 0.0 && alpha < 1.0))
        fail(ErrorCode::InvalidAlpha, "holder::seminorm_y", "alpha must be in (0,1)");
    if (levels.empty()) return 0.0;
    const int n = static_cast<int>(levels.front().size());
    double best = 0.0;
    auto consider = [&](const std::vector<double>& v, int k, int kp) {
        double num = std::fabs(v[static_cast<size_t>(k)] - v[static_cast<size_t>(kp)]);
        if (num == 0.0) return;
        double den = std::pow(wrapped_dist(g, k, kp), alpha);
        best = std::max(best, num / den);
    };
    if (force_exhaustive || n <= 128) {
        for (const auto& v : levels)
            for (int k = 0; k < n; ++k)
                for (int kp = k + 1; kp < n; ++kp) consider(v, k, kp);
    } else {
        auto pairs = subsampled_pairs(n);
        for (const auto& v : levels)
            for (const auto& [k, kp] : pairs)
                if (k != kp) consider(v, k, kp);
    }
    return best;
}

} // namespace detail

double seminorm_y(const LevelValues& levels, double alpha, const TriangleGrid& g) {
    return detail::seminorm_y_impl(levels, alpha, g, false);
}

double seminorm_s(const LevelValues& levels, double alpha, double dtau) {
    if (!(alpha > 0.0 && alpha < 1.0))
        fail(ErrorCode::InvalidAlpha, "holder::seminorm_s", "alpha must be in (0,1)");
    const int nl = static_cast<int>(levels.size());
    double best = 0.0;
    for (int j = 0; j < nl; ++j) {
        for (int jp = j + 1; jp < nl; ++jp) {
            double den = std::pow((jp - j) * dtau, alpha);
            const auto& a = levels[static_cast<size_t>(j)];
            const auto& b = levels[static_cast<size_t>(jp)];
            for (size_t k = 0; k < a.size(); ++k)
                best = std::max(best, std::fabs(a[k] - b[k]) / den);
        }
    }
    return best;
}

namespace {

// Scalar derivative family D_s^i \partial_J phi over the s-levels of one
// component: spatial part by stencils, s part by first-order differences
// (central inside, one-sided at the ends).
LevelValues derivative_levels(const TriangleGrid& g, int n_levels,
                              const std::function<double(int, int)>& at, int ds_order,
                              const MultiIndex& J) {
    const int np = g.n_points();
    LevelValues base(static_cast<size_t>(n_levels));
    for (int j = 0; j < n_levels; ++j) {
        SpatialSlice s(np, 1);
        for (int k = 0; k < np; ++k) s.at(k, 0) = at(j, k);
        SpatialSlice der = stencil_apply(s, J, g.dy(), g.n_y, g.d, 2 * g.r + 1);
        base[static_cast<size_t>(j)].assign(der.v.begin(), der.v.end());
    }
    if (ds_order == 0) return base;
    LevelValues out(static_cast<size_t>(n_levels), std::vector<double>(static_cast<size_t>(np), 0.0));
    if (n_levels < 2) return out; // single level: no s-difference available
    const double dtau = g.dtau();
    for (int j = 0; j < n_levels; ++j) {
        for (int k = 0; k < np; ++k) {
            double v;
            if (j == 0)
                v = (base[1][static_cast<size_t>(k)] - base[0][static_cast<size_t>(k)]) / dtau;
            else if (j == n_levels - 1)
                v = (base[static_cast<size_t>(j)][static_cast<size_t>(k)] -
                     base[static_cast<size_t>(j - 1)][static_cast<size_t>(k)]) / dtau;
            else
                v = (base[static_cast<size_t>(j + 1)][static_cast<size_t>(k)] -
                     base[static_cast<size_t>(j - 1)][static_cast<size_t>(k)]) / (2.0 * dtau);
            out[static_cast<size_t>(j)][static_cast<size_t>(k)] = v;
        }
    }
    return out;
}

double sup_of(const LevelValues& levels) {
    double best = 0.0;
    for (const auto& v : levels)
        for (double x : v) best = std::max(best, std::fabs(x));
    return best;
}

} // namespace

HolderReport norm_parabolic(const TriangleGrid& g, int n_levels,
                            const std::function<double(int, int, int)>& at, double l) {
    const char* where = "holder::norm_parabolic";
    if (!(l > 0.0)) fail(ErrorCode::InvalidRegularityIndex, where, "l must be > 0");
    if (l == std::floor(l)) fail(ErrorCode::InvalidRegularityIndex, where, "l must be non-integer");
    if (l >= 2 * g.r + 1)
        fail(ErrorCode::UnsupportedRegularityIndex, where,
             "l >= 2r+1 needs second s-derivatives which the estimator does not take");

    HolderReport rep;
    rep.l = l;
    const int lfloor = static_cast<int>(std::floor(l));
    rep.alpha = l - lfloor;
    const int two_r = 2 * g.r;
    MultiIndexTable mit(g.d, two_r);

    for (int a = 0; a < g.m; ++a) {
        auto comp = [&at, a](int j, int k) { return at(j, k, a); };
        for (int i = 0; i <= 1; ++i) {
            for (int jy = 0; jy + two_r * i <= lfloor && jy <= two_r; ++jy) {
                int k_total = two_r * i + jy;
                for (int id : mit.ids_of_order(jy)) {
                    LevelValues dv = derivative_levels(g, n_levels, comp, i, mit.at(id));
                    rep.sup_terms[{i, jy}] += sup_of(dv);
                    if (k_total == lfloor) rep.seminorm_y += seminorm_y(dv, rep.alpha, g);
                    double rem = l - k_total;
                    if (rem > 0.0 && rem < two_r) {
                        double beta = rem / two_r;
                        rep.seminorm_s[beta] += seminorm_s(dv, beta, g.dtau());
                    }
                }
            }
        }
    }
    rep.total = rep.seminorm_y;
    for (const auto& kv : rep.sup_terms) rep.total += kv.second;
    for (const auto& kv : rep.seminorm_s) rep.total += kv.second;
    return rep;
}

HolderReport norm_parabolic_at(const TriangleField& u, int i, double l) {
    auto at = [&u, i](int j, int k, int a) { return u.at(i, j, k, a); };
    return norm_parabolic(u.grid(), i + 1, at, l);
}

double norm_triangle(const TriangleField& u, double l, bool with_t_derivative) {
    const TriangleGrid& g = u.grid();
    if (with_t_derivative && g.n_tau < 2)
        fail(ErrorCode::InvalidParameter, "holder::norm_triangle",
             "t-derivative terms require n_tau >= 2");
    const double dtau = g.dtau();
    double best = 0.0;
    for (int i = 0; i <= g.n_tau; ++i) {
        double total = norm_parabolic_at(u, i, l).total;
        if (with_t_derivative) {
            // du/dt at fixed (j,k): central over t-levels where slice (i-1,j)
            // exists, one-sided otherwise.
            auto ut = [&u, &g, i, dtau](int j, int k, int a) {
                if (i == 0) return (u.at(1, j, k, a) - u.at(0, j, k, a)) / dtau;
                if (i == g.n_tau) {
                    // at the corner j == n_tau no second t-level exists at this
                    // s-level; use the diagonal difference as the only
                    // first-order information available there
                    if (j > i - 1) return (u.at(i, j, k, a) - u.at(i - 1, j - 1, k, a)) / dtau;
                    return (u.at(i, j, k, a) - u.at(i - 1, j, k, a)) / dtau;
                }
                if (j > i - 1) return (u.at(i + 1, j, k, a) - u.at(i, j, k, a)) / dtau;
                return (u.at(i + 1, j, k, a) - u.at(i - 1, j, k, a)) / (2.0 * dtau);
            };
            total += norm_parabolic(g, i + 1, ut, l).total;
        }
        best = std::max(best, total);
    }
    return best;
}

} // namespace nlpde
