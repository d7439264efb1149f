#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "nlpde/grid.hpp"

using namespace nlpde;

TEST_SUITE_BEGIN("grid");

namespace {

bool fails_with(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

} // namespace

TEST_CASE("build_grid computes steps exactly") {
    TriangleGrid g = build_grid(1.0, 8, 2.0 * M_PI, 32, 1, 1, 1);
    CHECK(g.dtau() == 0.125);
    CHECK(g.dy() == 2.0 * M_PI / 32);
    CHECK(g.n_points() == 32);
    CHECK(g.n_pairs() == 45);
}

TEST_CASE("build_grid rejects out-of-range parameters") {
    CHECK(fails_with(ErrorCode::InvalidParameter,
                     [] { build_grid(1.0, 8, 1.0, 3, 1, 1, 1); })); // stencil 5 > 3
    CHECK(fails_with(ErrorCode::InvalidParameter,
                     [] { build_grid(1.0, 8, 1.0, 16, 3, 1, 1); }));
    CHECK(fails_with(ErrorCode::InvalidParameter,
                     [] { build_grid(1.0, 0, 1.0, 16, 1, 1, 1); }));
    CHECK(fails_with(ErrorCode::InvalidParameter,
                     [] { build_grid(-1.0, 8, 1.0, 16, 1, 1, 1); }));
    CHECK(fails_with(ErrorCode::InvalidParameter,
                     [] { build_grid(1.0, 8, 1.0, 8, 1, 2, 1); })); // r=2 needs n_y >= 9
}

TEST_CASE("pair_index walks the lower triangle densely") {
    TriangleGrid g = build_grid(1.0, 4, 1.0, 8, 1, 1, 1);
    int expect = 0;
    for (int i = 0; i <= g.n_tau; ++i)
        for (int j = 0; j <= i; ++j) CHECK(g.pair_index(i, j) == expect++);
    CHECK(expect == g.n_pairs());
}

TEST_CASE("TriangleField rejects access above the diagonal") {
    TriangleGrid g = build_grid(1.0, 4, 1.0, 8, 1, 1, 1);
    TriangleField f(g);
    CHECK(fails_with(ErrorCode::IndexOutOfRange, [&] { f.slice(2, 3); }));
    CHECK(fails_with(ErrorCode::IndexOutOfRange, [&] { f.slice(5, 0); }));
    CHECK(fails_with(ErrorCode::IndexOutOfRange, [&] { f.slice(-1, 0); }));
}

TEST_CASE("stencil kills constants exactly") {
    TriangleGrid g = build_grid(1.0, 2, 2.0 * M_PI, 16, 1, 1, 1);
    SpatialSlice s(g.n_points(), 1);
    for (int k = 0; k < s.n_points; ++k) s.at(k, 0) = 3.75;
    for (int ord = 1; ord <= 3; ++ord) {
        SpatialSlice out = stencil_apply(s, make_multiindex(1, ord), g.dy(), g.n_y, 1, 3);
        for (int k = 0; k < out.n_points; ++k) CHECK(out.at(k, 0) == 0.0);
    }
}

TEST_CASE("second derivative of sin y meets the truncation bound") {
    // centred [1,-2,1]/dy^2 has error dy^2/12 * sup|phi''''| for smooth phi.
    TriangleGrid g = build_grid(1.0, 2, 2.0 * M_PI, 64, 1, 1, 1);
    SpatialSlice s(g.n_points(), 1);
    for (int k = 0; k < s.n_points; ++k) s.at(k, 0) = std::sin(k * g.dy());
    SpatialSlice out = stencil_apply(s, make_multiindex(1, 2), g.dy(), g.n_y, 1, 2);
    double bound = g.dy() * g.dy() / 12.0;
    for (int k = 0; k < out.n_points; ++k) {
        double err = std::fabs(out.at(k, 0) + std::sin(k * g.dy()));
        CHECK(err <= bound * 1.0001 + 1e-14);
    }
}

TEST_CASE("order-2 stencil has the exact discrete Fourier symbol") {
    // stencil e^{iky} -> -(2-2cos(k dy))/dy^2 * e^{iky}; checked on cos/sin.
    TriangleGrid g = build_grid(1.0, 2, 2.0 * M_PI, 32, 1, 1, 1);
    for (int k = 1; k <= 3; ++k) {
        double symbol = -(2.0 - 2.0 * std::cos(k * g.dy())) / (g.dy() * g.dy());
        SpatialSlice c(g.n_points(), 1), s(g.n_points(), 1);
        for (int p = 0; p < g.n_points(); ++p) {
            c.at(p, 0) = std::cos(k * p * g.dy());
            s.at(p, 0) = std::sin(k * p * g.dy());
        }
        SpatialSlice dc = stencil_apply(c, make_multiindex(1, 2), g.dy(), g.n_y, 1, 2);
        SpatialSlice ds = stencil_apply(s, make_multiindex(1, 2), g.dy(), g.n_y, 1, 2);
        for (int p = 0; p < g.n_points(); ++p) {
            CHECK(dc.at(p, 0) == doctest::Approx(symbol * c.at(p, 0)).epsilon(1e-12));
            CHECK(ds.at(p, 0) == doctest::Approx(symbol * s.at(p, 0)).epsilon(1e-12));
        }
    }
}

TEST_CASE("stencil is linear to 1e-13 relative") {
    TriangleGrid g = build_grid(1.0, 2, 2.0 * M_PI, 32, 2, 1, 1);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    SpatialSlice a(g.n_points(), 1), b(g.n_points(), 1), ab(g.n_points(), 1);
    double alpha = 2.5, beta = -0.75;
    for (int k = 0; k < g.n_points(); ++k) {
        a.at(k, 0) = dist(rng);
        b.at(k, 0) = dist(rng);
        ab.at(k, 0) = alpha * a.at(k, 0) + beta * b.at(k, 0);
    }
    MultiIndex mixed = make_multiindex(2, 1, 1);
    SpatialSlice da = stencil_apply(a, mixed, g.dy(), g.n_y, 2, 2);
    SpatialSlice db = stencil_apply(b, mixed, g.dy(), g.n_y, 2, 2);
    SpatialSlice dab = stencil_apply(ab, mixed, g.dy(), g.n_y, 2, 2);
    double scale = 0.0, err = 0.0;
    for (int k = 0; k < g.n_points(); ++k) {
        double want = alpha * da.at(k, 0) + beta * db.at(k, 0);
        scale = std::max(scale, std::fabs(want));
        err = std::max(err, std::fabs(dab.at(k, 0) - want));
    }
    CHECK(err <= 1e-13 * std::max(scale, 1.0));
}

TEST_CASE("stencil rejects orders above 2r+1") {
    TriangleGrid g = build_grid(1.0, 2, 2.0 * M_PI, 16, 1, 1, 1);
    SpatialSlice s(g.n_points(), 1);
    CHECK(fails_with(ErrorCode::UnsupportedOrder, [&] {
        stencil_apply(s, make_multiindex(1, 4), g.dy(), g.n_y, 1, 3);
    }));
}

TEST_CASE("diagonal_slice reads stored (j,j) values") {
    TriangleGrid g = build_grid(1.0, 4, 2.0 * M_PI, 8, 1, 1, 1);
    TriangleField f(g);
    // u(t,s,y) = t: the diagonal at level j evaluates to s_j.
    for (int i = 0; i <= g.n_tau; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k < g.n_points(); ++k) f.at(i, j, k, 0) = g.t(i);
    for (int j = 0; j <= g.n_tau; ++j) {
        SpatialSlice d = diagonal_slice(f, j);
        for (int k = 0; k < d.n_points; ++k) CHECK(d.at(k, 0) == g.s(j));
    }
    CHECK(fails_with(ErrorCode::IndexOutOfRange,
                     [&] { diagonal_slice(f, g.n_tau + 1); }));
    TriangleField z(g);
    SpatialSlice dz = diagonal_slice(z, 2);
    for (int k = 0; k < dz.n_points; ++k) CHECK(dz.at(k, 0) == 0.0);
}

TEST_CASE("jet_at: local equals diagonal on the diagonal") {
    TriangleGrid g = build_grid(1.0, 4, 2.0 * M_PI, 16, 1, 1, 1);
    TriangleField f(g);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& x : f.raw()) x = dist(rng);
    for (int j = 0; j <= g.n_tau; ++j) {
        JetTable jt = jet_at(f, j, j, 2);
        for (size_t id = 0; id < jt.local.size(); ++id)
            for (int k = 0; k < g.n_points(); ++k)
                CHECK(jt.local[id].at(k, 0) == jt.diag[id].at(k, 0));
    }
}

TEST_CASE("jet_at evaluates sin(y)(1+s) correctly at order 1") {
    TriangleGrid g = build_grid(1.0, 4, 2.0 * M_PI, 64, 1, 1, 1);
    TriangleField f(g);
    for (int i = 0; i <= g.n_tau; ++i)
        for (int j = 0; j <= i; ++j)
            for (int k = 0; k < g.n_points(); ++k)
                f.at(i, j, k, 0) = std::sin(k * g.dy()) * (1.0 + g.s(j));
    JetTable jt = jet_at(f, 3, 2, 1);
    double tol = g.dy() * g.dy(); // second-order stencil on smooth data
    for (int k = 0; k < g.n_points(); ++k) {
        double y = k * g.dy();
        CHECK(jt.local[0].at(k, 0) == doctest::Approx(std::sin(y) * (1.0 + g.s(2))));
        CHECK(std::fabs(jt.local[1].at(k, 0) - std::cos(y) * (1.0 + g.s(2))) <= tol);
        CHECK(jt.diag[0].at(k, 0) == doctest::Approx(std::sin(y) * (1.0 + g.s(2))));
        CHECK(std::fabs(jt.diag[1].at(k, 0) - std::cos(y) * (1.0 + g.s(2))) <= tol);
    }
    TriangleField z(g);
    JetTable jz = jet_at(z, 2, 1, 2);
    for (const auto& s : jz.local)
        for (double x : s.v) CHECK(x == 0.0);
}

TEST_CASE("multi-index table: canonical order, prefix property, multiplicity") {
    MultiIndexTable t1(1, 2);
    CHECK(t1.size() == 3);
    CHECK(t1.at(0).suffix() == "");
    CHECK(t1.at(1).suffix() == "1");
    CHECK(t1.at(2).suffix() == "11");
    CHECK(t1.count_up_to(1) == 2);

    MultiIndexTable t2(2, 2);
    CHECK(t2.size() == 6);
    CHECK(t2.at(3).suffix() == "11");
    CHECK(t2.at(4).suffix() == "12");
    CHECK(t2.at(5).suffix() == "22");
    CHECK(t2.at(4).multiplicity() == 2); // d12 counts twice among ordered tuples
    CHECK(t2.at(3).multiplicity() == 1);
    CHECK(t2.count_up_to(1) == 3); // ids of order <= k form a prefix
    for (int id = 0; id < t2.count_up_to(1); ++id) CHECK(t2.at(id).order() <= 1);
    CHECK(t2.ids_of_order(2) == std::vector<int>{3, 4, 5});
}

TEST_SUITE_END();
