#include <doctest.h>

#include <cmath>

#include "nlpde/expr.hpp"
#include "nlpde/systems.hpp"

using namespace nlpde;

TEST_SUITE_BEGIN("systems");

namespace {

FullyNonlinearSpec scalar_fnl(const JetVecEval& F) {
    FullyNonlinearSpec f;
    f.d = 1;
    f.r = 1;
    f.mit = MultiIndexTable(1, 2);
    f.F = F;
    f.init.d = 1;
    f.init.m = 1;
    f.init.g = [](double, const double*, double* out) { out[0] = 0.0; };
    return f;
}

} // namespace

TEST_CASE("preset catalog: nonlocal_heat_linear has A=B=1 on the pure second index") {
    auto spec = std::get<LinearSystemSpec>(make_preset("nonlocal_heat_linear"));
    int q11 = spec.mit.id_of(make_multiindex(1, 2));
    REQUIRE(spec.A[size_t(q11)]);
    REQUIRE(spec.B[size_t(q11)]);
    double y = 1.3, a = 0.0, b = 0.0;
    spec.A[size_t(q11)](0.5, 0.25, &y, &a);
    spec.B[size_t(q11)](0.5, 0.25, &y, &b);
    CHECK(a == 1.0);
    CHECK(b == 1.0);
    for (int id = 0; id < spec.mit.size(); ++id) {
        if (id == q11) continue;
        CHECK_FALSE(spec.A[size_t(id)]);
        CHECK_FALSE(spec.B[size_t(id)]);
    }
}

TEST_CASE("preset catalog: local_family has all diagonal coefficients zero") {
    auto spec = std::get<LinearSystemSpec>(make_preset("local_family"));
    CHECK(spec.b_is_zero());
}

TEST_CASE("preset shapes and unknown names") {
    CHECK(preset_shape("fullnl_exp_2d").d == 2);
    CHECK(preset_shape("biharmonic_linear").r == 2);
    CHECK(preset_shape("nonlocal_heat_linear").m == 1);
    try {
        make_preset("no_such_preset");
        FAIL("expected UnknownPreset");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownPreset);
    }
}

TEST_CASE("fullnl_exp analytic derivatives match FD of the defining expression") {
    auto spec = std::get<FullyNonlinearSpec>(make_preset("fullnl_exp"));
    Expression F = parse("q11 + tanh(n11)");
    int q11 = spec.mit.id_of(make_multiindex(1, 2));
    int pos = 0; // only one top-order index in d=1
    int checked = 0;
    for (double ql : {-0.8, -0.1, 0.4, 1.2}) {
        for (double nd : {-1.5, 0.0, 0.7}) {
            JetValues z(1, 2, 1);
            z.loc(q11) = ql;
            z.dia(q11) = nd;
            Bindings b;
            b.bind("q11", ql);
            b.bind("n11", nd);
            double y = 0.9;
            double aq = spec.eval_F_q(pos, 0.3, 0.1, &y, z);
            double an = spec.eval_F_n(pos, 0.3, 0.1, &y, z);
            double fq = derivative_fd(F, "q11", b);
            double fn = derivative_fd(F, "n11", b);
            CHECK(std::fabs(aq - fq) <= 1e-6 * std::max(1.0, std::fabs(fq)));
            CHECK(std::fabs(an - fn) <= 1e-6 * std::max(1.0, std::fabs(fn)));
            // and against the closed forms themselves
            double sech = 1.0 / std::cosh(nd);
            CHECK(aq == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(an == doctest::Approx(sech * sech).epsilon(1e-12));
            ++checked;
        }
    }
    CHECK(checked == 12);
}

TEST_CASE("ellipticity: heat passes with lambda 1") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    EllipticitySamplePlan plan;
    auto rep = check_ellipticity(make_preset("nonlocal_heat_linear"), g, plan, 0.9);
    CHECK(rep.passed);
    CHECK(rep.lambda_est == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.samples > 0);
}

TEST_CASE("ellipticity: B = -2 fails the combined inequality with a witness") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    EllipticitySamplePlan plan;
    auto rep = check_ellipticity(make_preset("negative_b_linear"), g, plan, 0.0);
    CHECK_FALSE(rep.passed);
    CHECK(rep.worst_case.combined); // A alone passes; A+B = -1 is the violation
    CHECK(rep.worst_case.ratio == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("ellipticity: r=2 sign convention (-1)^{r-1} makes -u_yyyy parabolic") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 2, 1);
    EllipticitySamplePlan plan;
    auto rep = check_ellipticity(make_preset("biharmonic_linear"), g, plan, 0.9);
    CHECK(rep.passed);
    CHECK(rep.lambda_est == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("check_assumption: constant-coefficient linear spec") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    JetValues zbar(1, 2, 1);
    auto rep = check_assumption(make_preset("nonlocal_heat_linear"), zbar, 1.0, g);
    CHECK(rep.L_est == 0.0); // no z-dependence at all
    CHECK(rep.K_est == doctest::Approx(1.0).epsilon(1e-12)); // max |coefficient|
    CHECK(rep.ellipticity.passed);
}

TEST_CASE("check_assumption: F = q11 + n11 as a fully-nonlinear problem") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    FullyNonlinearSpec f = scalar_fnl(
        [](double, double, const double*, const JetValues& z, double* out) {
            out[0] = z.loc(2) + z.dia(2);
        });
    JetValues zbar(1, 2, 1);
    auto rep = check_assumption(SystemSpec(f), zbar, 1.0, g);
    // unit slope in each of the two arguments: Euclidean quotient sqrt(2)
    CHECK(rep.L_est == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
    CHECK(rep.ellipticity.passed);
    CHECK(rep.ellipticity.lambda_est == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.K_est > 0.0);
    CHECK(std::isfinite(rep.K_est));
}

TEST_CASE("check_assumption: F = q11^2 is only locally Lipschitz, monotone in R0") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    FullyNonlinearSpec f = scalar_fnl(
        [](double, double, const double*, const JetValues& z, double* out) {
            out[0] = z.loc(2) * z.loc(2);
        });
    JetValues zbar(1, 2, 1);
    double prev = 0.0;
    for (double R0 : {0.5, 1.0, 2.0}) {
        auto rep = check_assumption(SystemSpec(f), zbar, R0, g);
        CHECK(rep.L_est >= prev); // enlarging the ball never decreases L_est
        // sampled quotient tracks 2 * max |q11| over the ball
        CHECK(rep.L_est >= 0.5 * R0);
        CHECK(rep.L_est <= 2.0 * R0 + 1e-9);
        prev = rep.L_est;
    }
}

TEST_CASE("check_assumption rejects a ball center of the wrong jet shape") {
    TriangleGrid g = build_grid(0.5, 4, 2.0 * M_PI, 16, 1, 1, 1);
    FullyNonlinearSpec f = scalar_fnl(
        [](double, double, const double*, const JetValues& z, double* out) {
            out[0] = z.loc(2);
        });
    JetValues wrong(1, 1, 1); // order 1, but F consumes the order-2 jet
    try {
        check_assumption(SystemSpec(f), wrong, 1.0, g);
        FAIL("expected InvalidParameter");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidParameter);
    }
}

TEST_SUITE_END();
