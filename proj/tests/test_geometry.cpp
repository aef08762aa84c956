#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smaflow/geometry.hpp"
#include "smaflow/spectral.hpp"

#include <cmath>

using namespace smaflow;

namespace {

const double PI = M_PI;

double sup_diff(const RealField& a, const RealField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

TorusGrid g16() { return make_grid({16, 8, 16, 8}, {1, 1, 1, 1}); }

Background cosine_bg(double a = 1.0) { return pluriclosed_background(g16(), 1, 1, {{1, 1, a}}); }

}  // namespace

TEST_CASE("kahler product background") {
    auto g = g16();
    auto flat = kahler_product_background(RealField(g, 1.0), RealField(g, 1.0));
    CHECK(stats(flat.g).min == 1.0);
    CHECK(is_constant_background(flat));

    auto gp = sample(g, [](double x1, double, double, double) { return 1 + 0.3 * std::cos(2 * PI * x1); });
    auto bg = kahler_product_background(gp, RealField(g, 1.0));
    CHECK(bg.kind == BackgroundKind::kahler_product);
    CHECK(sup_norm(derivative(bg.g, d::w)) < 1e-14);
    CHECK(torsion(bg).max_norm2 < 1e-28);

    auto neg = sample(g, [](double x1, double, double, double) { return 1 - 1.2 * std::cos(2 * PI * x1); });
    CHECK_THROWS_WITH_AS(kahler_product_background(neg, RealField(g, 1.0)), doctest::Contains("not positive"),
                         ConfigError);
    auto wrong = sample(g, [](double, double, double x3, double) { return 1 + 0.3 * std::cos(2 * PI * x3); });
    CHECK_THROWS_AS(kahler_product_background(wrong, RealField(g, 1.0)), ConfigError);
}

TEST_CASE("pluriclosed background") {
    auto bg = cosine_bg();
    auto g = bg.grid();
    auto cc = sample(g, [](double x1, double, double x3, double) {
        return std::cos(2 * PI * x1) * std::cos(2 * PI * x3) / (PI * PI);
    });
    CHECK(sup_diff(bg.g, 1.0 - cc) < 1e-14);
    CHECK(sup_diff(bg.h, 1.0 + cc) < 1e-14);
    CHECK(verify_pluriclosed(bg) < 1e-12);
    // g_wwbar = cos cos = -h_zzbar
    CHECK(sup_diff(real(derivative(bg.g, d::wwb)), cc * (PI * PI)) < 1e-12);

    auto none = pluriclosed_background(g, 1, 1, {});
    CHECK(is_constant_background(none));
    CHECK(verify_pluriclosed(none) == 0.0);

    CHECK_THROWS_AS(pluriclosed_background(g, 1, 1, {{1, 1, 2 * PI * PI}}), ConfigError);

    // several modes still satisfy the constraint
    auto multi = pluriclosed_background(make_grid({16, 8, 16, 8}, {1, 1, 2, 1}), 2, 1.5, {{1, 2, 0.5}, {2, 1, -0.4}});
    CHECK(verify_pluriclosed(multi) < 1e-12);
}

TEST_CASE("verify_pluriclosed residual") {
    auto g = g16();
    CHECK(verify_pluriclosed(flat_background(g)) == 0.0);
    Background bg;
    bg.g = sample(g, [](double, double, double x3, double) { return 1 + 0.1 * std::cos(2 * PI * x3); });
    bg.h = RealField(g, 1.0);
    bg.kind = BackgroundKind::pluriclosed_general;
    CHECK(verify_pluriclosed(bg) == doctest::Approx(0.1 * PI * PI).epsilon(1e-12));
}

TEST_CASE("torsion") {
    auto flat = torsion(flat_background(g16()));
    CHECK(flat.max_norm2 == 0.0);
    CHECK(flat.max_grad == 0.0);

    auto bg = cosine_bg();
    auto t = torsion(bg);
    // g_w = cos(2pi x1) sin(2pi x3)/pi, h_z = -sin(2pi x1) cos(2pi x3)/pi
    auto want = sample(bg.grid(), [](double x1, double, double x3, double) {
        double c1 = std::cos(2 * PI * x1), s1 = std::sin(2 * PI * x1);
        double c3 = std::cos(2 * PI * x3), s3 = std::sin(2 * PI * x3);
        double g = 1 - c1 * c3 / (PI * PI), h = 1 + c1 * c3 / (PI * PI);
        double gw2 = c1 * c1 * s3 * s3 / (PI * PI), hz2 = s1 * s1 * c3 * c3 / (PI * PI);
        return gw2 / (g * g * h) + hz2 / (h * h * g);
    });
    CHECK(sup_diff(t.norm2, want) < 1e-12);
    CHECK(t.max_grad > 0);
}

TEST_CASE("curvature") {
    auto g = g16();
    auto flat = curvature(flat_background(g));
    CHECK(flat.cor8_holds);
    CHECK(sup_norm(flat.log_g_ww) == 0.0);
    CHECK(sup_norm(flat.log_h_zz) == 0.0);

    Background bg;
    bg.g = sample(g, [](double, double, double x3, double) { return std::exp(0.1 * std::cos(2 * PI * x3)); });
    bg.h = RealField(g, 1.0);
    bg.kind = BackgroundKind::pluriclosed_general;
    auto c = curvature(bg);
    auto want = sample(g, [](double, double, double x3, double) { return -0.1 * PI * PI * std::cos(2 * PI * x3); });
    CHECK(sup_diff(c.log_g_ww, want) < 1e-12);
    CHECK_FALSE(c.cor8_holds);

    auto gp = sample(g, [](double x1, double, double, double) { return 1 + 0.3 * std::cos(2 * PI * x1); });
    auto k = curvature(kahler_product_background(gp, RealField(g, 1.0)));
    CHECK(sup_norm(k.log_g_ww) < 1e-13);
    CHECK(k.cor8_holds);
}

TEST_CASE("universal constants") {
    CHECK(std::abs(beta0() - (2 * std::sqrt(3.0) - 3) / 3) < 1e-15);
    CHECK(beta0() == doctest::Approx(0.1547005).epsilon(1e-7));
    CHECK(std::abs(prop11_B(0.5) - 12.0 / 1.375) < 1e-12);
    CHECK(prop11_B(1.0) == doctest::Approx(2.0));
    CHECK(prop11_B(0.999) > 2.0);
    CHECK(prop11_B(beta0() + 1e-9) > 1e8);
    double prev = 0;
    for (double b = beta0() + 1e-3; b < 1; b += 0.05) {
        double B = prop11_B(b);
        if (prev > 0) CHECK(B < prev);
        prev = B;
    }
}

TEST_CASE("eps delta selection") {
    for (double b : {0.2, 0.5, 0.9, 1.0}) {
        auto ed = choose_eps_delta(b);
        CHECK(ed.epsilon > 0);
        CHECK(ed.epsilon < 1);
        CHECK(ed.delta > 0);
        CHECK(ed.delta < 1);
        double P = prop11_P(b, ed.epsilon, ed.delta), T = prop11_P_target(b);
        CHECK(P <= T + 1e-15);
        CHECK(P >= 1.01 * T - 1e-15);
        // 1 + B P <= 0 is what prop11 needs
        CHECK(1 + prop11_B(b) * P <= 1e-12);
    }
}

TEST_CASE("kahler constants collapse") {
    auto flat = flat_background(g16());
    for (double b : {0.3, 0.5, 0.7, 1.0}) {
        auto r = constants(flat, b, 2.0);
        CHECK(r.c(3) == 0.0);
        CHECK(r.c(6) == 2.0);
        CHECK(r.c(7) == 0.0);
        CHECK(r.c(8) == 0.0);
        CHECK(r.c(11) == 2.0);
        CHECK(r.A_prop9 == 0.0);
        CHECK(r.A_prop11 == 0.0);
        CHECK(r.c(14) == 2 * r.B);
    }
    auto r = constants(flat, 0.5, 2.0);
    CHECK(std::abs(r.B - 8.727272727272727) < 1e-9);

    // curved Kahler product keeps the torsion terms at zero
    auto g = g16();
    auto gp = sample(g, [](double x1, double, double, double) { return 1 + 0.3 * std::cos(2 * PI * x1); });
    auto k = constants(kahler_product_background(gp, RealField(g, 1.0)), 0.5, 2.0);
    CHECK(k.c(3) == 0.0);
    CHECK(k.c(7) == 0.0);
    CHECK(k.c(8) == 0.0);
    CHECK(k.A_prop9 == 0.0);

    CHECK_THROWS_WITH_AS(constants(flat, 0.1, 2.0), doctest::Contains("below universal threshold"), BelowThreshold);
    ConstantsOptions no11;
    no11.with_prop11 = false;
    CHECK_NOTHROW(constants(flat, 0.1, 2.0, no11));
}

TEST_CASE("constants are monotone under inflated invariants") {
    auto inv = background_invariants(cosine_bg(0.5));
    auto base = constants(inv, 0.5, 2.5);
    auto more = inv;
    more.max_T2 *= 1.5;
    more.max_gradT *= 1.5;
    more.curv_C *= 1.5;
    auto r = constants(more, 0.5, 2.5);
    for (int k = 1; k <= 14; ++k) CHECK(r.c(k) >= base.c(k));
    CHECK(r.A_prop9 >= base.A_prop9);
    CHECK(r.A_prop11 >= base.A_prop11);

    ConstantsOptions safe;
    safe.safety = 2.0;
    auto s = constants(inv, 0.5, 2.5, safe);
    for (int k = 1; k <= 14; ++k) CHECK(s.c(k) >= base.c(k));
}
