#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smaflow/spectral.hpp"

#include <cmath>

using namespace smaflow;

namespace {

const double PI = M_PI;

double sup_diff(const ComplexField& a, const ComplexField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double sup_diff(const RealField& a, const RealField& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// symbolic oracle for f = exp(i 2pi k.x / L): d_z = (d1 - i d2)/2, d_w = (d3 - i d4)/2
cplx symbol(const TorusGrid& g, const std::array<int, 4>& k, DerivOp op) {
    cplx k1(0, 2 * PI * k[0] / g.L[0]), k2(0, 2 * PI * k[1] / g.L[1]);
    cplx k3(0, 2 * PI * k[2] / g.L[2]), k4(0, 2 * PI * k[3] / g.L[3]);
    cplx I(0, 1);
    cplx dz = 0.5 * (k1 - I * k2), dzb = 0.5 * (k1 + I * k2);
    cplx dw = 0.5 * (k3 - I * k4), dwb = 0.5 * (k3 + I * k4);
    return std::pow(dz, op.z) * std::pow(dzb, op.zb) * std::pow(dw, op.w) * std::pow(dwb, op.wb);
}

}  // namespace

TEST_CASE("derivative examples") {
    auto g = make_grid({16, 8, 16, 8}, {1, 1, 1, 1});
    auto u = sample(g, [](double x1, double, double, double) { return std::sin(2 * PI * x1); });
    auto d = derivative(u, d::zzb);
    auto want = sample(g, [](double x1, double, double, double) { return -PI * PI * std::sin(2 * PI * x1); });
    CHECK(sup_diff(d, to_complex(want)) < 1e-12);

    RealField c(g, 3.7);
    for (DerivOp op : {d::z, d::zb, d::w, d::wb, d::zzb, d::wwb, d::zw, d::zwb, d::zbw, d::zzb * d::wwb})
        CHECK(sup_norm(derivative(c, op)) < 1e-13);

    // cos(2pi x1) cos(2pi x3): d_z d_w = (1/4) d1 d3 = pi^2 sin sin
    auto v = sample(g, [](double x1, double, double x3, double) { return std::cos(2 * PI * x1) * std::cos(2 * PI * x3); });
    auto dv = derivative(v, d::zw);
    auto wv = sample(g, [](double x1, double, double x3, double) {
        return PI * PI * std::sin(2 * PI * x1) * std::sin(2 * PI * x3);
    });
    CHECK(sup_diff(dv, to_complex(wv)) < 1e-11);
}

TEST_CASE("derivatives of Fourier monomials match the symbol") {
    auto g = make_grid({8, 8, 8, 8}, {1, 2, 1, 0.5});
    std::vector<std::array<int, 4>> ks{{1, 0, 0, 0}, {0, 2, -1, 0}, {3, -1, 2, 1}, {-2, 3, 0, -3}};
    std::vector<DerivOp> ops{d::z, d::wb, d::zzb, d::wwb, d::zw, d::zwb, d::zbw, d::zzb * d::w, {2, 0, 1, 1}};
    for (auto k : ks) {
        ComplexField f(g);
        for (std::size_t i1 = 0; i1 < 8; ++i1)
            for (std::size_t i2 = 0; i2 < 8; ++i2)
                for (std::size_t i3 = 0; i3 < 8; ++i3)
                    for (std::size_t i4 = 0; i4 < 8; ++i4) {
                        double ph = 2 * PI *
                                    (k[0] * g.coord(0, i1) / g.L[0] + k[1] * g.coord(1, i2) / g.L[1] +
                                     k[2] * g.coord(2, i3) / g.L[2] + k[3] * g.coord(3, i4) / g.L[3]);
                        f[g.index(i1, i2, i3, i4)] = std::polar(1.0, ph);
                    }
        for (auto op : ops) {
            auto got = derivative(f, op);
            cplx s = symbol(g, k, op);
            double err = 0;
            for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(got[i] - s * f[i]));
            CHECK(err <= 1e-11 * (1 + std::abs(s)));
        }
    }
}

TEST_CASE("factor laplacians agree with the complex path") {
    auto g = make_grid({8, 8, 8, 8}, {1, 1, 1, 1});
    auto u = sample(g, [](double x1, double x2, double x3, double x4) {
        return 0.1 * std::sin(2 * PI * (x1 + 2 * x3)) + 0.3 * std::cos(2 * PI * (x2 - x4)) + 0.05 * std::cos(6 * PI * x1);
    });
    RealField a, b;
    factor_laplacians(u, a, b);
    CHECK(sup_diff(a, real(derivative(u, d::zzb))) < 1e-12);
    CHECK(sup_diff(b, real(derivative(u, d::wwb))) < 1e-12);
}

TEST_CASE("poisson_solve_factor") {
    auto g = make_grid({16, 16, 8, 8}, {1, 1, 1, 1});
    auto rhs = sample(g, [](double x1, double, double, double) { return std::cos(2 * PI * x1); });
    auto u = poisson_solve_factor(rhs, Factor::z);
    auto want = sample(g, [](double x1, double, double, double) { return -std::cos(2 * PI * x1) / (PI * PI); });
    CHECK(sup_diff(u, want) < 1e-14);

    CHECK(sup_norm(poisson_solve_factor(RealField(g, 0.0), Factor::w)) == 0.0);
    CHECK_THROWS_WITH(poisson_solve_factor(RealField(g, 1.0), Factor::z), doctest::Contains("incompatible Poisson data"));

    // inverse property on zero-slice-mean data
    auto r = sample(g, [](double x1, double x2, double x3, double) {
        return std::sin(2 * PI * (x1 - x2)) * (1 + 0.5 * std::cos(2 * PI * x3));
    });
    auto s = poisson_solve_factor(r, Factor::z);
    RealField a, b;
    factor_laplacians(s, a, b);
    CHECK(sup_diff(a, r) < 1e-12);
}

TEST_CASE("spectral filter and tail") {
    auto g = make_grid({16, 8, 8, 8}, {1, 1, 1, 1});
    auto smooth = sample(g, [](double x1, double, double, double) { return std::sin(2 * PI * x1); });
    CHECK(sup_diff(spectral_filter(smooth), smooth) < 1e-12);
    CHECK(spectral_tail(smooth) < 1e-14);
    auto rough = sample(g, [](double x1, double, double, double) { return std::cos(14 * PI * x1); });
    CHECK(spectral_tail(rough) > 0.5);
    CHECK(sup_norm(spectral_filter(rough)) == doctest::Approx(std::exp(-36 * std::pow(7.0 / 8, 36))).epsilon(1e-12));
}

TEST_CASE("wavenumber") {
    auto g = make_grid({8, 8, 8, 8}, {2, 1, 1, 1});
    CHECK(wavenumber(g, 0, 1, false) == doctest::Approx(PI));
    CHECK(wavenumber(g, 0, 7, false) == doctest::Approx(-PI));
    CHECK(wavenumber(g, 0, 4, true) == 0.0);
    CHECK(std::abs(wavenumber(g, 0, 4, false)) == doctest::Approx(4 * PI));
}
