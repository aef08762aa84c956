#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smaflow/monitors.hpp"
#include "smaflow/spectral.hpp"

#include <cmath>

using namespace smaflow;

namespace {

const double PI = M_PI;

TorusGrid g8() { return make_grid({8, 8, 8, 8}, {1, 1, 1, 1}); }

RealField mixed_u(const TorusGrid& g, double a) {
    return sample(g, [a](double x1, double, double x3, double) { return a * std::cos(2 * PI * (x1 + x3)); });
}

struct Counts {
    std::size_t evaluated = 0, failed = 0;
};

Counts count(const MonitorSuite& m, const std::string& check) {
    Counts c;
    for (const auto& r : m.reports()) {
        auto [pass, margin] = m.column_value(r, check);
        if (pass == -1) continue;
        ++c.evaluated;
        if (pass == 0) ++c.failed;
    }
    return c;
}

std::string reason(const MonitorSuite& m, const std::string& check) {
    for (const auto& r : m.reports())
        for (const auto& c : r.records)
            if (c.check == check && c.skipped) return c.reason;
    return "";
}

MonitorSuite run_with(const Background& bg, const RealField& u0, double beta, int steps, double dt,
                      MonitorOptions opt = {}) {
    MonitorSuite m(bg, beta, std::move(opt));
    RunSpec spec;
    spec.bg = bg;
    spec.u0 = u0;
    spec.params.beta = beta;
    spec.params.t_end = 1;
    spec.stop_on_steady = false;
    spec.dt_sequence = std::vector<double>(std::size_t(steps), dt);
    spec.observers = {&m};
    run(spec);
    return m;
}

}  // namespace

TEST_CASE("mixed_norm") {
    auto g = g8();
    auto bg = flat_background(g);
    auto split = sample(g, [](double x1, double, double x3, double) {
        return 0.02 * std::sin(2 * PI * x1) + 0.03 * std::cos(2 * PI * x3);
    });
    CHECK(sup_norm(mixed_norm(make_state(split, bg, 0.5), bg, 0.5)) < 1e-28);

    // u = a cos(2pi(x1+x3)): u_zw = u_zzbar = -u_wwbar = -pi^2 a cos
    double a = 0.02;
    auto s = make_state(mixed_u(g, a), bg, 0.5);
    auto nu = mixed_norm(s, bg, 0.5);
    auto want = sample(g, [a](double x1, double, double x3, double) {
        double c = std::cos(2 * PI * (x1 + x3)), p = PI * PI * a * c;
        return 0.5 * p * p / ((1 - p) * (1 + p));
    });
    double err = 0;
    for (std::size_t i = 0; i < nu.size(); ++i) err = std::max(err, std::abs(nu[i] - want[i]));
    CHECK(err < 1e-14);
    auto half = mixed_norm(s, bg, 0.25);
    for (std::size_t i = 0; i < nu.size(); i += 37) CHECK(half[i] == doctest::Approx(nu[i] / 2).epsilon(1e-14));
}

TEST_CASE("prop7 bound") {
    auto r = prop7_bound(0.5, 0, 0, 0, 0, {0.25});
    CHECK(r.bound == doctest::Approx(0.0625).epsilon(1e-14));
    auto grid = prop7_delta_grid(0.5);
    REQUIRE(grid.size() == 9u);
    CHECK(grid.front() == doctest::Approx(0.05));
    CHECK(grid.back() == doctest::Approx(0.45));
    auto best = prop7_bound(0.5, 0, 0, 0, 0, grid);
    CHECK(best.bound >= r.bound);
    CHECK(best.bound <= 1.0);
    // degenerates as beta -> 1 at fixed delta
    CHECK(prop7_bound(0.99, 0, 0, 0, 0, {0.5}).bound < 1e-30);
    // larger data only lowers the bound
    CHECK(prop7_bound(0.5, -0.1, 0.2, 1.0, 0.5, grid).bound <= best.bound);
}

TEST_CASE("lagrange derivative weights") {
    std::array<double, 5> t{0.0, 0.1, 0.25, 0.31, 0.5};
    for (double t0 : {0.25, 0.1, 0.31}) {
        auto w = lagrange_derivative_weights(t, t0);
        for (int p = 0; p <= 4; ++p) {
            double got = 0;
            for (int i = 0; i < 5; ++i) got += w[std::size_t(i)] * std::pow(t[std::size_t(i)], p);
            double want = p == 0 ? 0 : p * std::pow(t0, p - 1);
            CHECK(got == doctest::Approx(want).epsilon(1e-11));
        }
    }
}

TEST_CASE("legendre W") {
    auto g = g8();
    auto bg = flat_background(g);
    auto u = sample(g, [](double x1, double x2, double x3, double x4) {
        return 0.02 * std::cos(2 * PI * (x1 - x3)) + 0.01 * std::sin(2 * PI * (x2 + x4)) + 0.015 * std::cos(2 * PI * x1);
    });
    auto s = make_state(u, bg, 0.5);
    auto W = legendre_W(s, bg);
    CHECK(legendre_det_residual(W, s, bg) < 1e-12);
    auto pbg = pluriclosed_background(g, 1, 1, {{1, 1, 0.3}});
    auto ps = make_state(u, pbg, 0.5);
    CHECK(legendre_det_residual(legendre_W(ps, pbg), ps, pbg) < 1e-12);
    // W is positive definite on admissible states
    CHECK(stats(legendre_quadratic(W, {1, 0}, {0, 0})).min > 0);
    CHECK(stats(legendre_quadratic(W, {0, 0}, {1, 0})).min > 0);
}

TEST_CASE("stationary state passes everything") {
    auto g = g8();
    auto bg = flat_background(g);
    auto m = run_with(bg, RealField(g, 0.0), 0.5, 12, 1e-3);
    CHECK(m.all_pass());
    for (const auto& c : all_checks()) CHECK(count(m, c).evaluated > 0);
    for (const auto& r : m.reports())
        for (const auto& c : r.records)
            if (c.check == "lemma24" && !c.skipped) CHECK(c.observed_value == 0.0);
}

TEST_CASE("c0 series") {
    auto g = g8();
    RunSpec spec;
    spec.bg = flat_background(g);
    spec.u0 = RealField(g, 0.0);
    spec.params.t_end = 0.01;
    spec.stop_on_steady = false;
    spec.dt_sequence = std::vector<double>(5, 2e-3);
    auto c = c0_series(run(spec));
    REQUIRE(c.c0.size() == 6u);
    for (double v : c.c0) CHECK(v == 2.0);
    for (double v : c.running_max) CHECK(v == 2.0);

    FlowState s = make_state(RealField(g, 0.0), spec.bg, 1.0);
    s.lambda[5] = 0.1;
    CHECK(snapshot_stats(s, spec.bg, 1.0, 0).c0 >= 10.0);
}

TEST_CASE("preconditions skip checks") {
    auto g = g8();
    auto pbg = pluriclosed_background(g, 1, 1, {{1, 1, 0.3}});
    REQUIRE_FALSE(curvature(pbg).cor8_holds);
    auto m = run_with(pbg, RealField(g, 0.0), 0.5, 6, 1e-3);
    CHECK(count(m, "cor8").evaluated == 0);
    CHECK(reason(m, "cor8") == "curvature sign condition fails");
    CHECK(count(m, "lemma24").evaluated == 0);
    CHECK(doctest::String(reason(m, "lemma24").c_str()) == doctest::Contains("constant g, h"));

    auto flat = flat_background(g);
    auto low = run_with(flat, RealField(g, 0.0), 0.1, 6, 1e-3);
    CHECK(count(low, "prop12").evaluated == 0);
    CHECK(count(low, "phi").evaluated == 0);
    CHECK(reason(low, "prop12") == "below universal threshold");
    CHECK(count(low, "prop5").evaluated > 0);
}

TEST_CASE("smooth flat run passes and is reproducible") {
    auto g = make_grid({16, 8, 16, 8}, {1, 1, 1, 1});
    auto bg = flat_background(g);
    auto u0 = shift_min_zero(sample(g, [](double x1, double x2, double x3, double) {
        return 0.004 * std::cos(2 * PI * (x1 - x3)) + 0.004 * std::sin(2 * PI * x2) + 0.003 * std::sin(2 * PI * x3);
    }));
    auto a = run_with(bg, u0, 0.5, 30, 5e-4);
    CHECK(a.all_pass());
    for (const auto& c : all_checks()) CHECK(count(a, c).evaluated > 0);
    auto b = run_with(bg, u0, 0.5, 30, 5e-4);
    CHECK(a.summary().dump() == b.summary().dump());
}

TEST_CASE("each negative control fails its own check") {
    auto g = make_grid({16, 8, 16, 8}, {1, 1, 1, 1});
    auto bg = flat_background(g);
    auto u0 = shift_min_zero(sample(g, [](double x1, double x2, double x3, double) {
        return 0.004 * std::cos(2 * PI * (x1 - x3)) + 0.004 * std::sin(2 * PI * x2) + 0.003 * std::sin(2 * PI * x3);
    }));
    for (const auto& check : all_checks()) {
        CAPTURE(check);
        MonitorOptions opt;
        opt.negative_control = check;
        opt.corrupt_snapshot = 4;
        auto m = run_with(bg, u0, 0.5, 12, 5e-4, opt);
        CHECK_FALSE(m.all_pass());
        CHECK(count(m, check).failed > 0);
    }
}

TEST_CASE("trajectory entry points") {
    auto g = g8();
    RunSpec spec;
    spec.bg = flat_background(g);
    spec.u0 = shift_min_zero(sample(g, [](double x1, double, double x3, double) {
        return 0.003 * std::sin(2 * PI * x1) + 0.003 * std::cos(2 * PI * x3);
    }));
    spec.params.beta = 0.5;
    spec.params.t_end = 1;
    spec.keep_states = true;
    spec.stop_on_steady = false;
    spec.dt_sequence = std::vector<double>(10, 1e-3);
    auto tr = run(spec);
    auto r1 = evaluate_trajectory(tr, spec.bg, 0.5);
    auto r2 = evaluate_trajectory(tr, spec.bg, 0.5);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        REQUIRE(r1[i].records.size() == r2[i].records.size());
        for (std::size_t k = 0; k < r1[i].records.size(); ++k) {
            double x = r1[i].records[k].observed_value, y = r2[i].records[k].observed_value;
            CHECK(((x == y) || (std::isnan(x) && std::isnan(y))));
            CHECK(r1[i].records[k].pass);
        }
    }
    for (auto* f : {check_prop5, check_prop6, check_cor8, check_prop10, check_prop12, check_lemma24, check_phi}) {
        auto recs = f(tr, spec.bg, 0.5);
        CHECK_FALSE(recs.empty());
        for (auto& c : recs) CHECK((c.pass || c.skipped));
    }
    // split data: the mixed norm stays zero
    for (auto& s : tr.snapshots) CHECK(s.stats.sup_mixed_norm < 1e-25);
}
