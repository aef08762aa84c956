#include "smaflow/flow.hpp"
#include "smaflow/kernels.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

using namespace smaflow;
namespace k = smaflow::kernels;

namespace {

template <class F>
double best_ms(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a[i] - b[i]));
        s = std::max(s, std::abs(a[i]));
    }
    return s > 0 ? d / s : d;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernels"};
    std::size_t n = 16;
    int reps = 20;
    app.add_option("--n", n, "points per direction");
    app.add_option("--reps", reps, "repetitions, best time is reported");
    CLI11_PARSE(app, argc, argv);

    const std::size_t N = n * n * n * n;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-0.3, 0.3), P(0.5, 1.5);
    std::vector<double> uzz(N), uww(N), g(N), h(N), lam(N), eta(N), lam2(N), eta2(N), sp(N), sp2(N), f(N);
    std::vector<double> k1(N), k2(N), k3(N), k4(N), out(N), out2(N);
    for (std::size_t i = 0; i < N; ++i) {
        uzz[i] = U(rng);
        uww[i] = U(rng);
        g[i] = P(rng);
        h[i] = P(rng);
        f[i] = U(rng);
        k1[i] = U(rng);
        k2[i] = U(rng);
        k3[i] = U(rng);
        k4[i] = U(rng);
    }

    std::printf("n = %zu (%zu points), threads = %d, reps = %d\n", n, N, omp_get_max_threads(), reps);
    std::printf("%-12s %12s %12s %9s %12s\n", "kernel", "serial ms", "omp ms", "speedup", "max rel diff");
    bool ok = true;
    auto row = [&](const char* name, double ts, double to, double diff) {
        std::printf("%-12s %12.4f %12.4f %9.2f %12.3g\n", name, ts, to, ts / to, diff);
        if (!(diff <= 1e-13)) ok = false;
    };

    double ts = best_ms(reps, [&] { k::lambda_eta_serial(N, uzz.data(), uww.data(), g.data(), h.data(), lam.data(), eta.data()); });
    double to = best_ms(reps, [&] { k::lambda_eta_omp(N, uzz.data(), uww.data(), g.data(), h.data(), lam2.data(), eta2.data()); });
    row("lambda_eta", ts, to, std::max(max_rel(lam, lam2), max_rel(eta, eta2)));

    ts = best_ms(reps, [&] { k::speed_serial(N, 0.5, lam.data(), eta.data(), f.data(), sp.data()); });
    to = best_ms(reps, [&] { k::speed_omp(N, 0.5, lam.data(), eta.data(), f.data(), sp2.data()); });
    row("speed", ts, to, max_rel(sp, sp2));

    ts = best_ms(reps, [&] { k::rk4_combine_serial(N, 1e-3, uzz.data(), k1.data(), k2.data(), k3.data(), k4.data(), out.data()); });
    to = best_ms(reps, [&] { k::rk4_combine_omp(N, 1e-3, uzz.data(), k1.data(), k2.data(), k3.data(), k4.data(), out2.data()); });
    row("rk4_combine", ts, to, max_rel(out, out2));

    double s1 = 0, s2 = 0;
    ts = best_ms(reps, [&] { s1 = k::sum_serial(sp.data(), N); });
    to = best_ms(reps, [&] { s2 = k::sum_omp(sp.data(), N); });
    row("sum", ts, to, std::abs(s1 - s2) / std::max(1.0, std::abs(s1)));

    double m1 = 0, m2 = 0;
    ts = best_ms(reps, [&] { m1 = k::max_ratio_serial(N, 0.5, g.data(), lam.data()); });
    to = best_ms(reps, [&] { m2 = k::max_ratio_omp(N, 0.5, g.data(), lam.data()); });
    row("max_ratio", ts, to, std::abs(m1 - m2) / std::abs(m1));

    // one full RK4 step in each mode
    auto grid = make_grid({n, n, n, n}, {1, 1, 1, 1});
    Background bg = flat_background(grid);
    RealField u0 = sample(grid, [](double x1, double x2, double x3, double x4) {
        return 0.02 * (std::sin(2 * M_PI * x1) + std::cos(2 * M_PI * (x2 + x3)) + std::sin(2 * M_PI * x4));
    });
    FlowState s = make_state(u0, bg, 0.5);
    FlowState a, b;
    exec::set_deterministic(true);
    ts = best_ms(reps, [&] { a = step_rk4(s, bg, 0.5, 1e-4); });
    exec::set_deterministic(false);
    to = best_ms(reps, [&] { b = step_rk4(s, bg, 0.5, 1e-4); });
    exec::set_deterministic(true);
    std::vector<double> ua(a.u.begin(), a.u.end()), ub(b.u.begin(), b.u.end());
    row("step_rk4", ts, to, max_rel(ua, ub));

    std::printf("%s\n", ok ? "agreement ok" : "AGREEMENT FAILURE");
    return ok ? 0 : 1;
}
