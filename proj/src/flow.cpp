#include "smaflow/flow.hpp"
#include "smaflow/kernels.hpp"
#include "smaflow/monitors.hpp"
#include "smaflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace smaflow {

namespace {

bool det() { return exec::deterministic(); }

double field_min(const RealField& f) {
    return det() ? kernels::min_serial(f.data(), f.size()) : kernels::min_omp(f.data(), f.size());
}

RealField speed(const RealField& lam, const RealField& eta, double beta, const RealField* f) {
    RealField out(lam.grid());
    if (det())
        kernels::speed_serial(lam.size(), beta, lam.data(), eta.data(), f ? f->data() : nullptr, out.data());
    else
        kernels::speed_omp(lam.size(), beta, lam.data(), eta.data(), f ? f->data() : nullptr, out.data());
    return out;
}

RealField axpy(double a, const RealField& x, const RealField& y) {
    RealField out(x.grid());
    if (det())
        kernels::axpy_serial(x.size(), a, x.data(), y.data(), out.data());
    else
        kernels::axpy_omp(x.size(), a, x.data(), y.data(), out.data());
    return out;
}

double grid_integral(const RealField& f) { return mean(f); }

}  // namespace

void validate(const FlowParams& p) {
    if (!(p.beta > 0 && p.beta <= 1)) throw ConfigError("beta must lie in (0, 1]");
    if (!(p.cfl > 0 && p.cfl <= 1)) throw ConfigError("cfl must lie in (0, 1]");
    if (!(p.dt_max > 0)) throw ConfigError("dt_max must be positive");
    if (!(p.t_end >= 0)) throw ConfigError("t_end must be nonnegative");
    if (!(p.steady_tol > 0)) throw ConfigError("steady_tol must be positive");
    if (!(p.admissibility_floor > 0)) throw ConfigError("admissibility_floor must be positive");
    if (p.snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
}

ExponentNormalization normalize_exponents(double alpha, double beta, const RealField& f) {
    if (!(alpha > 0)) throw ConfigError("alpha must be positive");
    if (!(beta > 0) || beta > alpha) throw ConfigError("out of range: need 0 < beta <= alpha");
    return {beta / alpha, alpha, f / alpha};
}

RealField normalize_compat_plus(const Background& bg, const RealField& f_plus, double beta) {
    const double b = beta * std::log(grid_integral(bg.g) / grid_integral(bg.g * exp(f_plus / beta)));
    return f_plus + b;
}

RealField normalize_compat_minus(const Background& bg, const RealField& f_minus) {
    const double b = std::log(grid_integral(bg.h * exp(-f_minus)) / grid_integral(bg.h));
    return f_minus + b;
}

GaugeResult gauge_out_f(const Background& bg, const RealField& f_plus, const RealField& f_minus, double beta) {
    if (bg.kind != BackgroundKind::kahler_product)
        throw ConfigError("unsupported: the gauge step is only available on Kahler products");
    if (!(beta > 0 && beta <= 1)) throw ConfigError("beta must lie in (0, 1]");
    GaugeResult r;
    // both integrands are monotone in b, so the roots are available in closed form
    const double Ig = grid_integral(bg.g), Ih = grid_integral(bg.h);
    const double Igf = grid_integral(bg.g * exp(f_plus / beta));
    const double Ihf = grid_integral(bg.h * exp(-f_minus));
    if (!(Igf > 0) || !(Ihf > 0) || !std::isfinite(Igf) || !std::isfinite(Ihf))
        throw NumericalFailure("gauge: normalization integrals are not finite and positive");
    r.b_plus = beta * std::log(Ig / Igf);
    r.b_minus = std::log(Ihf / Ih);
    r.mu_g = bg.g * exp((f_plus + r.b_plus) / beta);
    r.mu_h = bg.h * exp(-(f_minus + r.b_minus));
    RealField up = poisson_solve_factor(r.mu_g - bg.g, Factor::z);
    RealField um = poisson_solve_factor(bg.h - r.mu_h, Factor::w);
    r.u_inf = up + um;
    return r;
}

RealField shift_min_zero(const RealField& u0) { return u0 - stats(u0).min; }

LambdaEta lambda_eta(const RealField& u, const Background& bg, double floor, double t) {
    RealField uzz(u.grid()), uww(u.grid());
    factor_laplacians(u, uzz, uww);
    LambdaEta le{RealField(u.grid()), RealField(u.grid())};
    if (det())
        kernels::lambda_eta_serial(u.size(), uzz.data(), uww.data(), bg.g.data(), bg.h.data(), le.lambda.data(),
                                   le.eta.data());
    else
        kernels::lambda_eta_omp(u.size(), uzz.data(), uww.data(), bg.g.data(), bg.h.data(), le.lambda.data(),
                                le.eta.data());
    const double ml = field_min(le.lambda), me = field_min(le.eta);
    if (!(ml > floor) || !(me > floor))
        throw AdmissibilityLost("admissibility lost at t = " + std::to_string(t) + ": min lambda = " +
                                    std::to_string(ml) + ", min eta = " + std::to_string(me),
                                t, ml, me);
    return le;
}

RealField rhs(const RealField& lambda, const RealField& eta, double beta, const RealField* forcing) {
    return speed(lambda, eta, beta, forcing);
}

RealField rhs(const FlowState& s, double beta, const RealField* forcing) {
    return speed(s.lambda, s.eta, beta, forcing);
}

FlowState make_state(RealField u, const Background& bg, double beta, double t, const RealField* forcing,
                     double floor) {
    LambdaEta le = lambda_eta(u, bg, floor, t);
    FlowState s;
    s.du_dt = speed(le.lambda, le.eta, beta, forcing);
    s.u = std::move(u);
    s.t = t;
    s.lambda = std::move(le.lambda);
    s.eta = std::move(le.eta);
    return s;
}

double spectral_radius(const FlowState& s, const Background& bg, double beta) {
    const TorusGrid& G = s.u.grid();
    const double pi = std::numbers::pi;
    auto sq = [](double x) { return x * x; };
    const double kz = 0.25 * (sq(pi * G.n[0] / G.L[0]) + sq(pi * G.n[1] / G.L[1]));
    const double kw = 0.25 * (sq(pi * G.n[2] / G.L[2]) + sq(pi * G.n[3] / G.L[3]));
    const std::size_t n = s.u.size();
    const double az = det() ? kernels::max_ratio_serial(n, beta, bg.g.data(), s.lambda.data())
                            : kernels::max_ratio_omp(n, beta, bg.g.data(), s.lambda.data());
    const double aw = det() ? kernels::max_ratio_serial(n, 1.0, bg.h.data(), s.eta.data())
                            : kernels::max_ratio_omp(n, 1.0, bg.h.data(), s.eta.data());
    return az * kz + aw * kw;
}

double dt_adaptive(const FlowState& s, const Background& bg, double beta, double cfl, double dt_max) {
    return std::min(dt_max, cfl / spectral_radius(s, bg, beta));
}

FlowState step_rk4(const FlowState& s, const Background& bg, double beta, double dt, const RealField* forcing,
                   double floor) {
    const RealField& k1 = s.du_dt;
    auto stage = [&](const RealField& u, double tt) {
        LambdaEta le = lambda_eta(u, bg, floor, tt);
        return speed(le.lambda, le.eta, beta, forcing);
    };
    RealField k2 = stage(axpy(0.5 * dt, k1, s.u), s.t + 0.5 * dt);
    RealField k3 = stage(axpy(0.5 * dt, k2, s.u), s.t + 0.5 * dt);
    RealField k4 = stage(axpy(dt, k3, s.u), s.t + dt);
    RealField un(s.u.grid());
    if (det())
        kernels::rk4_combine_serial(un.size(), dt, s.u.data(), k1.data(), k2.data(), k3.data(), k4.data(),
                                    un.data());
    else
        kernels::rk4_combine_omp(un.size(), dt, s.u.data(), k1.data(), k2.data(), k3.data(), k4.data(), un.data());
    return make_state(std::move(un), bg, beta, s.t + dt, forcing, floor);
}

StepOutcome advance(const FlowState& s, const Background& bg, double beta, double dt, const RealField* forcing,
                    double floor, int max_retries) {
    for (int attempt = 0;; ++attempt) {
        try {
            return {step_rk4(s, bg, beta, dt, forcing, floor), dt, attempt};
        } catch (const AdmissibilityLost& e) {
            if (attempt >= max_retries)
                throw AdmissibilityLost(std::string(e.what()) + " (after " + std::to_string(max_retries) +
                                            " step rejections)",
                                        e.t, e.min_lambda, e.min_eta);
            dt *= 0.5;
        }
    }
}

std::string to_string(Termination t) {
    switch (t) {
        case Termination::t_end: return "t_end";
        case Termination::steady: return "steady";
        case Termination::failure: return "failure";
        case Termination::max_steps: return "max_steps";
    }
    return "unknown";
}

SnapshotStats snapshot_stats(const FlowState& s, const Background& bg, double beta, double dt) {
    SnapshotStats st;
    st.t = s.t;
    st.dt = dt;
    FieldStats v = stats(s.du_dt), u = stats(s.u), l = stats(s.lambda), e = stats(s.eta);
    st.max_du_dt = v.max;
    st.min_du_dt = v.min;
    st.osc_u = u.max - u.min;
    st.max_u = u.max;
    st.min_u = u.min;
    st.min_lambda = l.min;
    st.max_lambda = l.max;
    st.min_eta = e.min;
    st.max_eta = e.max;
    st.c0 = stats(1.0 / s.lambda + 1.0 / s.eta).max;
    st.sup_mixed_norm = stats(mixed_norm(s, bg, beta)).max;
    st.steady_residual = v.max - v.min;
    return st;
}

Trajectory run(const RunSpec& spec) {
    const FlowParams& P = spec.params;
    validate(P);
    const RealField* forcing = spec.forcing ? &*spec.forcing : nullptr;
    Trajectory tr;
    FlowState s = make_state(spec.u0, spec.bg, P.beta, 0.0, forcing, P.admissibility_floor);

    std::vector<double> sync = spec.sync_times;
    std::sort(sync.begin(), sync.end());
    std::size_t next_sync = 0;
    while (next_sync < sync.size() && sync[next_sync] <= 0) ++next_sync;

    auto record = [&](const FlowState& st, std::size_t step, double dt) {
        Snapshot sn;
        sn.step = step;
        sn.stats = snapshot_stats(st, spec.bg, P.beta, dt);
        if (spec.keep_states) sn.state = st;
        tr.snapshots.push_back(std::move(sn));
    };

    std::size_t step = 0;
    record(s, 0, 0.0);
    for (auto* o : spec.observers) o->on_step(s, 0, 0.0, true);

    auto is_steady = [&](const FlowState& st) {
        FieldStats v = stats(st.du_dt);
        return v.max - v.min < P.steady_tol;
    };

    tr.termination = Termination::t_end;
    if (spec.stop_on_steady && is_steady(s)) {
        tr.termination = Termination::steady;
    } else {
        while (s.t < P.t_end) {
            if (step >= P.max_steps) {
                tr.termination = Termination::max_steps;
                break;
            }
            double dt;
            if (spec.dt_sequence) {
                if (step >= spec.dt_sequence->size()) break;
                dt = (*spec.dt_sequence)[step];
            } else {
                dt = dt_adaptive(s, spec.bg, P.beta, P.cfl, P.dt_max);
            }
            double target = P.t_end;
            if (next_sync < sync.size() && sync[next_sync] < target) target = sync[next_sync];
            bool landing = false;
            if (!spec.dt_sequence && s.t + dt * (1.0 + 1e-3) >= target) {
                dt = target - s.t;
                landing = true;
            }
            StepOutcome out;
            try {
                out = advance(s, spec.bg, P.beta, dt, forcing, P.admissibility_floor, P.max_retries);
            } catch (const AdmissibilityLost& e) {
                tr.termination = Termination::failure;
                tr.message = e.what();
                break;
            }
            s = std::move(out.state);
            if (landing && out.retries == 0) s.t = target;
            if (P.spectral_filter) s = make_state(spectral_filter(s.u), spec.bg, P.beta, s.t, forcing,
                                                  P.admissibility_floor);
            ++step;
            tr.dts.push_back(out.dt);
            bool at_sync = false;
            while (next_sync < sync.size() && sync[next_sync] <= s.t) {
                at_sync = true;
                ++next_sync;
            }
            const bool steady = spec.stop_on_steady && is_steady(s);
            const bool last = s.t >= P.t_end || steady;
            const bool snap = step % P.snapshot_stride == 0 || at_sync || last;
            if (snap) record(s, step, out.dt);
            for (auto* o : spec.observers) o->on_step(s, step, out.dt, snap);
            if (steady) {
                tr.termination = Termination::steady;
                break;
            }
        }
    }
    tr.steps = step;
    for (auto* o : spec.observers) o->on_finish(s, step);
    tr.final_state = std::move(s);
    return tr;
}

}  // namespace smaflow
