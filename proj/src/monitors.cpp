#include "smaflow/monitors.hpp"

#include "smaflow/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smaflow {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

CheckRecord make_record(const std::string& check, const std::string& name, double bound, double observed,
                        double tol, bool upper = true) {
    CheckRecord r;
    r.check = check;
    r.name = name;
    r.bound_value = bound;
    r.observed_value = observed;
    r.margin = upper ? bound + tol - observed : observed - (bound - tol);
    if (std::isnan(r.margin)) r.margin = upper && std::isinf(bound) ? inf : -inf;
    r.pass = r.margin >= 0;
    return r;
}

CheckRecord skipped(const std::string& check, const std::string& reason) {
    CheckRecord r;
    r.check = check;
    r.name = check;
    r.skipped = true;
    r.reason = reason;
    r.bound_value = r.observed_value = r.margin = nan;
    return r;
}

// beta/(g lambda) f_zzbar + 1/(h eta) f_wwbar
RealField apply_L(const RealField& f, const FlowState& s, const Background& bg, double beta) {
    RealField a = beta / (bg.g * s.lambda);
    RealField b = 1.0 / (bg.h * s.eta);
    return real(Spectrum(f).apply_factor_laplacians(a, b));
}

}  // namespace

RealField mixed_norm(const FlowState& s, const Background& bg, double beta) {
    RealField m2 = abs2(derivative(s.u, d::zw));
    RealField out(s.u.grid());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = beta * m2[i] / (bg.g[i] * s.lambda[i] * bg.h[i] * s.eta[i]);
    return out;
}

LegendreW legendre_W(const FlowState& s, const Background& bg) {
    ComplexField q = derivative(s.u, d::zwb);
    const TorusGrid& g = s.u.grid();
    LegendreW W{RealField(g), RealField(g), ComplexField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double lam = bg.g[i] * s.lambda[i], eta = bg.h[i] * s.eta[i];
        W.W11[i] = lam + std::norm(q[i]) / eta;
        W.W12[i] = q[i] / eta;
        W.W22[i] = 1.0 / eta;
    }
    return W;
}

double legendre_det_residual(const LegendreW& W, const FlowState& s, const Background& bg) {
    double r = 0;
    for (std::size_t i = 0; i < W.W11.size(); ++i) {
        const double want = bg.g[i] * s.lambda[i] / (bg.h[i] * s.eta[i]);
        const double det = W.W11[i] * W.W22[i] - std::norm(W.W12[i]);
        r = std::max(r, std::fabs(det - want) / std::fabs(want));
    }
    return r;
}

RealField legendre_quadratic(const LegendreW& W, cplx a, cplx b) {
    RealField out(W.W11.grid());
    const double aa = std::norm(a), bb = std::norm(b);
    const cplx ab = a * std::conj(b);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = aa * W.W11[i] + 2.0 * (ab * W.W12[i]).real() + bb * W.W22[i];
    return out;
}

std::vector<double> prop7_delta_grid(double beta) {
    std::vector<double> v;
    for (int k = 1; k <= 9; ++k) v.push_back(0.1 * k * beta);
    return v;
}

Prop7Result prop7_bound(double beta, double G_min, double G_max, double max_u0, double C,
                        const std::vector<double>& delta_grid) {
    if (!(beta > 0 && beta < 1)) throw ConfigError("prop7 bound needs beta in (0, 1)");
    Prop7Result best{-inf, 0};
    for (double delta : delta_grid) {
        if (!(delta > 0 && delta < beta)) continue;
        const double A = (1.0 + (1.0 + delta) * C) / (beta - delta);
        const double b1 = std::pow(delta * std::exp(-G_max), 1.0 / (1.0 - beta));
        const double gap = std::fabs(G_min) - (1.0 - beta);
        const double b2 = gap > 0 ? A / gap : inf;
        const double b = std::min(b1, b2) * std::exp(-A * max_u0);
        if (b > best.bound) best = {b, delta};
    }
    return best;
}

std::array<double, 5> lagrange_derivative_weights(const std::array<double, 5>& t, double t0) {
    std::array<double, 5> w{};
    for (int j = 0; j < 5; ++j) {
        double s = 0;
        for (int k = 0; k < 5; ++k) {
            if (k == j) continue;
            double p = 1.0 / (t[j] - t[k]);
            for (int m = 0; m < 5; ++m)
                if (m != j && m != k) p *= (t0 - t[m]) / (t[j] - t[m]);
            s += p;
        }
        w[j] = s;
    }
    return w;
}

MonitorSuite::MonitorSuite(const Background& bg, double beta, MonitorOptions opt, bool forcing_present)
    : bg_(bg), beta_(beta), opt_(std::move(opt)), forcing_(forcing_present) {
    for (const auto& c : opt_.enabled)
        if (std::find(all_checks().begin(), all_checks().end(), c) == all_checks().end())
            throw ConfigError("unknown monitor '" + c + "'");
    if (!opt_.negative_control.empty() &&
        std::find(all_checks().begin(), all_checks().end(), opt_.negative_control) == all_checks().end())
        throw ConfigError("unknown negative control '" + opt_.negative_control + "'");
    inv_ = background_invariants(bg_);
    cor8_ok_ = curvature(bg_).cor8_holds;
    constant_bg_ = is_constant_background(bg_);
}

std::vector<std::string> MonitorSuite::columns() const {
    std::vector<std::string> c;
    for (const auto& n : all_checks())
        if (on(n)) c.push_back(n);
    return c;
}

void MonitorSuite::corrupt_snapshot_state(FlowState& s) const {
    const std::string& nc = opt_.negative_control;
    const TorusGrid& g = s.u.grid();
    if (nc == "prop5") {
        s.du_dt = s.du_dt * 1.5 + 0.1;
    } else if (nc == "prop6") {
        s.u += max_u0_ + 1.0;
    } else if (nc == "prop7") {
        s.lambda *= 1e-4;
    } else if (nc == "cor8") {
        s.lambda += -0.1;
    } else if (nc == "prop10") {
        const double L1 = g.L[0], L3 = g.L[2];
        s.u += sample(g, [&](double x1, double, double x3, double) {
            return 0.5 * std::sin(2 * M_PI * x1 / L1) * std::sin(2 * M_PI * x3 / L3);
        });
    } else if (nc == "prop12") {
        s.lambda *= 2.0;
    }
}

void MonitorSuite::corrupt_neighbor_state(FlowState& s) const {
    if (opt_.negative_control == "lemma24") s.lambda += 1e-3;
    else if (opt_.negative_control == "phi") s.lambda *= 1.1;
}

const ComplexField& MonitorSuite::q_of(const WindowEntry& e) const {
    if (!e.q) e.q = derivative(e.state.u, d::zwb);
    return *e.q;
}

const RealField& MonitorSuite::nu2_of(const WindowEntry& e) const {
    if (!e.nu2) e.nu2 = mixed_norm(e.state, bg_, beta_);
    return *e.nu2;
}

void MonitorSuite::on_step(const FlowState& s_in, std::size_t step, double dt, bool snapshot) {
    if (!initialized_) {
        FieldStats G = stats(s_in.du_dt), l = stats(s_in.lambda);
        G_min_ = G.min;
        G_max_ = G.max;
        G_sup_ = G.sup_norm;
        max_u0_ = stats(s_in.u).max;
        min_lambda0_ = l.min;
        max_lambda0_ = l.max;
        sup0_ = stats(mixed_norm(s_in, bg_, beta_)).max;
        prev_max_ = G.max;
        prev_min_ = G.min;
        initialized_ = true;
    }

    const bool differenced = !forcing_ && ((on("lemma24") && constant_bg_) || on("phi"));
    if (differenced) {
        window_.push_back({step, dt, s_in, {}, {}});
        if (corrupt_step_ && *corrupt_step_ == step) corrupt_neighbor_state(window_.back().state);
        if (window_.size() > 5) window_.pop_front();
    }

    if (snapshot) {
        MonitorReport rep;
        rep.t = s_in.t;
        rep.step = step;
        const bool corrupt_here = snapshot_ordinal_ == opt_.corrupt_snapshot && !opt_.negative_control.empty();
        if (corrupt_here && (opt_.negative_control == "lemma24" || opt_.negative_control == "phi"))
            corrupt_step_ = step + 1;
        if (corrupt_here) {
            FlowState c = s_in;
            corrupt_snapshot_state(c);
            immediate_checks(c, dt, rep);
        } else {
            immediate_checks(s_in, dt, rep);
        }
        ++snapshot_ordinal_;
        reports_.push_back(std::move(rep));
        if (differenced) pending_.push_back({step, reports_.size() - 1});
    }

    if (differenced && window_.size() == 5 && window_.back().step - window_.front().step == 4) {
        const std::size_t center = window_[2].step;
        auto it = std::find_if(pending_.begin(), pending_.end(), [&](auto& p) { return p.first == center; });
        if (it != pending_.end()) {
            differenced_checks(reports_[it->second]);
            pending_.erase(it);
        }
    }
}

void MonitorSuite::on_finish(const FlowState&, std::size_t) {
    for (auto& [step, idx] : pending_) {
        auto& recs = reports_[idx].records;
        if (on("lemma24") && constant_bg_) recs.push_back(skipped("lemma24", "no 5-step window around snapshot"));
        if (on("phi") && reports_[idx].constants_used && reports_[idx].constants_used->prop11_available)
            recs.push_back(skipped("phi", "no 5-step window around snapshot"));
    }
    pending_.clear();
    window_.clear();
}

void MonitorSuite::immediate_checks(const FlowState& s, double dt, MonitorReport& rep) {
    FieldStats v = stats(s.du_dt), u = stats(s.u), l = stats(s.lambda);
    const double c0 = stats(1.0 / s.lambda + 1.0 / s.eta).max;
    if (c0 > c0_running_ || !constants_) {
        c0_running_ = std::max(c0_running_, c0);
        ConstantsOptions co;
        co.safety = opt_.safety;
        co.with_prop11 = beta_ > beta0();
        constants_ = std::make_shared<ConstantsReport>(constants(inv_, beta_, c0_running_, co));
    }
    rep.constants_used = constants_;
    const ConstantsReport& K = *constants_;
    const double dt2 = dt * dt;
    const std::string reduced = "forcing present: check applies to the reduced problem";

    if (on("prop5")) {
        const double tol = opt_.mono_rel_tol * (1.0 + v.sup_norm);
        rep.records.push_back(make_record("prop5", "prop5.max_du_dt", prev_max_, v.max, tol));
        rep.records.push_back(make_record("prop5", "prop5.min_du_dt", prev_min_, v.min, tol, false));
        const double tolG = opt_.mono_rel_tol * (1.0 + G_sup_) + dt2 * (1.0 + G_sup_);
        rep.records.push_back(make_record("prop5", "prop5.comparability_upper", G_max_, v.max, tolG));
        rep.records.push_back(make_record("prop5", "prop5.comparability_lower", G_min_, v.min, tolG, false));
        prev_max_ = v.max;
        prev_min_ = v.min;
    }
    if (on("prop6")) {
        if (forcing_) rep.records.push_back(skipped("prop6", reduced));
        else {
            const double sc = 1.0 + std::fabs(max_u0_);
            rep.records.push_back(
                make_record("prop6", "prop6.max_u", max_u0_, u.max, opt_.mono_rel_tol * sc + dt2 * sc));
        }
    }
    if (on("prop7")) {
        if (forcing_) rep.records.push_back(skipped("prop7", reduced));
        else if (!(beta_ < 1)) rep.records.push_back(skipped("prop7", "needs beta < 1"));
        else {
            Prop7Result p = prop7_bound(beta_, G_min_, G_max_, max_u0_, K.C, prop7_delta_grid(beta_));
            rep.records.push_back(make_record("prop7", "prop7.min_lambda", p.bound, l.min, 1e-12, false));
        }
    }
    if (on("cor8")) {
        if (forcing_) rep.records.push_back(skipped("cor8", reduced));
        else if (!cor8_ok_) rep.records.push_back(skipped("cor8", "curvature sign condition fails"));
        else {
            const double tol = opt_.mono_rel_tol * (1.0 + max_lambda0_) + dt2;
            rep.records.push_back(make_record("cor8", "cor8.min_lambda", min_lambda0_, l.min, tol, false));
        }
    }
    if (on("prop10")) {
        if (forcing_) rep.records.push_back(skipped("prop10", reduced));
        else {
            const double a = K.C0 * K.A_prop9;
            const double bound = std::max(1.0 + a, (sup0_ + a) * std::exp(K.c(11) * s.t));
            const double obs = stats(mixed_norm(s, bg_, beta_)).max;
            rep.records.push_back(
                make_record("prop10", "prop10.sup_mixed_norm", bound, obs, opt_.mono_rel_tol * (1.0 + bound)));
        }
    }
    if (on("prop12")) {
        if (forcing_) rep.records.push_back(skipped("prop12", reduced));
        else if (!K.prop11_available) rep.records.push_back(skipped("prop12", "below universal threshold"));
        else {
            const double e = (K.B * sup0_ + K.B * K.c(7) * K.C0 / beta_) * std::exp(K.c(14) * s.t);
            const double bound = max_lambda0_ * std::exp(e);
            rep.records.push_back(make_record("prop12", "prop12.max_lambda", bound, l.max,
                                              opt_.mono_rel_tol * (1.0 + bound) + dt2));
        }
    }
    if (forcing_) {
        if (on("lemma24")) rep.records.push_back(skipped("lemma24", reduced));
        if (on("phi")) rep.records.push_back(skipped("phi", reduced));
    } else {
        if (on("lemma24") && !constant_bg_)
            rep.records.push_back(skipped("lemma24", "needs constant g, h (local form)"));
        if (on("phi") && !K.prop11_available) rep.records.push_back(skipped("phi", "below universal threshold"));
    }
}

void MonitorSuite::differenced_checks(MonitorReport& rep) {
    std::array<double, 5> t{};
    for (int j = 0; j < 5; ++j) t[j] = window_[j].state.t;
    const auto w = lagrange_derivative_weights(t, t[2]);
    const WindowEntry& c = window_[2];

    if (on("lemma24") && constant_bg_) {
        std::array<LegendreW, 5> W;
        for (int j = 0; j < 5; ++j) {
            const ComplexField& q = q_of(window_[j]);
            const FlowState& s = window_[j].state;
            const TorusGrid& g = s.u.grid();
            W[j] = LegendreW{RealField(g), RealField(g), ComplexField(g)};
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double lam = bg_.g[i] * s.lambda[i], eta = bg_.h[i] * s.eta[i];
                W[j].W11[i] = lam + std::norm(q[i]) / eta;
                W[j].W12[i] = q[i] / eta;
                W[j].W22[i] = 1.0 / eta;
            }
        }
        double worst = -inf, scale = 0;
        for (const auto& v : opt_.sample_vectors) {
            std::array<RealField, 5> Wv;
            for (int j = 0; j < 5; ++j) Wv[j] = legendre_quadratic(W[j], v[0], v[1]);
            RealField LW = apply_L(Wv[2], c.state, bg_, beta_);
            for (std::size_t i = 0; i < LW.size(); ++i) {
                double dt = 0;
                for (int j = 0; j < 5; ++j) dt += w[j] * (Wv[j][i] - Wv[2][i]);
                worst = std::max(worst, dt - LW[i]);
            }
            scale = std::max(scale, stats(Wv[2]).sup_norm);
        }
        rep.records.push_back(make_record("lemma24", "lemma24.HW", 0.0, worst, opt_.w_tol * (1.0 + scale)));
        rep.records.push_back(
            make_record("lemma24", "lemma24.det", 0.0, legendre_det_residual(W[2], c.state, bg_), 1e-12));
    }

    const ConstantsReport* K = rep.constants_used.get();
    if (on("phi") && K && K->prop11_available) {
        const double A = K->A_prop11, B = K->B;
        std::array<RealField, 5> Phi;
        for (int j = 0; j < 5; ++j) {
            const FlowState& s = window_[j].state;
            const RealField& nu2 = nu2_of(window_[j]);
            RealField p(s.u.grid());
            for (std::size_t i = 0; i < p.size(); ++i)
                p[i] = std::log(s.lambda[i]) + A * (1.0 / s.lambda[i] + 1.0 / s.eta[i]) + B * nu2[i];
            Phi[j] = std::move(p);
        }
        RealField LPhi = apply_L(Phi[2], c.state, bg_, beta_);
        const RealField& nu2 = nu2_of(c);
        const double tol = opt_.w_tol * (1.0 + stats(Phi[2]).sup_norm + stats(LPhi).sup_norm);
        double worst = -inf;
        RealField HPhi(LPhi.grid());
        for (std::size_t i = 0; i < HPhi.size(); ++i) {
            double dt = 0;
            for (int j = 0; j < 5; ++j) dt += w[j] * (Phi[j][i] - Phi[2][i]);
            HPhi[i] = dt - LPhi[i];
            const double nu = std::sqrt(nu2[i]);
            const double bound = K->c(12) * B + K->c(13) * A + B * K->c(3) * nu + B * K->c(6) * nu2[i];
            worst = std::max(worst, HPhi[i] - bound);
        }
        rep.records.push_back(make_record("phi", "phi.pointwise", 0.0, worst, tol));
        const std::size_t im = stats(Phi[2]).argmax;
        rep.records.push_back(make_record("phi", "phi.argmax", K->c(14) * Phi[2][im], HPhi[im], tol));
    }
}

bool MonitorSuite::all_pass() const {
    for (const auto& r : reports_)
        for (const auto& c : r.records)
            if (!c.skipped && !c.pass) return false;
    return true;
}

std::pair<int, double> MonitorSuite::column_value(const MonitorReport& r, const std::string& check) const {
    int pass = -1;
    double margin = inf;
    for (const auto& c : r.records) {
        if (c.check != check || c.skipped) continue;
        pass = (pass == -1 ? 1 : pass) & (c.pass ? 1 : 0);
        margin = std::min(margin, c.margin);
    }
    return {pass, pass == -1 ? nan : margin};
}

nlohmann::json MonitorSuite::summary() const {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json j = nlohmann::json::object();
    for (const auto& check : columns()) {
        std::size_t evaluated = 0, failures = 0;
        double min_margin = inf;
        nlohmann::json first_failure = nullptr;
        std::string reason;
        for (const auto& r : reports_)
            for (const auto& c : r.records) {
                if (c.check != check) continue;
                if (c.skipped) {
                    if (reason.empty()) reason = c.reason;
                    continue;
                }
                ++evaluated;
                min_margin = std::min(min_margin, c.margin);
                if (!c.pass) {
                    if (failures == 0)
                        first_failure = {{"t", r.t}, {"step", r.step}, {"record", c.name},
                                         {"bound", num(c.bound_value)}, {"observed", num(c.observed_value)}};
                    ++failures;
                }
            }
        nlohmann::json e;
        e["evaluated"] = evaluated;
        e["failures"] = failures;
        e["pass"] = evaluated == 0 ? nlohmann::json(nullptr) : nlohmann::json(failures == 0);
        e["min_margin"] = num(min_margin);
        e["first_failure"] = first_failure;
        if (evaluated == 0) e["skipped_reason"] = reason;
        j[check] = e;
    }
    return j;
}

std::vector<MonitorReport> evaluate_trajectory(const Trajectory& traj, const Background& bg, double beta,
                                               const MonitorOptions& opt) {
    MonitorSuite suite(bg, beta, opt);
    std::size_t last = 0;
    for (const auto& sn : traj.snapshots) {
        if (!sn.state) throw std::invalid_argument("trajectory was recorded without states");
        suite.on_step(*sn.state, sn.step, sn.stats.dt, true);
        last = sn.step;
    }
    if (!traj.snapshots.empty()) suite.on_finish(*traj.snapshots.back().state, last);
    return suite.reports();
}

namespace {

std::vector<CheckRecord> single(const Trajectory& traj, const Background& bg, double beta, const char* name) {
    MonitorOptions opt;
    opt.enabled = {name};
    std::vector<CheckRecord> out;
    for (auto& r : evaluate_trajectory(traj, bg, beta, opt))
        for (auto& c : r.records) out.push_back(c);
    return out;
}

}  // namespace

std::vector<CheckRecord> check_prop5(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "prop5"); }
std::vector<CheckRecord> check_prop6(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "prop6"); }
std::vector<CheckRecord> check_cor8(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "cor8"); }
std::vector<CheckRecord> check_prop10(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "prop10"); }
std::vector<CheckRecord> check_prop12(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "prop12"); }
std::vector<CheckRecord> check_lemma24(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "lemma24"); }
std::vector<CheckRecord> check_phi(const Trajectory& t, const Background& bg, double b) { return single(t, bg, b, "phi"); }

C0Series c0_series(const Trajectory& traj) {
    C0Series s;
    double m = 0;
    for (const auto& sn : traj.snapshots) {
        s.t.push_back(sn.stats.t);
        s.c0.push_back(sn.stats.c0);
        m = std::max(m, sn.stats.c0);
        s.running_max.push_back(m);
    }
    return s;
}

}  // namespace smaflow
