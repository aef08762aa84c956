#include "smaflow/experiments.hpp"
#include "smaflow/field_io.hpp"
#include "smaflow/oracle2d.hpp"
#include "smaflow/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace smaflow {

namespace fs = std::filesystem;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

nlohmann::json jnum(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

struct Setup {
    TorusGrid grid;
    Background bg;
    double beta = 1;
    std::optional<Forcing> parts;
    std::optional<RealField> forcing;
    RealField u0;
};

Setup setup(const ExperimentConfig& c) {
    Setup s;
    s.grid = build_grid(c);
    s.bg = build_background(c, s.grid);
    s.beta = c.flow.beta / c.alpha;
    s.parts = build_forcing(c, s.grid, s.bg);
    if (s.parts) {
        if (s.bg.kind != BackgroundKind::kahler_product)
            throw ConfigError("forcing is only supported on Kahler product backgrounds");
        s.forcing = s.parts->f_plus + s.parts->f_minus;
    }
    s.u0 = build_initial(c, s.grid, s.bg);
    return s;
}

RunSpec base_spec(const ExperimentConfig& c, const Setup& s) {
    RunSpec rs;
    rs.params = c.flow;
    rs.params.beta = s.beta;
    rs.bg = s.bg;
    rs.u0 = s.u0;
    rs.forcing = s.forcing;
    return rs;
}

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw FieldIoError("cannot write " + p.string());
    f << text;
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

nlohmann::json stats_json(const SnapshotStats& s) {
    return {{"t", s.t},
            {"max_du_dt", s.max_du_dt},
            {"min_du_dt", s.min_du_dt},
            {"osc_u", s.osc_u},
            {"min_lambda", s.min_lambda},
            {"max_lambda", s.max_lambda},
            {"min_eta", s.min_eta},
            {"max_eta", s.max_eta},
            {"c0", s.c0},
            {"sup_mixed_norm", s.sup_mixed_norm},
            {"steady_residual", s.steady_residual}};
}

class FieldDumper : public RunObserver {
public:
    FieldDumper(fs::path dir, std::size_t stride) : dir_(std::move(dir)), stride_(stride) {}
    void on_step(const FlowState& s, std::size_t step, double, bool snapshot) override {
        if (snapshot && ordinal_++ % stride_ == 0) dump(s, step);
    }
    void on_finish(const FlowState& s, std::size_t step) override {
        if (!dumped_ || last_ != step) dump(s, step);
    }
    void dump(const FlowState& s, std::size_t step) {
        dumped_ = true;
        last_ = step;
        fs::create_directories(dir_);
        char name[64];
        std::snprintf(name, sizeof name, "u_%08zu.bin", step);
        write_field((dir_ / name).string(), s.u, {{"t", s.t}, {"step", step}, {"quantity", "u"}});
    }

private:
    fs::path dir_;
    std::size_t stride_, ordinal_ = 0, last_ = 0;
    bool dumped_ = false;
};

// sup|u_zw| and sup of the Kahler-metric error against a target
class MetricTracker : public RunObserver {
public:
    MetricTracker(const Background& bg, RealField mu_g, RealField mu_h)
        : bg_(bg), mu_g_(std::move(mu_g)), mu_h_(std::move(mu_h)) {}
    void on_step(const FlowState& s, std::size_t, double, bool snapshot) override {
        if (!snapshot) return;
        double e = 0;
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            e = std::max(e, std::abs(bg_.g[i] * s.lambda[i] - mu_g_[i]));
            e = std::max(e, std::abs(bg_.h[i] * s.eta[i] - mu_h_[i]));
        }
        t.push_back(s.t);
        error.push_back(e);
        split.push_back(sup_norm(derivative(s.u, d::zw)));
        du_dt_sup.push_back(stats(s.du_dt).sup_norm);
    }
    std::vector<double> t, error, split, du_dt_sup;

private:
    const Background& bg_;
    RealField mu_g_, mu_h_;
};

class StateRecorder : public RunObserver {
public:
    explicit StateRecorder(std::vector<double> times) : times_(std::move(times)) {}
    void on_step(const FlowState& s, std::size_t, double, bool) override {
        c0_max = std::max(c0_max, stats(1.0 / s.lambda + 1.0 / s.eta).max);
        if (first) {
            c0_initial = c0_max;
            first = false;
        }
        for (double tt : times_)
            if (std::abs(s.t - tt) <= 1e-12 * std::max(1.0, tt)) states.emplace(tt, s.u);
    }
    std::map<double, RealField> states;
    double c0_initial = 0, c0_max = 0;
    bool first = true;

private:
    std::vector<double> times_;
};

class OracleTracker : public RunObserver {
public:
    explicit OracleTracker(SplitOracle& o) : o_(o) {}
    void on_step(const FlowState& s, std::size_t step, double dt, bool snapshot) override {
        if (step > 0) o_.advance(dt);
        if (snapshot) {
            t.push_back(s.t);
            distance.push_back(o_.distance(s.u));
        }
    }
    std::vector<double> t, distance;

private:
    SplitOracle& o_;
};

std::string render_csv(const Trajectory& tr, const MonitorSuite& ms) {
    const auto checks = ms.columns();
    std::ostringstream out;
    const auto cols = timeseries_columns(checks);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    const auto& reps = ms.reports();
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
        const SnapshotStats& s = tr.snapshots[i].stats;
        for (double x : {s.t, s.dt, s.max_du_dt, s.min_du_dt, s.osc_u, s.min_lambda, s.max_lambda, s.min_eta,
                         s.max_eta, s.c0, s.sup_mixed_norm, s.steady_residual})
            out << num(x) << ",";
        for (const auto& c : checks) {
            auto [pass, margin] = i < reps.size() ? ms.column_value(reps[i], c) : std::pair<int, double>{-1, NAN};
            out << pass << "," << num(margin) << ",";
        }
        out.seekp(-1, std::ios_base::cur);
        out << "\n";
    }
    return out.str();
}

fs::path out_dir(const ExperimentConfig& c) { return fs::path(c.output.directory); }

}  // namespace

std::vector<std::string> timeseries_columns(const std::vector<std::string>& checks) {
    std::vector<std::string> c{"t",       "dt",      "max_du_dt", "min_du_dt", "osc_u",          "min_lambda",
                               "max_lambda", "min_eta", "max_eta", "c0",       "sup_mixed_norm", "steady_residual"};
    for (const auto& k : checks) {
        c.push_back(k + "_pass");
        c.push_back(k + "_margin");
    }
    return c;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    f.points = x.size();
    if (x.size() < 2) return f;
    const double n = double(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    f.slope = sxx > 0 ? sxy / sxx : 0;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

std::vector<double> sample_times(double dt, double t_end) {
    std::vector<double> out;
    if (!(dt > 0)) return out;
    for (std::size_t k = 1;; ++k) {
        double t = double(k) * dt;
        if (t > t_end * (1 + 1e-12)) break;
        out.push_back(std::min(t, t_end));
    }
    if (out.empty() || out.back() < t_end) out.push_back(t_end);
    return out;
}

CommandResult guarded(const std::function<CommandResult()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        return {kExitConfig, {{"error", "config"}, {"message", e.what()}}, e.what()};
    } catch (const FieldIoError& e) {
        return {kExitConfig, {{"error", "field_io"}, {"message", e.what()}}, e.what()};
    } catch (const IncompatibleData& e) {
        return {kExitConfig, {{"error", "incompatible_data"}, {"message", e.what()}}, e.what()};
    } catch (const NumericalFailure& e) {
        return {kExitNumerical, {{"error", "numerical"}, {"message", e.what()}}, e.what()};
    }
}

CommandResult cmd_flow_run(const ExperimentConfig& cfg, bool write) {
    Setup S = setup(cfg);
    MonitorSuite ms(S.bg, S.beta, cfg.monitors, S.forcing.has_value());
    RunSpec rs = base_spec(cfg, S);
    rs.sync_times = sample_times(cfg.output.sample_interval, cfg.flow.t_end);
    rs.observers.push_back(&ms);
    std::optional<FieldDumper> dumper;
    if (write && cfg.output.field_dump_stride > 0) {
        dumper.emplace(out_dir(cfg) / "fields", cfg.output.field_dump_stride);
        rs.observers.push_back(&*dumper);
    }
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory tr = run(rs);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CommandResult res;
    if (tr.termination == Termination::failure) {
        res.exit_code = kExitNumerical;
        res.message = tr.message;
        if (write) {
            fs::create_directories(out_dir(cfg));
            write_field((out_dir(cfg) / "u_last_admissible.bin").string(), tr.final_state.u,
                        {{"t", tr.final_state.t}, {"quantity", "u"}});
        }
    } else if (!ms.all_pass()) {
        res.exit_code = kExitViolation;
        res.message = "monitor violation";
    } else {
        res.message = "ok";
    }

    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "run";
    j["config"] = cfg.source;
    j["beta"] = S.beta;
    j["termination"] = to_string(tr.termination);
    j["message"] = tr.message;
    j["steps"] = tr.steps;
    j["snapshots"] = tr.snapshots.size();
    j["seconds"] = seconds;
    j["final"] = tr.snapshots.empty() ? nlohmann::json(nullptr) : stats_json(tr.snapshots.back().stats);
    j["monitors"] = ms.summary();
    j["monitors_pass"] = ms.all_pass();
    if (!ms.reports().empty() && ms.reports().back().constants_used)
        j["constants"] = ms.reports().back().constants_used->to_json();
    j["negative_control"] = cfg.monitors.negative_control.empty() ? nlohmann::json(nullptr)
                                                                   : nlohmann::json(cfg.monitors.negative_control);
    j["exit_code"] = res.exit_code;
    res.report = j;

    if (write) {
        write_text(out_dir(cfg) / "timeseries.csv", render_csv(tr, ms));
        write_json(out_dir(cfg) / "summary.json", j);
    }
    return res;
}

CommandResult cmd_kahler_converge(const ExperimentConfig& cfg, bool write) {
    Setup S = setup(cfg);
    if (S.bg.kind != BackgroundKind::kahler_product)
        throw ConfigError("kahler-converge needs a Kahler product background");
    if (S.parts && !cfg.forcing.normalize_compat6)
        throw ConfigError("kahler-converge needs [forcing] normalize_compat6 = true");
    Forcing f = S.parts ? *S.parts : Forcing{RealField(S.grid), RealField(S.grid)};
    GaugeResult gr = gauge_out_f(S.bg, f.f_plus, f.f_minus, S.beta);
    // steady metric assembled from the Poisson solution
    RealField mu_g = S.bg.g + real(derivative(gr.u_inf, d::zzb));
    RealField mu_h = S.bg.h - real(derivative(gr.u_inf, d::wwb));
    const double poisson_vs_closed =
        std::max(sup_norm(mu_g - gr.mu_g), sup_norm(mu_h - gr.mu_h));

    RunSpec rs = base_spec(cfg, S);
    rs.params.snapshot_stride = std::numeric_limits<std::size_t>::max();
    rs.sync_times = sample_times(cfg.kahler.sample_interval, cfg.flow.t_end);
    MetricTracker mt(S.bg, mu_g, mu_h);
    rs.observers.push_back(&mt);
    Trajectory tr = run(rs);
    if (tr.termination == Termination::failure) throw NumericalFailure(tr.message);

    std::vector<double> ft, fy;
    for (std::size_t i = 0; i < mt.t.size(); ++i)
        if (mt.error[i] <= cfg.kahler.fit_upper && mt.error[i] >= cfg.kahler.fit_lower) {
            ft.push_back(mt.t[i]);
            fy.push_back(std::log(mt.error[i]));
        }
    LinearFit fit = linear_fit(ft, fy);
    const double final_error = mt.error.empty() ? inf : mt.error.back();
    const double rate = -fit.slope;

    std::vector<std::string> failures;
    if (!(final_error <= cfg.kahler.error_tol)) failures.push_back("final error above tolerance");
    if (fit.points < 5) failures.push_back("fewer than 5 samples in the fit window");
    else if (!(fit.r2 >= cfg.kahler.r2_min)) failures.push_back("tail fit R^2 below threshold");
    if (!(rate > 0)) failures.push_back("no exponential decay measured");

    CommandResult res;
    res.exit_code = failures.empty() ? kExitPass : kExitViolation;
    res.message = failures.empty() ? "ok" : failures.front();
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "kahler-converge";
    j["config"] = cfg.source;
    j["beta"] = S.beta;
    j["b_plus"] = gr.b_plus;
    j["b_minus"] = gr.b_minus;
    j["poisson_vs_closed_form"] = poisson_vs_closed;
    j["termination"] = to_string(tr.termination);
    j["t_final"] = tr.final_state.t;
    j["final_error"] = jnum(final_error);
    j["final_sup_du_dt"] = mt.du_dt_sup.empty() ? nlohmann::json(nullptr) : nlohmann::json(mt.du_dt_sup.back());
    j["initial_sup_u_zw"] = mt.split.empty() ? nlohmann::json(nullptr) : nlohmann::json(mt.split.front());
    j["final_sup_u_zw"] = mt.split.empty() ? nlohmann::json(nullptr) : nlohmann::json(mt.split.back());
    j["rate"] = rate;
    j["fit"] = {{"r2", fit.r2}, {"points", fit.points}, {"slope", fit.slope}, {"intercept", fit.intercept},
                {"window", {cfg.kahler.fit_lower, cfg.kahler.fit_upper}}};
    j["pass"] = failures.empty();
    j["failures"] = failures;
    j["exit_code"] = res.exit_code;
    res.report = j;
    if (write) {
        std::ostringstream csv;
        csv << "t,metric_error,sup_u_zw,sup_du_dt\n";
        for (std::size_t i = 0; i < mt.t.size(); ++i)
            csv << num(mt.t[i]) << "," << num(mt.error[i]) << "," << num(mt.split[i]) << ","
                << num(mt.du_dt_sup[i]) << "\n";
        write_text(out_dir(cfg) / "kahler_series.csv", csv.str());
        write_json(out_dir(cfg) / "kahler_report.json", j);
    }
    return res;
}

CommandResult cmd_beta_sweep(const ExperimentConfig& cfg, bool write) {
    std::vector<double> betas = cfg.sweep.betas;
    std::sort(betas.begin(), betas.end());
    const double T = cfg.sweep.compare_time;
    const std::vector<double> times = sample_times(cfg.sweep.sample_interval, T);

    struct Member {
        double beta;
        std::map<double, RealField> states;
        double c0_initial, c0_max;
        std::string termination;
    };
    auto run_one = [&](double beta) {
        ExperimentConfig c = cfg;
        c.flow.beta = beta * c.alpha;
        c.flow.t_end = T;
        Setup S = setup(c);
        RunSpec rs = base_spec(c, S);
        rs.params.snapshot_stride = std::numeric_limits<std::size_t>::max();
        rs.stop_on_steady = false;
        rs.sync_times = times;
        StateRecorder rec(times);
        rs.observers.push_back(&rec);
        Trajectory tr = run(rs);
        if (tr.termination == Termination::failure) throw NumericalFailure(tr.message);
        return Member{beta, std::move(rec.states), rec.c0_initial, rec.c0_max, to_string(tr.termination)};
    };

    Member ref = run_one(cfg.sweep.reference_beta);
    std::vector<Member> members;
    for (double b : betas) members.push_back(b == cfg.sweep.reference_beta ? ref : run_one(b));

    nlohmann::json rows = nlohmann::json::array();
    std::vector<std::string> failures;
    std::vector<double> final_d;
    for (const auto& m : members) {
        nlohmann::json dist = nlohmann::json::array();
        double dT = NAN;
        for (double t : times) {
            auto a = m.states.find(t);
            auto b = ref.states.find(t);
            if (a == m.states.end() || b == ref.states.end()) {
                failures.push_back("missing matched state at t = " + num(t));
                continue;
            }
            const double d = sup_norm(a->second - b->second);
            dist.push_back({{"t", t}, {"distance", d}});
            if (t == times.back()) dT = d;
        }
        final_d.push_back(dT);
        const bool c0_ok = m.c0_max <= m.c0_initial + cfg.sweep.c0_slack;
        if (!c0_ok) failures.push_back("C0 grew beyond its initial value at beta = " + num(m.beta));
        rows.push_back({{"beta", m.beta},
                        {"distance_at_compare_time", jnum(dT)},
                        {"c0_initial", m.c0_initial},
                        {"c0_max", m.c0_max},
                        {"c0_bounded", c0_ok},
                        {"termination", m.termination},
                        {"distances", dist}});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < final_d.size(); ++i)
        if (!(final_d[i] <= final_d[i - 1] * (1 + cfg.sweep.slack) + 1e-14)) monotone = false;
    if (!monotone) failures.push_back("distances are not decreasing as beta increases");

    CommandResult res;
    res.exit_code = failures.empty() ? kExitPass : kExitViolation;
    res.message = failures.empty() ? "ok" : failures.front();
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "beta-sweep";
    j["config"] = cfg.source;
    j["reference_beta"] = cfg.sweep.reference_beta;
    j["compare_time"] = T;
    j["horizon"] = "checked on the computed horizon [0, " + num(T) + "] only";
    j["members"] = rows;
    j["monotone"] = monotone;
    j["pass"] = failures.empty();
    j["failures"] = failures;
    j["exit_code"] = res.exit_code;
    res.report = j;
    if (write) write_json(out_dir(cfg) / "beta_sweep.json", j);
    return res;
}

CommandResult cmd_oracle_2d(const ExperimentConfig& cfg, bool write) {
    Setup S = setup(cfg);
    if (S.forcing) throw ConfigError("oracle-2d runs without forcing");
    if (cfg.flow.spectral_filter) throw ConfigError("oracle-2d runs without the spectral filter");
    SplitOracle oracle(S.bg, S.beta, S.u0);
    RunSpec rs = base_spec(cfg, S);
    rs.sync_times = sample_times(cfg.oracle.sample_interval, cfg.flow.t_end);
    OracleTracker ot(oracle);
    rs.observers.push_back(&ot);
    Trajectory tr = run(rs);
    if (tr.termination == Termination::failure) throw NumericalFailure(tr.message);

    double worst = 0;
    for (double d : ot.distance) worst = std::max(worst, d);
    const bool pass = worst <= cfg.oracle.tolerance;
    CommandResult res;
    res.exit_code = pass ? kExitPass : kExitViolation;
    res.message = pass ? "ok" : "4D flow departs from the factor flows";
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "oracle-2d";
    j["config"] = cfg.source;
    j["beta"] = S.beta;
    j["termination"] = to_string(tr.termination);
    j["steps"] = tr.steps;
    j["snapshots"] = ot.t.size();
    j["max_distance"] = worst;
    j["tolerance"] = cfg.oracle.tolerance;
    j["pass"] = pass;
    j["exit_code"] = res.exit_code;
    res.report = j;
    if (write) {
        std::ostringstream csv;
        csv << "t,distance\n";
        for (std::size_t i = 0; i < ot.t.size(); ++i) csv << num(ot.t[i]) << "," << num(ot.distance[i]) << "\n";
        write_text(out_dir(cfg) / "oracle_2d.csv", csv.str());
        write_json(out_dir(cfg) / "oracle_2d.json", j);
    }
    return res;
}

CommandResult cmd_check_identities(const ExperimentConfig& cfg, bool write) {
    IdentitySuiteReport r = run_identity_suite(cfg.identities);
    CommandResult res;
    res.exit_code = r.all_pass ? kExitPass : kExitViolation;
    res.message = r.all_pass ? "ok" : "identity failure";
    res.report = r.to_json(cfg.identities.seed);
    res.report["schema_version"] = kSchemaVersion;
    res.report["exit_code"] = res.exit_code;
    if (write) write_json(out_dir(cfg) / "identity_report.json", res.report);
    return res;
}

std::vector<std::string> command_names() {
    return {"run", "kahler-converge", "beta-sweep", "oracle-2d", "check-identities"};
}

CommandResult run_command(const std::string& name, const ExperimentConfig& cfg, bool write) {
    return guarded([&]() -> CommandResult {
        if (name == "run") return cmd_flow_run(cfg, write);
        if (name == "kahler-converge") return cmd_kahler_converge(cfg, write);
        if (name == "beta-sweep") return cmd_beta_sweep(cfg, write);
        if (name == "oracle-2d") return cmd_oracle_2d(cfg, write);
        if (name == "check-identities") return cmd_check_identities(cfg, write);
        throw ConfigError("unknown command '" + name + "'");
    });
}

}  // namespace smaflow
