#pragma once

#include "smaflow/flow.hpp"
#include "smaflow/geometry.hpp"

#include <json.hpp>

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace smaflow {

// beta |u_zw|^2 / (g lambda h eta)
RealField mixed_norm(const FlowState& s, const Background& bg, double beta);

struct CheckRecord {
    std::string check;  // monitor the record belongs to, e.g. "prop5"
    std::string name;   // e.g. "prop5.max_du_dt"
    double bound_value = 0, observed_value = 0, margin = 0;
    bool pass = true;
    bool skipped = false;
    std::string reason;
};

struct MonitorReport {
    double t = 0;
    std::size_t step = 0;
    std::vector<CheckRecord> records;
    std::shared_ptr<const ConstantsReport> constants_used;
};

// W in the local convention lambda_L = g lambda, eta_L = h eta, q = u_{z wbar}
struct LegendreW {
    RealField W11, W22;
    ComplexField W12;
};

LegendreW legendre_W(const FlowState& s, const Background& bg);
// |det W - lambda_L/eta_L| / |lambda_L/eta_L|, sup over the grid
double legendre_det_residual(const LegendreW& W, const FlowState& s, const Background& bg);
RealField legendre_quadratic(const LegendreW& W, cplx a, cplx b);

struct Prop7Result {
    double bound = 0, best_delta = 0;
};

Prop7Result prop7_bound(double beta, double G_min, double G_max, double max_u0, double C,
                        const std::vector<double>& delta_grid);
std::vector<double> prop7_delta_grid(double beta);

// weights of the derivative at t0 of the Lagrange interpolant through t[0..4]
std::array<double, 5> lagrange_derivative_weights(const std::array<double, 5>& t, double t0);

inline const std::vector<std::string>& all_checks() {
    static const std::vector<std::string> v{"prop5", "prop6", "prop7", "cor8", "prop10", "prop12", "lemma24", "phi"};
    return v;
}

struct MonitorOptions {
    std::set<std::string> enabled{all_checks().begin(), all_checks().end()};
    std::string negative_control;       // empty: none
    std::size_t corrupt_snapshot = 2;   // ordinal of the snapshot the fixture corrupts
    double mono_rel_tol = 1e-8;
    double w_tol = 1e-6;
    double safety = 1.0;
    std::vector<std::array<cplx, 2>> sample_vectors{
        {cplx(1, 0), cplx(0, 0)}, {cplx(0, 0), cplx(1, 0)}, {cplx(M_SQRT1_2, 0), cplx(M_SQRT1_2, 0)}};
};

// Evaluates every enabled check while a run streams its states.
class MonitorSuite : public RunObserver {
public:
    MonitorSuite(const Background& bg, double beta, MonitorOptions opt = {}, bool forcing_present = false);

    void on_step(const FlowState& s, std::size_t step, double dt, bool snapshot) override;
    void on_finish(const FlowState& s, std::size_t step) override;

    const std::vector<MonitorReport>& reports() const { return reports_; }
    std::vector<std::string> columns() const;  // enabled checks in fixed order
    bool all_pass() const;
    nlohmann::json summary() const;
    // per check: (pass, margin) at one report; pass = -1 when not evaluated
    std::pair<int, double> column_value(const MonitorReport& r, const std::string& check) const;

private:
    struct WindowEntry {
        std::size_t step;
        double dt;
        FlowState state;
        mutable std::optional<ComplexField> q;   // u_{z wbar}
        mutable std::optional<RealField> nu2;    // mixed norm
    };

    bool on(const std::string& c) const { return opt_.enabled.count(c) > 0; }
    void corrupt_snapshot_state(FlowState& s) const;
    void corrupt_neighbor_state(FlowState& s) const;
    void immediate_checks(const FlowState& s, double dt, MonitorReport& rep);
    void differenced_checks(MonitorReport& rep);
    const ComplexField& q_of(const WindowEntry& e) const;
    const RealField& nu2_of(const WindowEntry& e) const;

    Background bg_;
    double beta_;
    MonitorOptions opt_;
    bool forcing_;
    BackgroundInvariants inv_;
    bool cor8_ok_ = true;
    bool constant_bg_ = false;

    bool initialized_ = false;
    double G_min_ = 0, G_max_ = 0, G_sup_ = 0, max_u0_ = 0, min_lambda0_ = 0, max_lambda0_ = 0, sup0_ = 0;
    double c0_running_ = 0;
    double prev_max_ = 0, prev_min_ = 0;
    std::size_t snapshot_ordinal_ = 0;
    std::optional<std::size_t> corrupt_step_;  // step whose window copy gets the neighbor fixture

    std::deque<WindowEntry> window_;
    std::vector<std::pair<std::size_t, std::size_t>> pending_;  // (step, report index)
    std::vector<MonitorReport> reports_;
    std::shared_ptr<const ConstantsReport> constants_;
};

// Trajectory-level entry points over stored consecutive states (keep_states, stride 1)
std::vector<MonitorReport> evaluate_trajectory(const Trajectory& traj, const Background& bg, double beta,
                                               const MonitorOptions& opt = {});
std::vector<CheckRecord> check_prop5(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_prop6(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_cor8(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_prop10(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_prop12(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_lemma24(const Trajectory& traj, const Background& bg, double beta);
std::vector<CheckRecord> check_phi(const Trajectory& traj, const Background& bg, double beta);

struct C0Series {
    std::vector<double> t, c0, running_max;
};

C0Series c0_series(const Trajectory& traj);

}  // namespace smaflow
