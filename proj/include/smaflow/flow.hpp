#pragma once

#include "smaflow/geometry.hpp"
#include "smaflow/grid.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smaflow {

struct FlowParams {
    double beta = 1.0;
    double cfl = 0.5;
    double dt_max = 1e-2;
    double t_end = 1.0;
    double steady_tol = 1e-9;
    double admissibility_floor = 1e-10;
    std::size_t snapshot_stride = 1;
    int max_retries = 8;
    std::size_t max_steps = 50'000'000;
    bool spectral_filter = false;
};

void validate(const FlowParams& p);

struct FlowState {
    RealField u;
    double t = 0;
    RealField lambda, eta, du_dt;
};

struct AdmissibilityLost : NumericalFailure {
    AdmissibilityLost(const std::string& msg, double t_, double min_lambda_, double min_eta_)
        : NumericalFailure(msg), t(t_), min_lambda(min_lambda_), min_eta(min_eta_) {}
    double t, min_lambda, min_eta;
};

struct ExponentNormalization {
    double beta = 1, time_scale = 1;
    RealField f;
};

// (alpha, beta, f) -> (beta/alpha, f/alpha, alpha)
ExponentNormalization normalize_exponents(double alpha, double beta, const RealField& f);

struct GaugeResult {
    RealField u_inf;
    double b_plus = 0, b_minus = 0;
    RealField mu_g, mu_h;  // steady coefficients g e^{(f+ + b+)/beta}, h e^{-(f- + b-)}
};

GaugeResult gauge_out_f(const Background& bg, const RealField& f_plus, const RealField& f_minus, double beta);

// f+ -> f+ + beta log(int g / int g e^{f+/beta}),  f- -> f- + log(int h e^{-f-} / int h)
RealField normalize_compat_plus(const Background& bg, const RealField& f_plus, double beta);
RealField normalize_compat_minus(const Background& bg, const RealField& f_minus);

RealField shift_min_zero(const RealField& u0);

struct LambdaEta {
    RealField lambda, eta;
};

LambdaEta lambda_eta(const RealField& u, const Background& bg, double floor = 1e-10, double t = 0);
RealField rhs(const RealField& lambda, const RealField& eta, double beta, const RealField* forcing = nullptr);
RealField rhs(const FlowState& s, double beta, const RealField* forcing = nullptr);

FlowState make_state(RealField u, const Background& bg, double beta, double t = 0,
                     const RealField* forcing = nullptr, double floor = 1e-10);

double spectral_radius(const FlowState& s, const Background& bg, double beta);
double dt_adaptive(const FlowState& s, const Background& bg, double beta, double cfl, double dt_max);

FlowState step_rk4(const FlowState& s, const Background& bg, double beta, double dt,
                   const RealField* forcing = nullptr, double floor = 1e-10);

struct StepOutcome {
    FlowState state;
    double dt = 0;
    int retries = 0;
};

// rejects and halves dt on admissibility loss, up to max_retries times
StepOutcome advance(const FlowState& s, const Background& bg, double beta, double dt,
                    const RealField* forcing = nullptr, double floor = 1e-10, int max_retries = 8);

enum class Termination { t_end, steady, failure, max_steps };
std::string to_string(Termination t);

class RunObserver {
public:
    virtual ~RunObserver() = default;
    // every accepted state, step 0 is the initial state; dt is the step that produced it
    virtual void on_step(const FlowState&, std::size_t /*step*/, double /*dt*/, bool /*snapshot*/) {}
    virtual void on_finish(const FlowState&, std::size_t /*step*/) {}
};

struct SnapshotStats {
    double t = 0, dt = 0;
    double max_du_dt = 0, min_du_dt = 0, osc_u = 0;
    double min_lambda = 0, max_lambda = 0, min_eta = 0, max_eta = 0;
    double c0 = 0, sup_mixed_norm = 0, steady_residual = 0;
    double max_u = 0, min_u = 0;
};

SnapshotStats snapshot_stats(const FlowState& s, const Background& bg, double beta, double dt);

struct Snapshot {
    std::size_t step = 0;
    SnapshotStats stats;
    std::optional<FlowState> state;
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    std::vector<double> dts;  // every accepted step size, in order
    Termination termination = Termination::t_end;
    std::string message;
    std::size_t steps = 0;
    FlowState final_state;
};

struct RunSpec {
    FlowParams params;
    Background bg;
    RealField u0;  // used as given; callers apply shift_min_zero
    std::optional<RealField> forcing;
    bool keep_states = false;
    std::vector<RunObserver*> observers;
    // extra times the integrator lands on exactly; each is also a snapshot
    std::vector<double> sync_times;
    // replay a fixed step sequence instead of the adaptive one
    std::optional<std::vector<double>> dt_sequence;
    bool stop_on_steady = true;
};

Trajectory run(const RunSpec& spec);

}  // namespace smaflow
