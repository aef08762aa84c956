#pragma once

#include "smaflow/config.hpp"

#include <json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace smaflow {

inline constexpr int kExitPass = 0, kExitViolation = 1, kExitConfig = 2, kExitNumerical = 3;
inline constexpr int kSchemaVersion = 1;

struct CommandResult {
    int exit_code = kExitPass;
    nlohmann::json report;
    std::string message;
};

// Each command writes its artifacts below cfg.output.directory when write is true.
CommandResult cmd_flow_run(const ExperimentConfig& cfg, bool write = true);
CommandResult cmd_kahler_converge(const ExperimentConfig& cfg, bool write = true);
CommandResult cmd_beta_sweep(const ExperimentConfig& cfg, bool write = true);
CommandResult cmd_oracle_2d(const ExperimentConfig& cfg, bool write = true);
CommandResult cmd_check_identities(const ExperimentConfig& cfg, bool write = true);

// maps ConfigError to 2, NumericalFailure to 3
CommandResult guarded(const std::function<CommandResult()>& body);

std::vector<std::string> command_names();
CommandResult run_command(const std::string& name, const ExperimentConfig& cfg, bool write = true);

// CSV header: fixed statistic columns then <check>_pass, <check>_margin per enabled monitor
std::vector<std::string> timeseries_columns(const std::vector<std::string>& checks);

struct LinearFit {
    double slope = 0, intercept = 0, r2 = 0;
    std::size_t points = 0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// multiples of dt in (0, t_end], then t_end itself when it is not one
std::vector<double> sample_times(double dt, double t_end);

}  // namespace smaflow
