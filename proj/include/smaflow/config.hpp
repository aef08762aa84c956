#pragma once

#include "smaflow/flow.hpp"
#include "smaflow/geometry.hpp"
#include "smaflow/identities.hpp"
#include "smaflow/monitors.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smaflow {

// [section] / key = value text; '#' and ';' start comments
struct IniValue {
    std::string value;
    int line = 0;
};
using IniSections = std::map<std::string, std::map<std::string, IniValue>>;

IniSections parse_ini(const std::string& text, const std::string& origin = "<string>");

struct GridSpec {
    std::array<std::size_t, 4> dims{16, 16, 16, 16};
    std::array<double, 4> periods{1, 1, 1, 1};
};

struct BackgroundSpec {
    std::string kind = "flat";  // flat | kahler_product | pluriclosed
    // kahler_product: g = 1 + g_amplitude cos(2 pi g_wave x1/L1), h likewise in x3, or files
    double g_amplitude = 0, h_amplitude = 0;
    int g_wave = 1, h_wave = 1;
    std::string g_file, h_file;
    // pluriclosed
    double c_g = 1, c_h = 1;
    std::vector<CosineMode> modes;
};

// amplitude * (sin|cos)(2 pi sum k_i x_i / L_i)
struct TrigTerm {
    double amplitude = 0;
    bool cosine = false;
    std::array<int, 4> k{};
};

struct InitialSpec {
    std::string kind = "zero";  // zero | random | split | file | trig
    std::uint64_t seed = 1;
    double amplitude = 0.01;
    Band band{1, 2};
    int modes = 12;
    std::string a_file, b_file, file;
    std::vector<TrigTerm> terms;
    bool shift_min_zero = true;
};

struct ForcingSpec {
    std::string f_plus = "zero";   // zero | beta_log_cos | file
    std::string f_minus = "zero";  // zero | log_cos | file
    double f_plus_amplitude = 0.2, f_minus_amplitude = 0.2;
    int f_plus_wave = 1, f_minus_wave = 1;
    std::string f_plus_file, f_minus_file;
    bool normalize_compat6 = true;
    bool present() const { return f_plus != "zero" || f_minus != "zero"; }
};

struct OutputSpec {
    std::string directory = "out";
    std::size_t field_dump_stride = 0;  // in snapshots; 0 disables dumps
    double sample_interval = 0;         // > 0 adds snapshots at multiples of this time
};

struct SweepSpec {
    std::vector<double> betas{0.9, 0.95, 0.99};
    double reference_beta = 1.0;
    double compare_time = 2.0;
    double slack = 0.05;
    double c0_slack = 1e-6;
    double sample_interval = 0.25;
};

struct OracleSpec {
    double tolerance = 1e-6;
    double sample_interval = 0.1;
};

struct KahlerSpec {
    double error_tol = 1e-6;
    double r2_min = 0.99;
    // tail fit window on the error series
    double fit_upper = 1e-3, fit_lower = 1e-9;
    double sample_interval = 0.05;
};

struct ExperimentConfig {
    GridSpec grid;
    BackgroundSpec background;
    FlowParams flow;
    double alpha = 1.0;
    InitialSpec initial;
    ForcingSpec forcing;
    MonitorOptions monitors;
    OutputSpec output;
    IdentitySuiteOptions identities;
    SweepSpec sweep;
    OracleSpec oracle;
    KahlerSpec kahler;
    std::string source;  // path or "<string>"
};

// strict: unknown sections or keys, malformed values, and range violations throw ConfigError
ExperimentConfig parse_config_string(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig parse_config(const std::string& path);

// nearest known key by edit distance, empty when nothing is close
std::string suggest_key(const std::string& key, const std::vector<std::string>& known);

TorusGrid build_grid(const ExperimentConfig& c);
Background build_background(const ExperimentConfig& c, const TorusGrid& g);
// u0 after shift_min_zero when requested
RealField build_initial(const ExperimentConfig& c, const TorusGrid& g, const Background& bg);
struct Forcing {
    RealField f_plus, f_minus;
};
// f+ and f- on the grid, shifted to satisfy the compatibility condition when requested
// divided by alpha, so they pair with the normalized exponent beta/alpha
std::optional<Forcing> build_forcing(const ExperimentConfig& c, const TorusGrid& g, const Background& bg);

}  // namespace smaflow
