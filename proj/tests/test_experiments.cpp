#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smaflow/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace smaflow;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / "smaflow_test_exp" / name;
    fs::remove_all(d);
    return d.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string msg_of(const std::string& text) {
    try {
        parse_config_string(text, "t.ini");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

CommandResult run_text(const std::string& cmd, const std::string& text, bool write = false,
                       const std::string& out = "") {
    return guarded([&] {
        auto c = parse_config_string(text, "t.ini");
        if (!out.empty()) c.output.directory = out;
        return run_command(cmd, c, write);
    });
}

}  // namespace

TEST_CASE("config defaults") {
    auto c = parse_config_string("[grid]\ndims = 8 8 8 8\n");
    CHECK(c.flow.cfl == 0.5);
    CHECK(c.flow.steady_tol == 1e-9);
    CHECK(c.flow.beta == 1.0);
    CHECK(c.alpha == 1.0);
    CHECK(c.background.kind == "flat");
    CHECK(c.initial.kind == "zero");
    CHECK(c.monitors.enabled.size() == all_checks().size());
    CHECK(c.forcing.normalize_compat6);
    CHECK(c.grid.dims == std::array<std::size_t, 4>{8, 8, 8, 8});
}

TEST_CASE("config errors") {
    CHECK(msg_of("[flow]\nbeta = 1.5\n") != "");
    CHECK_THROWS_AS(parse_config_string("[flow]\nbeta = 1.5\n"), ConfigError);
    auto m = msg_of("[flow]\nbetta = 0.5\n");
    CHECK(doctest::String(m.c_str()) == doctest::Contains("t.ini:2"));
    CHECK(doctest::String(m.c_str()) == doctest::Contains("did you mean 'beta'"));
    CHECK(msg_of("[sweep]\nbetas = 0.1 0.9\n") != "");
    CHECK(msg_of("[flow]\nbeta = 0.5\nbeta = 0.6\n").find("duplicate") != std::string::npos);
    CHECK(msg_of("beta = 0.5\n").find("outside") != std::string::npos);
    CHECK(msg_of("[flwo]\nbeta = 0.5\n").find("did you mean [flow]") != std::string::npos);
    CHECK(msg_of("[flow]\ncfl = fast\n") != "");
    CHECK(msg_of("[grid]\ndims = 10 16 16 16\n") != "");
    CHECK(msg_of("[flow]\nbeta = 2\nalpha = 4\n") == "");
    CHECK(msg_of("[flow]\nbeta = 0.5\nsnapshot_stride = 0\n") != "");
    CHECK(msg_of("[monitors]\nenabled = prop5, bogus\n") != "");
    // '#' comments anywhere, ';' only at line start
    CHECK(msg_of("; note\n[flow]\nbeta = 0.5  # trailing\n") == "");
}

TEST_CASE("config lists and sections") {
    auto c = parse_config_string(R"([grid]
dims = 16 8 8 8
periods = 1 1 2 2
[flow]
beta = 0.5
[initial]
kind = trig
terms = 0.05 sin 1 0 0 0; 0.02 cos 0 0 1 1
[monitors]
enabled = prop5, phi
negative_control = none
[sweep]
betas = 0.8 0.9
)");
    CHECK(c.grid.periods[2] == 2.0);
    REQUIRE(c.initial.terms.size() == 2u);
    CHECK(c.initial.terms[1].k[3] == 1);
    CHECK_FALSE(c.initial.terms[1].cosine == false);
    CHECK(c.monitors.enabled == std::set<std::string>{"prop5", "phi"});
    CHECK(c.monitors.negative_control.empty());
    CHECK(c.sweep.betas == std::vector<double>{0.8, 0.9});
}

TEST_CASE("suggest_key") {
    CHECK(suggest_key("betta", {"beta", "alpha", "cfl"}) == "beta");
    CHECK(suggest_key("zzzzzzzz", {"beta", "alpha"}) == "");
}

TEST_CASE("forcing is compatible after normalization") {
    auto c = parse_config_string(R"([grid]
dims = 16 8 8 8
[background]
kind = kahler_product
g_amplitude = 0.2
[flow]
beta = 0.5
[forcing]
f_plus = beta_log_cos
f_minus = log_cos
)");
    auto g = build_grid(c);
    auto bg = build_background(c, g);
    auto f = build_forcing(c, g, bg);
    REQUIRE(f);
    CHECK(std::abs(mean(bg.g * exp(f->f_plus / 0.5)) - mean(bg.g)) < 1e-12);
    CHECK(std::abs(mean(bg.h * exp(-f->f_minus)) - mean(bg.h)) < 1e-12);
}

TEST_CASE("linear_fit and sample_times") {
    auto f = linear_fit({0, 1, 2, 3}, {1, -1, -3, -5});
    CHECK(f.slope == doctest::Approx(-2));
    CHECK(f.intercept == doctest::Approx(1));
    CHECK(f.r2 == doctest::Approx(1));
    CHECK(f.points == 4u);
    auto n = linear_fit({0, 1, 2, 3}, {0, 1, 0, 1});
    CHECK(n.r2 < 0.5);
    auto t = sample_times(0.25, 1.0);
    CHECK(t == std::vector<double>{0.25, 0.5, 0.75, 1.0});
    CHECK(sample_times(0.3, 1.0) == std::vector<double>{0.3, 0.6, 0.3 * 3, 1.0});
}

TEST_CASE("csv columns") {
    auto c = timeseries_columns({"prop5", "phi"});
    std::vector<std::string> head{"t", "dt", "max_du_dt", "min_du_dt", "osc_u", "min_lambda", "max_lambda",
                                  "min_eta", "max_eta", "c0", "sup_mixed_norm", "steady_residual"};
    REQUIRE(c.size() == head.size() + 4);
    for (std::size_t i = 0; i < head.size(); ++i) CHECK(c[i] == head[i]);
    CHECK(c[12] == "prop5_pass");
    CHECK(c[13] == "prop5_margin");
    CHECK(c[14] == "phi_pass");
    CHECK(c[15] == "phi_margin");
}

TEST_CASE("run: zero data is steady at once") {
    auto out = tmp_dir("zero");
    auto r = run_text("run", "[grid]\ndims = 8 8 8 8\n", true, out);
    CHECK(r.exit_code == kExitPass);
    CHECK(r.report["termination"] == "steady");
    auto csv = lines(slurp(out + "/timeseries.csv"));
    CHECK(csv.size() == 2u);
    auto j = nlohmann::json::parse(slurp(out + "/summary.json"));
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(j["exit_code"] == 0);
}

TEST_CASE("run: skipped checks print -1 and nan") {
    auto out = tmp_dir("skip");
    auto r = run_text("run", R"([grid]
dims = 8 8 8 8
[background]
kind = pluriclosed
modes = 1 1 0.3
[flow]
beta = 0.5
t_end = 0.004
dt_max = 1e-3
[initial]
kind = trig
terms = 0.002 sin 1 0 0 0
)",
                      true, out);
    CHECK(r.exit_code == kExitPass);
    auto csv = lines(slurp(out + "/timeseries.csv"));
    REQUIRE(csv.size() > 2u);
    auto header = csv[0];
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        for (std::string x; std::getline(ss, x, ',');) cols.push_back(x);
    }
    auto at = [&](const std::string& row, const std::string& col) {
        std::stringstream ss(row);
        std::string x;
        for (std::size_t i = 0; std::getline(ss, x, ','); ++i)
            if (cols[i] == col) return x;
        return std::string("?");
    };
    CHECK(at(csv[1], "lemma24_pass") == "-1");
    CHECK(at(csv[1], "lemma24_margin") == "nan");
    CHECK(at(csv[1], "prop5_pass") == "1");
}

TEST_CASE("run: reruns are byte identical") {
    const std::string text = R"([grid]
dims = 8 8 8 8
[flow]
beta = 0.5
t_end = 0.02
[initial]
kind = random
seed = 5
amplitude = 0.01
band = 1 2
[monitors]
enabled = prop5, prop6, prop10
)";
    auto a = tmp_dir("rep_a"), b = tmp_dir("rep_b");
    exec::set_deterministic(true);
    REQUIRE(run_text("run", text, true, a).exit_code == kExitPass);
    REQUIRE(run_text("run", text, true, b).exit_code == kExitPass);
    auto ca = slurp(a + "/timeseries.csv");
    CHECK(ca.size() > 100u);
    CHECK(ca == slurp(b + "/timeseries.csv"));
}

TEST_CASE("run: exit codes") {
    CHECK(run_text("run", "[flow]\nbeta = 1.5\n").exit_code == kExitConfig);
    // inadmissible initial data
    auto r = run_text("run", R"([grid]
dims = 8 8 8 8
[initial]
kind = trig
terms = 0.2 sin 1 0 0 0
)");
    CHECK(r.exit_code == kExitNumerical);
    auto nc = run_text("run", R"([grid]
dims = 8 8 8 8
[flow]
beta = 0.5
t_end = 0.005
dt_max = 5e-4
[initial]
kind = trig
terms = 0.002 sin 1 0 0 0; 0.002 cos 0 0 1 0
[monitors]
enabled = prop6
negative_control = prop6
)");
    CHECK(nc.exit_code == kExitViolation);
}

TEST_CASE("oracle-2d") {
    const std::string base = R"([grid]
dims = 8 8 8 8
[background]
kind = kahler_product
g_amplitude = 0.2
h_amplitude = 0.1
[flow]
beta = 0.5
t_end = 0.05
[oracle]
sample_interval = 0.01
)";
    auto z = run_text("oracle-2d", base);
    CHECK(z.exit_code == kExitPass);
    CHECK(z.report["max_distance"] == 0.0);

    auto p = run_text("oracle-2d", base + "[initial]\nkind = trig\nterms = 0.05 sin 1 0 0 0\n");
    CHECK(p.exit_code == kExitPass);
    CHECK(p.report["max_distance"].get<double>() < 1e-12);

    auto ns = run_text("oracle-2d", base + "[initial]\nkind = trig\nterms = 0.02 cos 1 0 1 0\n");
    CHECK(ns.exit_code == kExitConfig);
}

TEST_CASE("beta-sweep") {
    const std::string base = R"([grid]
dims = 8 8 8 8
[initial]
kind = trig
terms = 0.02 sin 1 0 0 0; 0.02 cos 0 0 1 0
[sweep]
compare_time = 0.1
sample_interval = 0.05
)";
    auto same = run_text("beta-sweep", base + "betas = 1.0\n");
    CHECK(same.exit_code == kExitPass);
    CHECK(same.report["members"][0]["distance_at_compare_time"] == 0.0);

    CHECK(run_text("beta-sweep", base + "betas = 0.1 0.9\n").exit_code == kExitConfig);

    auto sweep = run_text("beta-sweep", base + "betas = 0.5 0.8 0.95\n");
    CHECK(sweep.exit_code == kExitPass);
    CHECK(sweep.report["monotone"] == true);
    std::string h = sweep.report["horizon"];
    CHECK(h.find("0.1") != std::string::npos);
}

TEST_CASE("kahler-converge relaxes split data to the background") {
    auto r = run_text("kahler-converge", R"([grid]
dims = 8 8 8 8
[background]
kind = kahler_product
[flow]
beta = 0.5
cfl = 1.0
t_end = 8
steady_tol = 1e-11
[initial]
kind = trig
terms = 0.02 sin 1 0 0 0; 0.02 cos 0 0 1 0
)");
    CHECK(r.exit_code == kExitPass);
    CHECK(r.report["final_error"].get<double>() <= 1e-6);
    CHECK(r.report["rate"].get<double>() > 0);
    CHECK(r.report["fit"]["r2"].get<double>() >= 0.99);
}

TEST_CASE("check-identities flags under-resolved data") {
    auto r = run_text("check-identities", R"([identities]
betas = 0.7
resolutions = 8
band = 9 12
amplitude = 0.004
local_amplitude = 0.004
)");
    CHECK(r.exit_code == kExitViolation);
    std::size_t under = 0;
    for (auto& e : r.report["results"])
        if (e["status"] == "under_resolved") ++under;
    CHECK(under > 0);
}

TEST_CASE("command names") {
    auto n = command_names();
    CHECK(n == std::vector<std::string>{"run", "kahler-converge", "beta-sweep", "oracle-2d", "check-identities"});
    auto c = parse_config_string("[grid]\ndims = 8 8 8 8\n");
    CHECK(guarded([&] { return run_command("nope", c, false); }).exit_code == kExitConfig);
}
