#include "smaflow/config.hpp"
#include "smaflow/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace smaflow {

namespace {

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(s[i])) ++i;
    return s.substr(i);
}

std::vector<std::string> split(const std::string& s, const std::string& seps) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (seps.find(c) != std::string::npos) {
            if (!trim(cur).empty()) out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

struct Ctx {
    std::string origin, section, key;
    int line;
    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(origin + ":" + std::to_string(line) + ": [" + section + "] " + key + ": " + what);
    }
};

double to_double(const Ctx& c, const std::string& v) {
    std::size_t pos = 0;
    double x = 0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        c.fail("expected a number, got '" + v + "'");
    }
    if (pos != v.size() || !std::isfinite(x)) c.fail("expected a number, got '" + v + "'");
    return x;
}

long long to_int(const Ctx& c, const std::string& v) {
    std::size_t pos = 0;
    long long x = 0;
    try {
        x = std::stoll(v, &pos);
    } catch (const std::exception&) {
        c.fail("expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) c.fail("expected an integer, got '" + v + "'");
    return x;
}

std::size_t to_count(const Ctx& c, const std::string& v) {
    long long x = to_int(c, v);
    if (x < 0) c.fail("must be nonnegative");
    return std::size_t(x);
}

bool to_bool(const Ctx& c, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    c.fail("expected true or false, got '" + v + "'");
}

std::vector<double> to_doubles(const Ctx& c, const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split(v, " ,\t")) out.push_back(to_double(c, p));
    return out;
}

template <std::size_t N>
std::array<double, N> to_fixed(const Ctx& c, const std::string& v) {
    auto xs = to_doubles(c, v);
    if (xs.size() != N) c.fail("expected " + std::to_string(N) + " values");
    std::array<double, N> a{};
    std::copy(xs.begin(), xs.end(), a.begin());
    return a;
}

std::string one_of(const Ctx& c, const std::string& v, std::initializer_list<const char*> allowed) {
    std::string list;
    for (const char* a : allowed) {
        if (v == a) return v;
        list += std::string(list.empty() ? "" : ", ") + a;
    }
    c.fail("'" + v + "' is not one of " + list);
}

// "k m a; k m a"
std::vector<CosineMode> to_modes(const Ctx& c, const std::string& v) {
    std::vector<CosineMode> out;
    for (const auto& item : split(v, ";")) {
        auto xs = split(item, " ,\t");
        if (xs.size() != 3) c.fail("mode '" + item + "' must be 'k m amplitude'");
        out.push_back({int(to_int(c, xs[0])), int(to_int(c, xs[1])), to_double(c, xs[2])});
    }
    return out;
}

// "0.05 sin 1 0 0 0; 0.02 cos 0 1 0 1"
std::vector<TrigTerm> to_terms(const Ctx& c, const std::string& v) {
    std::vector<TrigTerm> out;
    for (const auto& item : split(v, ";")) {
        auto xs = split(item, " ,\t");
        if (xs.size() != 6 || (xs[1] != "sin" && xs[1] != "cos"))
            c.fail("term '" + item + "' must be 'amplitude sin|cos k1 k2 k3 k4'");
        TrigTerm t;
        t.amplitude = to_double(c, xs[0]);
        t.cosine = xs[1] == "cos";
        for (int a = 0; a < 4; ++a) t.k[a] = int(to_int(c, xs[2 + a]));
        out.push_back(t);
    }
    return out;
}

using Setter = std::function<void(const Ctx&, const std::string&, ExperimentConfig&)>;
using Schema = std::map<std::string, std::map<std::string, Setter>>;

const Schema& schema() {
    static const Schema s = [] {
        Schema m;
        auto& grid = m["grid"];
        grid["dims"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            auto xs = to_fixed<4>(c, v);
            for (int a = 0; a < 4; ++a) {
                if (xs[a] != std::floor(xs[a]) || xs[a] < 0) c.fail("dims must be integers");
                e.grid.dims[a] = std::size_t(xs[a]);
            }
        };
        grid["periods"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.grid.periods = to_fixed<4>(c, v);
        };

        auto& bg = m["background"];
        bg["kind"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.background.kind = one_of(c, v, {"flat", "kahler_product", "pluriclosed"});
        };
        bg["g_amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.g_amplitude = to_double(c, v); };
        bg["h_amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.h_amplitude = to_double(c, v); };
        bg["g_wave"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.g_wave = int(to_int(c, v)); };
        bg["h_wave"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.h_wave = int(to_int(c, v)); };
        bg["g_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.background.g_file = v; };
        bg["h_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.background.h_file = v; };
        bg["c_g"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.c_g = to_double(c, v); };
        bg["c_h"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.c_h = to_double(c, v); };
        bg["modes"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.background.modes = to_modes(c, v); };

        auto& fl = m["flow"];
        fl["beta"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.beta = to_double(c, v); };
        fl["alpha"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.alpha = to_double(c, v); };
        fl["cfl"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.cfl = to_double(c, v); };
        fl["dt_max"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.dt_max = to_double(c, v); };
        fl["t_end"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.t_end = to_double(c, v); };
        fl["steady_tol"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.steady_tol = to_double(c, v); };
        fl["admissibility_floor"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.flow.admissibility_floor = to_double(c, v);
        };
        fl["snapshot_stride"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.flow.snapshot_stride = to_count(c, v);
        };
        fl["max_retries"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.max_retries = int(to_count(c, v)); };
        fl["max_steps"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.flow.max_steps = to_count(c, v); };
        fl["spectral_filter"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.flow.spectral_filter = to_bool(c, v);
        };

        auto& in = m["initial"];
        in["kind"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.initial.kind = one_of(c, v, {"zero", "random", "split", "file", "trig"});
        };
        in["seed"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.initial.seed = to_count(c, v); };
        in["amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.initial.amplitude = to_double(c, v); };
        in["band"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            auto b = to_fixed<2>(c, v);
            e.initial.band = {int(b[0]), int(b[1])};
        };
        in["modes"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.initial.modes = int(to_count(c, v)); };
        in["a_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.initial.a_file = v; };
        in["b_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.initial.b_file = v; };
        in["file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.initial.file = v; };
        in["terms"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.initial.terms = to_terms(c, v); };
        in["shift_min_zero"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.initial.shift_min_zero = to_bool(c, v);
        };

        auto& fo = m["forcing"];
        fo["f_plus"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.forcing.f_plus = one_of(c, v, {"zero", "beta_log_cos", "file"});
        };
        fo["f_minus"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.forcing.f_minus = one_of(c, v, {"zero", "log_cos", "file"});
        };
        fo["f_plus_amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.forcing.f_plus_amplitude = to_double(c, v); };
        fo["f_minus_amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.forcing.f_minus_amplitude = to_double(c, v); };
        fo["f_plus_wave"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.forcing.f_plus_wave = int(to_int(c, v)); };
        fo["f_minus_wave"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.forcing.f_minus_wave = int(to_int(c, v)); };
        fo["f_plus_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.forcing.f_plus_file = v; };
        fo["f_minus_file"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.forcing.f_minus_file = v; };
        fo["normalize_compat6"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.forcing.normalize_compat6 = to_bool(c, v);
        };

        auto& mo = m["monitors"];
        mo["enabled"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.monitors.enabled.clear();
            for (const auto& name : split(v, " ,\t")) {
                if (name == "all") {
                    e.monitors.enabled.insert(all_checks().begin(), all_checks().end());
                    continue;
                }
                if (std::find(all_checks().begin(), all_checks().end(), name) == all_checks().end()) {
                    std::string hint = suggest_key(name, all_checks());
                    c.fail("unknown monitor '" + name + "'" + (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
                }
                e.monitors.enabled.insert(name);
            }
        };
        mo["negative_control"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            if (v != "none" && std::find(all_checks().begin(), all_checks().end(), v) == all_checks().end())
                c.fail("unknown monitor '" + v + "'");
            e.monitors.negative_control = v == "none" ? "" : v;
        };
        mo["corrupt_snapshot"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.monitors.corrupt_snapshot = to_count(c, v);
        };
        mo["mono_rel_tol"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.monitors.mono_rel_tol = to_double(c, v); };
        mo["w_tol"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.monitors.w_tol = to_double(c, v); };
        mo["safety"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.monitors.safety = to_double(c, v); };

        auto& out = m["output"];
        out["directory"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.output.directory = v; };
        out["field_dump_stride"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.output.field_dump_stride = to_count(c, v);
        };
        out["sample_interval"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.output.sample_interval = to_double(c, v);
        };

        auto& id = m["identities"];
        id["betas"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.betas = to_doubles(c, v); };
        id["resolutions"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.identities.resolutions.clear();
            for (double x : to_doubles(c, v)) e.identities.resolutions.push_back(std::size_t(x));
        };
        id["seed"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.seed = to_count(c, v); };
        id["amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.amplitude = to_double(c, v); };
        id["local_amplitude"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.identities.local_amplitude = to_double(c, v);
        };
        id["band"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            auto b = to_fixed<2>(c, v);
            e.identities.band = {int(b[0]), int(b[1])};
        };
        id["tolerance"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.tolerance = to_double(c, v); };
        id["convergence_ratio"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.identities.convergence_ratio = to_double(c, v);
        };
        id["floor"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.floor = to_double(c, v); };
        id["tail_tolerance"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) {
            e.identities.tail_tolerance = to_double(c, v);
        };
        id["tamper"] = [](const Ctx&, const std::string& v, ExperimentConfig& e) { e.identities.tamper = v == "none" ? "" : v; };
        id["c_g"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.c_g = to_double(c, v); };
        id["c_h"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.c_h = to_double(c, v); };
        id["modes"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.identities.modes = to_modes(c, v); };

        auto& sw = m["sweep"];
        sw["betas"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.betas = to_doubles(c, v); };
        sw["reference_beta"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.reference_beta = to_double(c, v); };
        sw["compare_time"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.compare_time = to_double(c, v); };
        sw["slack"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.slack = to_double(c, v); };
        sw["c0_slack"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.c0_slack = to_double(c, v); };
        sw["sample_interval"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.sweep.sample_interval = to_double(c, v); };

        auto& orc = m["oracle"];
        orc["tolerance"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.oracle.tolerance = to_double(c, v); };
        orc["sample_interval"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.oracle.sample_interval = to_double(c, v); };

        auto& ka = m["kahler"];
        ka["error_tol"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.kahler.error_tol = to_double(c, v); };
        ka["r2_min"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.kahler.r2_min = to_double(c, v); };
        ka["fit_upper"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.kahler.fit_upper = to_double(c, v); };
        ka["fit_lower"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.kahler.fit_lower = to_double(c, v); };
        ka["sample_interval"] = [](const Ctx& c, const std::string& v, ExperimentConfig& e) { e.kahler.sample_interval = to_double(c, v); };
        return m;
    }();
    return s;
}

void validate_config(const ExperimentConfig& e) {
    auto bad = [&](const std::string& what) { throw ConfigError(e.source + ": " + what); };
    make_grid(e.grid.dims, e.grid.periods);
    if (!(e.alpha > 0)) bad("[flow] alpha must be positive");
    if (!(e.flow.beta > 0 && e.flow.beta / e.alpha <= 1)) bad("[flow] beta/alpha must lie in (0, 1]");
    FlowParams p = e.flow;
    p.beta = e.flow.beta / e.alpha;
    validate(p);
    if (e.initial.band.lo < 0 || e.initial.band.hi < e.initial.band.lo) bad("[initial] band must satisfy 0 <= lo <= hi");
    if (e.initial.amplitude < 0) bad("[initial] amplitude must be nonnegative");
    for (double b : e.identities.betas)
        if (!(b > 0 && b <= 1)) bad("[identities] betas must lie in (0, 1]");
    for (std::size_t n : e.identities.resolutions)
        if (n < 8 || (n & (n - 1)) != 0) bad("[identities] resolutions must be powers of two >= 8");
    for (double b : e.sweep.betas)
        if (!(b > beta0() && b <= 1))
            bad("[sweep] beta " + std::to_string(b) + " is outside (beta0, 1] with beta0 = " + std::to_string(beta0()));
    if (!(e.sweep.reference_beta > beta0() && e.sweep.reference_beta <= 1)) bad("[sweep] reference_beta outside (beta0, 1]");
    if (!(e.sweep.compare_time > 0)) bad("[sweep] compare_time must be positive");
    if (e.output.sample_interval < 0) bad("[output] sample_interval must be nonnegative");
    if (!(e.monitors.w_tol > 0) || !(e.monitors.mono_rel_tol > 0)) bad("[monitors] tolerances must be positive");
    if (e.monitors.safety < 1) bad("[monitors] safety must be >= 1");
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

RealField read_on(const std::string& path, const TorusGrid& g) { return read_field(path, g); }

}  // namespace

IniSections parse_ini(const std::string& text, const std::string& origin) {
    IniSections out;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw.substr(0, raw.find('#'));
        s = trim(s);
        // ';' separates list items inside values, so it only starts a comment at line start
        if (s.empty() || s.front() == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError(origin + ":" + std::to_string(line) + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            out[section];
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line) + ": expected 'key = value', got '" + s + "'");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(line) + ": key outside of any section");
        std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line) + ": empty key");
        if (out[section].count(key))
            throw ConfigError(origin + ":" + std::to_string(line) + ": duplicate key '" + key + "' in [" + section + "]");
        out[section][key] = {value, line};
    }
    return out;
}

std::string suggest_key(const std::string& key, const std::vector<std::string>& known) {
    std::string best;
    std::size_t bd = std::string::npos;
    for (const auto& k : known) {
        std::size_t d = edit_distance(key, k);
        if (d < bd) {
            bd = d;
            best = k;
        }
    }
    return bd <= std::max<std::size_t>(2, key.size() / 3) ? best : std::string();
}

ExperimentConfig parse_config_string(const std::string& text, const std::string& origin) {
    ExperimentConfig e;
    e.source = origin;
    const Schema& sc = schema();
    for (const auto& [section, keys] : parse_ini(text, origin)) {
        auto sit = sc.find(section);
        if (sit == sc.end()) {
            std::vector<std::string> names;
            for (const auto& [n, _] : sc) names.push_back(n);
            std::string hint = suggest_key(section, names);
            int line = keys.empty() ? 0 : keys.begin()->second.line;
            throw ConfigError(origin + ":" + std::to_string(line) + ": unknown section [" + section + "]" +
                              (hint.empty() ? "" : " (did you mean [" + hint + "]?)"));
        }
        for (const auto& [key, val] : keys) {
            auto kit = sit->second.find(key);
            if (kit == sit->second.end()) {
                std::vector<std::string> names;
                for (const auto& [n, _] : sit->second) names.push_back(n);
                std::string hint = suggest_key(key, names);
                throw ConfigError(origin + ":" + std::to_string(val.line) + ": unknown key '" + key + "' in [" +
                                  section + "]" + (hint.empty() ? "" : " (did you mean '" + hint + "'?)"));
            }
            kit->second(Ctx{origin, section, key, val.line}, val.value, e);
        }
    }
    validate_config(e);
    return e;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_string(ss.str(), path);
}

TorusGrid build_grid(const ExperimentConfig& c) { return make_grid(c.grid.dims, c.grid.periods); }

Background build_background(const ExperimentConfig& c, const TorusGrid& g) {
    const BackgroundSpec& b = c.background;
    if (b.kind == "flat") return flat_background(g);
    if (b.kind == "pluriclosed") return pluriclosed_background(g, b.c_g, b.c_h, b.modes);
    const double L1 = g.L[0], L3 = g.L[2];
    RealField gp = b.g_file.empty() ? sample(g, [&](double x1, double, double, double) {
        return 1.0 + b.g_amplitude * std::cos(2 * std::numbers::pi * b.g_wave * x1 / L1);
    })
                                    : read_on(b.g_file, g);
    RealField hp = b.h_file.empty() ? sample(g, [&](double, double, double x3, double) {
        return 1.0 + b.h_amplitude * std::cos(2 * std::numbers::pi * b.h_wave * x3 / L3);
    })
                                    : read_on(b.h_file, g);
    return kahler_product_background(gp, hp);
}

RealField build_initial(const ExperimentConfig& c, const TorusGrid& g, const Background& bg) {
    const InitialSpec& s = c.initial;
    RealField u(g);
    if (s.kind == "random") {
        u = random_test_field(bg, s.seed, s.amplitude, s.band, s.modes);
    } else if (s.kind == "file") {
        if (s.file.empty()) throw ConfigError("[initial] kind = file needs 'file'");
        u = read_on(s.file, g);
    } else if (s.kind == "split") {
        if (s.a_file.empty() || s.b_file.empty()) throw ConfigError("[initial] kind = split needs a_file and b_file");
        RealField a = read_on(s.a_file, g), b = read_on(s.b_file, g);
        if (sup_norm(real(derivative(a, d::w))) + sup_norm(imag(derivative(a, d::w))) > 1e-10 * (1 + sup_norm(a)))
            throw ConfigError("[initial] a_file depends on (x3, x4)");
        if (sup_norm(real(derivative(b, d::z))) + sup_norm(imag(derivative(b, d::z))) > 1e-10 * (1 + sup_norm(b)))
            throw ConfigError("[initial] b_file depends on (x1, x2)");
        u = a + b;
    } else if (s.kind == "trig") {
        const auto L = g.L;
        u = sample(g, [&](double x1, double x2, double x3, double x4) {
            double v = 0;
            for (const auto& t : s.terms) {
                double ph = 2 * std::numbers::pi *
                            (t.k[0] * x1 / L[0] + t.k[1] * x2 / L[1] + t.k[2] * x3 / L[2] + t.k[3] * x4 / L[3]);
                v += t.amplitude * (t.cosine ? std::cos(ph) : std::sin(ph));
            }
            return v;
        });
    }
    return s.shift_min_zero ? shift_min_zero(u) : u;
}

std::optional<Forcing> build_forcing(const ExperimentConfig& c, const TorusGrid& g, const Background& bg) {
    const ForcingSpec& f = c.forcing;
    const double beta = c.flow.beta;
    if (!f.present()) return std::nullopt;
    const double L1 = g.L[0], L3 = g.L[2];
    Forcing out{RealField(g), RealField(g)};
    if (f.f_plus == "beta_log_cos") {
        out.f_plus = sample(g, [&](double x1, double, double, double) {
            return beta * std::log(1.0 + f.f_plus_amplitude * std::cos(2 * std::numbers::pi * f.f_plus_wave * x1 / L1));
        });
    } else if (f.f_plus == "file") {
        out.f_plus = read_on(f.f_plus_file, g);
    }
    if (f.f_minus == "log_cos") {
        out.f_minus = sample(g, [&](double, double, double x3, double) {
            return -std::log(1.0 + f.f_minus_amplitude * std::cos(2 * std::numbers::pi * f.f_minus_wave * x3 / L3));
        });
    } else if (f.f_minus == "file") {
        out.f_minus = read_on(f.f_minus_file, g);
    }
    if (!all_finite(out.f_plus) || !all_finite(out.f_minus))
        throw ConfigError("[forcing] amplitudes produce non-finite forcing (need |amplitude| < 1)");
    out.f_plus = normalize_exponents(c.alpha, beta, out.f_plus).f;
    out.f_minus = normalize_exponents(c.alpha, beta, out.f_minus).f;
    if (f.normalize_compat6) {
        out.f_plus = normalize_compat_plus(bg, out.f_plus, beta / c.alpha);
        out.f_minus = normalize_compat_minus(bg, out.f_minus);
    }
    return out;
}

}  // namespace smaflow
