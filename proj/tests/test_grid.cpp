#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smaflow/field_io.hpp"
#include "smaflow/grid.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace smaflow;
namespace fs = std::filesystem;

static std::string tmp_path(const char* name) {
    auto dir = fs::temp_directory_path() / "smaflow_test_grid";
    fs::create_directories(dir);
    return (dir / name).string();
}

TEST_CASE("make_grid") {
    auto g = make_grid({16, 16, 16, 16}, {1, 1, 1, 1});
    for (int a = 0; a < 4; ++a) CHECK(g.spacing(a) == doctest::Approx(1.0 / 16));
    CHECK(g.size() == 65536u);

    auto h = make_grid({32, 32, 8, 8}, {1, 1, 2, 2});
    CHECK(h.spacing(0) == 1.0 / 32);
    CHECK(h.spacing(1) == 1.0 / 32);
    CHECK(h.spacing(2) == 0.25);
    CHECK(h.spacing(3) == 0.25);

    CHECK_THROWS_AS(make_grid({10, 16, 16, 16}, {1, 1, 1, 1}), ConfigError);
    CHECK_THROWS_AS(make_grid({16, 16, 16, 16}, {1, 0, 1, 1}), ConfigError);
    CHECK_THROWS_AS(make_grid({16, 16, 16, 16}, {1, 1, -2, 1}), ConfigError);
}

TEST_CASE("index layout is x4 fastest") {
    auto g = make_grid({8, 8, 16, 8}, {1, 1, 1, 1});
    CHECK(g.index(0, 0, 0, 1) == 1u);
    CHECK(g.index(0, 0, 1, 0) == 8u);
    CHECK(g.index(0, 1, 0, 0) == 128u);
    CHECK(g.index(1, 0, 0, 0) == 1024u);
}

TEST_CASE("stats") {
    auto g = make_grid({16, 8, 8, 8}, {1, 1, 1, 1});
    RealField c(g, 2.5);
    auto s = stats(c);
    CHECK(s.min == 2.5);
    CHECK(s.max == 2.5);
    CHECK(s.mean == 2.5);
    CHECK(s.sup_norm == 2.5);

    auto f = sample(g, [](double x1, double, double, double) { return std::sin(2 * M_PI * x1); });
    s = stats(f);
    CHECK(s.max == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.min == doctest::Approx(-1.0).epsilon(1e-15));
    // argmax sits at x1 = 1/4, argmin at x1 = 3/4
    CHECK(g.coord(0, s.argmax / (8 * 8 * 8)) == 0.25);
    CHECK(g.coord(0, s.argmin / (8 * 8 * 8)) == 0.75);
    CHECK(std::abs(s.mean) < 1e-15);

    CHECK_THROWS(stats(RealField{}));
    RealField bad(g, 0.0);
    bad[7] = std::nan("");
    CHECK_THROWS(stats(bad));
}

TEST_CASE("field arithmetic checks grids") {
    auto g = make_grid({8, 8, 8, 8}, {1, 1, 1, 1});
    auto h = make_grid({16, 8, 8, 8}, {1, 1, 1, 1});
    RealField a(g, 1.0), b(h, 1.0);
    CHECK_THROWS(a + b);
    auto c = 2.0 * a + a;
    CHECK(c[5] == 3.0);
}

TEST_CASE("field_io round trip") {
    auto g = make_grid({8, 16, 8, 8}, {1, 2, 1, 0.5});
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N;
    RealField f(g);
    for (auto& v : f) v = N(rng);
    f[3] = 1e-310;  // subnormal survives
    auto p = tmp_path("rt.bin");
    write_field(p, f, {{"note", "x"}});
    nlohmann::json hdr;
    auto r = read_field(p, &hdr);
    CHECK(r.grid() == g);
    CHECK(std::equal(f.begin(), f.end(), r.begin()));
    CHECK(hdr["meta"]["note"] == "x");
    CHECK_NOTHROW(read_field(p, g));
}

TEST_CASE("field_io errors") {
    auto g = make_grid({8, 8, 8, 8}, {1, 1, 1, 1});
    RealField f(g, 1.0);
    auto p = tmp_path("trunc.bin");
    write_field(p, f);
    fs::resize_file(p, fs::file_size(p) - 8);
    CHECK_THROWS_WITH_AS(read_field(p), doctest::Contains("length mismatch"), FieldIoError);

    auto q = tmp_path("dims.bin");
    write_field(q, f);
    CHECK_THROWS_WITH_AS(read_field(q, make_grid({16, 8, 8, 8}, {1, 1, 1, 1})), doctest::Contains("header error"),
                         FieldIoError);

    auto z = tmp_path("garbage.bin");
    std::ofstream(z) << "not json\n";
    CHECK_THROWS_AS(read_field(z), FieldIoError);
    CHECK_THROWS_AS(read_field(tmp_path("missing.bin")), FieldIoError);
}
