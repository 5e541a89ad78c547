#include "support.hpp"

#include "varorder/cli.hpp"
#include "varorder/error.hpp"
#include "varorder/laplace_domain.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace varorder;
using testing::simple_spec;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string write_problem(const testing::TempDir& dir, const std::string& name, const ProblemSpec& s)
{
    const auto path = dir.file(name);
    save_problem(s, path);
    return path;
}

nlohmann::json read_json(const std::string& path) { return nlohmann::json::parse(testing::read_text(path)); }

}  // namespace

TEST_CASE("grid syntax")
{
    const auto g = parse_grid("1e-6:1e-2:log5");
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(1e-6));
    CHECK(g[1] == doctest::Approx(1e-5));
    CHECK(g.back() == doctest::Approx(1e-2));
    const auto l = parse_grid("0:1:lin3");
    CHECK(l == std::vector<double>{0.0, 0.5, 1.0});
    CHECK_THROWS_AS(parse_grid("1:0:log3"), InputError);
    CHECK_THROWS_AS(parse_grid("0:1:log3"), InputError);
    CHECK_THROWS_AS(parse_grid("1:2:cube3"), InputError);
    CHECK_THROWS_AS(parse_grid("1:2"), InputError);
}

TEST_CASE("csv round trip and errors")
{
    testing::TempDir dir;
    CsvTable t;
    t.header = {"p", "flux"};
    t.columns = {{1e-6, 0.1}, {-1.0 / 3.0, 2.0}};
    testing::write_text(dir.file("a.csv"), format_csv(t));
    const auto r = read_csv(dir.file("a.csv"));
    CHECK(r.header == t.header);
    CHECK(r.columns == t.columns);
    CHECK(r.column("flux") == 1);
    CHECK(r.column("nope") == -1);

    testing::write_text(dir.file("bad.csv"), "p,flux\n1,2\n3\n");
    CHECK_THROWS_AS(read_csv(dir.file("bad.csv")), InputError);
    testing::write_text(dir.file("nan.csv"), "p,flux\n1,abc\n");
    CHECK_THROWS_AS(read_csv(dir.file("nan.csv")), InputError);
}

TEST_CASE("sha256 of a known string")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("forward in the Laplace domain")
{
    testing::TempDir dir;
    const auto prob = write_problem(dir, "c.json", simple_spec({0, 1}, {0.5}));
    const auto out = dir.file("f.csv");
    const auto r = cli({"forward", prob, "--mode", "laplace", "--p-grid", "1e-6:1e-2:log32", "-o", out});
    REQUIRE(r.code == 0);
    const auto t = read_csv(out);
    CHECK(t.rows() == 32);
    CHECK(t.header == std::vector<std::string>{"p", "flux_left", "flux_right"});
    const auto m = read_json(out + ".manifest.json");
    CHECK(m["output"]["sha256"] == sha256_hex(testing::read_text(out)));
    CHECK(m["command"] == "forward");
}

TEST_CASE("forward exit codes")
{
    testing::TempDir dir;
    CHECK(cli({"forward", dir.file("missing.json"), "-o", dir.file("x.csv")}).code == exit_input);
    CHECK_FALSE(std::filesystem::exists(dir.file("x.csv")));
    CHECK(cli({"nonsense"}).code == exit_input);
}

TEST_CASE("forward in the time domain")
{
    testing::TempDir dir;
    auto s = simple_spec({0, 1}, {0.5});
    s.discretization.grid_per_interval = 256;
    s.discretization.eigenpairs = 16;
    const auto prob = write_problem(dir, "c.json", s);
    const auto out = dir.file("t.csv");
    const auto r = cli({"forward", prob, "--mode", "time", "--t-grid", "0.1:100:log25", "-o", out});
    REQUIRE(r.code == 0);
    const auto t = read_csv(out);
    CHECK(t.rows() == 25);
    CHECK(t.header.front() == "t");
}

TEST_CASE("asymptotics report")
{
    testing::TempDir dir;
    const auto prob = write_problem(dir, "c.json", simple_spec({0, 1}, {0.5}));
    const auto out = dir.file("a.json");
    REQUIRE(cli({"asymptotics", prob, "--verify", "-o", out}).code == 0);
    const auto j = read_json(out);
    CHECK(j["C0"].get<double>() == doctest::Approx(-1.0).epsilon(1e-8));
    REQUIRE(j["terms"].size() == 1);
    CHECK(j["terms"][0]["alpha"].get<double>() == 0.5);
    CHECK(j["terms"][0]["C"].get<double>() == doctest::Approx(-1.0 / 3.0).epsilon(1e-8));
    CHECK(j["verify"]["slope"].get<double>() >= 0.95);

    testing::write_text(dir.file("bad.json"), R"({"order": {"breakpoints": [0, 0.5, 1], "values": [0.4, 0.9]},
        "medium": {"rho": {"const": 1}, "sigma": {"const": 1}}, "excitation": {"coeffs": [1]}})");
    const auto r = cli({"asymptotics", dir.file("bad.json"), "-o", dir.file("b.json")});
    CHECK(r.code == exit_input);
    CHECK(r.err.find("max α ≥ 2·min α") != std::string::npos);
}

TEST_CASE("verify")
{
    testing::TempDir dir;
    SUBCASE("admissible problems pass")
    {
        std::mt19937_64 rng(83);
        for (int k = 0; k < 2; ++k) {
            const auto prob = write_problem(dir, "r.json", testing::random_spec(rng, 4));
            const auto r = cli({"verify", prob});
            CHECK(r.code == 0);
            CHECK(r.out.find("FAIL") == std::string::npos);
        }
    }
    SUBCASE("negative sigma is an input error")
    {
        const auto path = dir.file("neg.json");
        testing::write_text(path, R"({"order": {"breakpoints": [0, 1], "values": [0.5]},
            "medium": {"rho": {"const": 1}, "sigma": {"mesh": [0, 1], "poly_coeffs": [[1, -2]]}},
            "excitation": {"coeffs": [1]}})");
        CHECK(cli({"verify", path}).code == exit_input);
    }
    SUBCASE("no interfaces")
    {
        const auto prob = write_problem(dir, "c.json", simple_spec({0, 1}, {0.5}));
        const auto out = dir.file("v.json");
        const auto r = cli({"verify", prob, "-o", out});
        CHECK(r.code == 0);
        CHECK(r.out.find("vacuous") != std::string::npos);
    }
}

TEST_CASE("invert")
{
    testing::TempDir dir;
    const auto s = simple_spec({0, 0.5, 1}, {0.5, 0.7});
    const auto prob = write_problem(dir, "two.json", s);
    const auto data = dir.file("data.csv");
    REQUIRE(cli({"forward", prob, "--p-grid", "1e-6:1e-3:log31", "-o", data}).code == 0);

    testing::write_text(dir.file("medium.json"), R"({"medium": {"rho": {"const": 1}, "sigma": {"const": 1}},
        "excitation": {"coeffs": [1], "side": "left"}})");

    SUBCASE("known medium")
    {
        const auto out = dir.file("inv.json");
        const auto r = cli({"--threads", "4", "invert", data, "--medium", dir.file("medium.json"), "-o", out});
        REQUIRE(r.code == 0);
        const auto j = read_json(out);
        const auto bp = j["recovered"]["breakpoints_hat"].get<std::vector<double>>();
        REQUIRE(bp.size() == 3);
        CHECK(std::abs(bp[1] - 0.5) < 1e-2);
    }
    SUBCASE("range only")
    {
        const auto out = dir.file("range.json");
        REQUIRE(cli({"--threads", "4", "invert", data, "--medium", "none", "-o", out}).code == 0);
        const auto j = read_json(out);
        CHECK_FALSE(j["recovered"].contains("breakpoints_hat"));
        const auto range = j["recovered"]["range_hat"].get<std::vector<double>>();
        REQUIRE(range.size() == 2);
        CHECK(std::abs(range[0] - 0.5) < 2e-2);
        CHECK(std::abs(range[1] - 0.7) < 2e-2);
    }
    SUBCASE("malformed data")
    {
        testing::write_text(dir.file("bad.csv"), "p,flux_left\n1e-6,1,2\n");
        const auto out = dir.file("bad.json");
        CHECK(cli({"invert", dir.file("bad.csv"), "--medium", "none", "-o", out}).code == exit_input);
        CHECK_FALSE(std::filesystem::exists(out));
    }
}

TEST_CASE("outputs are deterministic")
{
    testing::TempDir dir;
    const auto prob = write_problem(dir, "two.json", simple_spec({0, 0.5, 1}, {0.5, 0.7}));
    const auto data = dir.file("data.csv");
    REQUIRE(cli({"forward", prob, "--p-grid", "1e-6:1e-3:log31", "-o", data}).code == 0);
    std::string first;
    for (const char* threads : {"1", "4"}) {
        const auto out = dir.file(std::string("inv") + threads + ".json");
        REQUIRE(cli({"--threads", threads, "invert", data, "--medium", "none", "-o", out}).code == 0);
        const auto text = testing::read_text(out);
        if (first.empty())
            first = text;
        else
            CHECK(text == first);
    }
    const auto a = dir.file("a.csv"), b = dir.file("b.csv");
    REQUIRE(cli({"forward", prob, "--p-grid", "1e-4:1:log7", "-o", a}).code == 0);
    REQUIRE(cli({"--threads", "3", "forward", prob, "--p-grid", "1e-4:1:log7", "-o", b}).code == 0);
    CHECK(testing::read_text(a) == testing::read_text(b));
}
