#include "io.hpp"

#include "uot/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace uot;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("uot_cli_tests_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write(const std::string& name, const json& j)
{
    const fs::path p = scratch() / name;
    io::write_json(p.string(), j);
    return p.string();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Runs the CLI with stdout captured to `capture`; returns the exit status.
int run_cli(const std::string& args, const std::string& capture = "stdout.txt", const std::string& env = "")
{
    const std::string cmd = env + " " + std::string(UOT_CLI) + " " + args + " > " + (scratch() / capture).string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json circle_measure(std::vector<double> th, std::vector<double> m)
{
    json pts = json::array();
    for (double t : th) pts.push_back(json::array({t}));
    return {{"space", {{"kind", "circle"}}}, {"points", pts}, {"masses", m}};
}

} // namespace

TEST_CASE("JSON numbers and round trips")
{
    CHECK(io::number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(io::number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(std::isinf(io::to_number(json("inf"))));
    CHECK(io::to_number(json(1.5)) == 1.5);

    const DiscreteMeasure m(Space::sphere(2, 2.0), {Eigen::Vector3d(0, 0, 2), Eigen::Vector3d(2, 0, 0)}, {1.0, 0.5});
    const DiscreteMeasure back = io::measure_from_json(io::to_json(m));
    CHECK(back.space == m.space);
    CHECK(back.masses == m.masses);
    CHECK((back.points[1] - m.points[1]).norm() == 0.0);

    const GridDensity d(Grid1D::interval(-1.0, 1.0, 5), {1, 2, 3, 4, 5});
    const GridDensity dback = io::grid_density_from_json(io::to_json(d));
    CHECK(dback.grid == d.grid);
    CHECK(dback.values == d.values);
}

TEST_CASE("schema validation reports JSON pointers")
{
    CHECK(io::validate_measure(circle_measure({0.0, 1.0}, {1.0, 2.0})).empty());

    const auto neg = io::validate_measure(circle_measure({0.0, 1.0}, {1.0, -2.0}));
    REQUIRE(neg.size() == 1);
    CHECK(neg[0].pointer == "/masses/1");

    json sphere = {{"space", {{"kind", "sphere"}, {"dim", 2}, {"radius", 1.0}}},
                   {"points", {{1.0, 0.0, 0.0}, {0.0, 1.0 + 1e-8, 0.0}}},
                   {"masses", {1.0, 1.0}}};
    const auto off = io::validate_measure(sphere);
    REQUIRE(off.size() == 1);
    CHECK(off[0].pointer == "/points/1");
    sphere["points"][1][1] = 1.0 + 1e-11;
    CHECK(io::validate_measure(sphere).empty());

    CHECK_FALSE(io::validate_grid_field({{"grid", {{"kind", "circle"}, {"n", 4}}}, {"values", {1, 2, 3}}}).empty());
    CHECK(io::detect_kind(json{{"phi", json::array()}, {"lam", json::array()}}) == io::DocumentKind::Map);
    CHECK_THROWS_AS(io::load_json("{not json"), Error);
    CHECK_THROWS_AS(io::load_json((scratch() / "missing.json").string()), Error);
}

TEST_CASE("CLI commands")
{
    SUBCASE("twodirac closed form")
    {
        CHECK(run_cli("twodirac --a 1 --b 1 --d 1.0471975512 --no-timestamp --out " + (scratch() / "td.json").string()) == 0);
        const json r = io::load_json((scratch() / "td.json").string());
        CHECK(r["schema"] == "uot-report/1");
        CHECK(r["config"]["command"] == "twodirac");
        CHECK(r["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("solve on identical measures")
    {
        const std::string m = write("m.json", circle_measure({0.0, 1.0, 2.5}, {1.0, 0.4, 0.7}));
        CHECK(run_cli("solve --rho0 " + m + " --rho1 " + m + " --no-timestamp", "solve.json") == 0);
        const json r = io::load_json((scratch() / "solve.json").string());
        CHECK(r["value"].get<double>() <= 1e-6);
        CHECK(r["admissible"] == true);
    }
    SUBCASE("mtw strong condition")
    {
        CHECK(run_cli("mtw --space sphere --radius 0.5 --no-timestamp", "mtw.json") == 0);
        const json r = io::load_json((scratch() / "mtw.json").string());
        CHECK(r["strong"] == true);
        CHECK(r["samples"].size() == 201);
    }
    SUBCASE("validate exit codes")
    {
        const std::string good = write("good.json", circle_measure({0.0}, {1.0}));
        const std::string bad = write("bad.json", circle_measure({0.0, 1.0}, {1.0, -1.0}));
        CHECK(run_cli("validate " + good) == 0);
        CHECK(run_cli("validate " + bad, "bad_report.json") == 1);
        const json r = io::load_json((scratch() / "bad_report.json").string());
        CHECK(r["violations"][0]["pointer"] == "/masses/1");
        CHECK(run_cli("validate " + (scratch() / "nope.json").string()) == 1);
    }
    SUBCASE("error exit codes")
    {
        json map = {{"grid", {{"kind", "circle"}, {"n", 64}}}, {"phi", json::array()}, {"lam", json::array()}};
        for (int i = 0; i < 64; ++i) {
            map["phi"].push_back(std::numbers::pi * i / 64); // squeezes onto half the circle
            map["lam"].push_back(1.0);
        }
        CHECK(run_cli("polar --map " + write("degenerate_map.json", map), "err.json") == 2);
        const json e = io::load_json((scratch() / "err.json").string());
        CHECK(e["error"]["kind"] == "admissibility");
        CHECK(run_cli("solve --rho0 missing.json --rho1 missing.json") == 1);
        CHECK(run_cli("solve --rho0") == 1);
    }
    SUBCASE("determinism and rerun")
    {
        const std::string a = write("a.json", circle_measure({0.0, 1.0, 2.0}, {1.0, 0.5, 0.2}));
        const std::string b = write("b.json", circle_measure({0.3, 1.1}, {0.4, 1.5}));
        const std::string args = "solve --rho0 " + a + " --rho1 " + b + " --no-timestamp";
        CHECK(run_cli(args, "run1.json") == 0);
        CHECK(run_cli(args, "run2.json") == 0);
        CHECK(slurp(scratch() / "run1.json") == slurp(scratch() / "run2.json"));
        CHECK(run_cli("rerun " + (scratch() / "run1.json").string() + " --no-timestamp", "run3.json") == 0);
        CHECK(slurp(scratch() / "run1.json") == slurp(scratch() / "run3.json"));

        const std::string fd = "mtw-fd --space sphere --radius 0.5 --trials 4 --seed 3 --no-timestamp";
        CHECK(run_cli(fd, "fd1.json") == 0);
        CHECK(run_cli(fd, "fd_serial.json", "UOT_THREADS=1") == 0);
        CHECK(slurp(scratch() / "fd1.json") == slurp(scratch() / "fd_serial.json"));
    }
}
