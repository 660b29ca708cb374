#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "lftid/config.hpp"

using namespace lftid;
namespace fs = std::filesystem;

namespace {

const std::string kCli = LFTID_CLI_PATH;
const std::string kConfigs = LFTID_CONFIG_DIR;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Drops the trailing wall-clock column.
std::string without_timing(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("lftid_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d / name;
}

}  // namespace

TEST_CASE("mass-spring config loads") {
    const RunSetup s = load_config(kConfigs + "/mass_spring.yaml");
    CHECK(s.plant.m_x() == 4);
    CHECK(s.plant.m_theta() == 3);
    CHECK(s.plant.basis()[2].rows() == 3);
    CHECK(s.plant.basis()[2].cols() == 1);
    CHECK(s.generator.m_xi() == 4);
    REQUIRE(s.experiment.theta_true);
    CHECK((*s.experiment.theta_true)[2] == doctest::Approx(6.2582));
    CHECK(s.experiment.sigmas.size() == 3);
    CHECK(s.sigma == 0.25);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(load_config("/nonexistent/file.yaml"), ConfigError);
    CHECK_THROWS_AS(parse_config("plant: [1, 2"), ConfigError);
    CHECK_THROWS_AS(parse_config("generator: {}"), ConfigError);
    const std::string good = slurp(kConfigs + "/mass_spring.yaml");
    std::string bad = good;
    bad.replace(bad.find("C_yx: [[0, 0, 100, 0]]"), 22, "C_yx: [[0, 0, 100]]   ");
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    std::string neg = good;
    neg.replace(neg.find("sigma: 0.25"), 11, "sigma: -1.0");
    CHECK_THROWS_AS(parse_config(neg), ConfigError);
}

TEST_CASE("simulate is reproducible and seed-sensitive") {
    const std::string cfg = "--config " + kConfigs + "/mass_spring.yaml";
    const fs::path a = scratch("a.csv"), b = scratch("b.csv"), c = scratch("c.csv");
    REQUIRE(run("simulate " + cfg + " --count 50 --out " + a.string()) == 0);
    REQUIRE(run("simulate " + cfg + " --count 50 --out " + b.string()) == 0);
    REQUIRE(run("simulate " + cfg + " --count 50 --seed 2 --out " + c.string()) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("simulate then identify writes results") {
    const std::string cfg = "--config " + kConfigs + "/mass_spring.yaml";
    const fs::path s = scratch("s.csv"), out = scratch("id");
    REQUIRE(run("simulate " + cfg + " --count 200 --sigma 0 --out " + s.string()) == 0);
    CHECK(run("identify " + cfg + " --samples " + s.string() + " --out " + out.string()) == 0);
    CHECK(fs::exists(out / "theta.csv"));
    CHECK(fs::exists(out / "hbar.csv"));
    CHECK(fs::exists(out / "excitation.txt"));
    CHECK(slurp(out / "excitation.txt").find("PASS block G_zu") != std::string::npos);
}

TEST_CASE("exit codes") {
    CHECK(run("") == 2);
    CHECK(run("simulate") == 2);
    CHECK(run("simulate --config /nonexistent.yaml") == 2);
    CHECK(run("identify --config " + kConfigs + "/mass_spring.yaml --samples /nonexistent.csv") == 2);

    const fs::path s = scratch("few.csv");
    REQUIRE(run("simulate --config " + kConfigs + "/mass_spring.yaml --count 3 --out " + s.string()) == 0);
    CHECK(run("identify --config " + kConfigs + "/mass_spring.yaml --samples " + s.string()) == 4);

    const fs::path d = scratch("dup.csv");
    REQUIRE(run("simulate --config " + kConfigs + "/duplicate_basis.yaml --count 80 --out " + d.string()) == 0);
    CHECK(run("identify --config " + kConfigs + "/duplicate_basis.yaml --samples " + d.string()) == 5);

    const fs::path z = scratch("gzu.csv");
    REQUIRE(run("simulate --config " + kConfigs + "/gzu_zero.yaml --out " + z.string()) == 0);
    CHECK(run("identify --config " + kConfigs + "/gzu_zero.yaml --samples " + z.string()) == 4);

    // The realization keeps the nominal poles as hidden modes for every theta.
    CHECK(run("simulate --config " + kConfigs + "/pole_collision.yaml --count 40") == 3);
    const fs::path p = scratch("pole.csv");
    REQUIRE(run("simulate --config " + kConfigs + "/mass_spring.yaml --count 40 --out " + p.string()) == 0);
    CHECK(run("identify --config " + kConfigs + "/pole_collision.yaml --samples " + p.string()) == 3);
}

TEST_CASE("excitation report for the mass-spring config") {
    const fs::path r = scratch("exc.txt");
    REQUIRE(run("excitation --config " + kConfigs + "/mass_spring.yaml --out " + r.string()) == 0);
    const std::string text = slurp(r);
    CHECK(text.find("PASS block G_zu") != std::string::npos);
    CHECK(text.find("PASS [Utilde") != std::string::npos);
}

TEST_CASE("montecarlo sweep is reproducible") {
    const fs::path a = scratch("mc_a"), b = scratch("mc_b");
    const std::string args = "montecarlo --config " + kConfigs + "/mass_spring.yaml --count 60 --seed 5 --out ";
    REQUIRE(run(args + a.string()) == 0);
    REQUIRE(run(args + b.string()) == 0);
    CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
    CHECK(without_timing(slurp(a / "trials.csv")) == without_timing(slurp(b / "trials.csv")));
}
