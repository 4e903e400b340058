#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "sclock/config.hpp"

using namespace sclock;
namespace fs = std::filesystem;

namespace {
const fs::path kConfigs = SCLOCK_CONFIG_DIR;

fs::path scratch() {
    const auto p = fs::temp_directory_path() / "sclock_cli_test";
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args, const fs::path& err = scratch() / "stderr.txt") {
    const std::string cmd = std::string(SCLOCK_CLI) + " " + args + " > /dev/null 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const std::string& name, const std::string& body) {
    const auto p = scratch() / name;
    std::ofstream(p) << body;
    return p;
}
}  // namespace

TEST_CASE("unknown config fields are rejected", "[cli_runner]") {
    const auto j = config::json::parse(R"({"market": {"spot": 100, "rate": 0.0, "dividend": 0, "repo": 0.01}})");
    CHECK_THROWS_AS(config::parse_run_config(j), config::ConfigError);
    const auto k = config::json::parse(R"({"clock": {"family": "cir", "kappa": 1, "theta": 0.04, "xi": 0.3, "v0": 0.04, "rho": 0}})");
    CHECK_THROWS_AS(config::parse_run_config(k), config::ConfigError);
}

TEST_CASE("clock JSON round-trips", "[cli_runner]") {
    const std::vector<ClockSpec> specs{CirClock{0.6, 0.2, 0.4, 0.18}, SquaredOuClock{0.6, 0.49, 0.42},
                                       MarkovSwitchingClock{{{-1.0, 1.0}, {2.0, -2.0}}, {0.05, 0.4}, {0.5, 0.5}}};
    for (const auto& s : specs) CHECK(digest(config::parse_clock(config::clock_to_json(s))) == digest(s));
}

TEST_CASE("dataset JSON round-trips", "[cli_runner]") {
    const auto d = config::load_dataset((kConfigs / "dataset_cir_synthetic.json").string());
    const auto e = config::parse_dataset(config::dataset_to_json(d));
    REQUIRE(e.vanillas.size() == d.vanillas.size());
    REQUIRE(e.barriers.size() == d.barriers.size());
    for (std::size_t i = 0; i < d.vanillas.size(); ++i) CHECK(e.vanillas[i].value == d.vanillas[i].value);
    for (std::size_t i = 0; i < d.barriers.size(); ++i) CHECK(e.barriers[i].value == d.barriers[i].value);
}

TEST_CASE("repeated runs write identical files", "[cli_runner]") {
    const auto a = scratch() / "a.csv", b = scratch() / "b.csv";
    const auto cfg = (kConfigs / "price_r1.json").string();
    REQUIRE(run("price -c " + cfg + " -o " + a.string()) == 0);
    REQUIRE(run("price -c " + cfg + " -o " + b.string()) == 0);
    const auto text = slurp(a);
    CHECK(text == slurp(b));
    CHECK(text.rfind("# sclock price config_digest=", 0) == 0);
}

TEST_CASE("knocked-out geometry exits with a domain error", "[cli_runner]") {
    const auto cfg = write("ko.json", R"({"command": "price",
        "clock": {"family": "cir", "kappa": 0.6, "theta": 0.2, "xi": 0.4, "v0": 0.18},
        "market": {"spot": 100, "rate": 0.03, "dividend": 0},
        "contracts": [{"kind": "uop", "strike": 100, "upper": 102, "maturity": 1.0}]})");
    const auto err = scratch() / "ko.err";
    CHECK(run("price -c " + cfg.string(), err) == 1);
    CHECK(slurp(err).find("forward") != std::string::npos);
}

TEST_CASE("unknown table and mismatched command exit with 1", "[cli_runner]") {
    CHECK(run("repro-table 6.99") == 1);
    CHECK(run("vanilla -c " + (kConfigs / "price_r1.json").string()) == 1);
    CHECK(run("price") == 1);
}
