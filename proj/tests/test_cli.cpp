#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef SWARMCOMP_CLI_PATH
#error "SWARMCOMP_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string out;
};

CmdResult run_cli(const std::string& args, const fs::path& workdir) {
    fs::path log = workdir / "cli_output.txt";
    std::string cmd = "cd '" + workdir.string() + "' && '" + SWARMCOMP_CLI_PATH + "' " + args +
                      " >'" + log.string() + "' 2>&1";
    int status = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream buf;
    buf << in.rdbuf();
    r.out = buf.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& tag) {
    fs::path d = fs::temp_directory_path() / ("swarmcomp_cli_" + tag);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("cli: bad invocations exit 1 with a message") {
    auto dir = fresh_dir("badflags");
    auto unknown = run_cli("compose --definitely-not-a-flag", dir);
    CHECK(unknown.exit_code == 1);
    CHECK(!unknown.out.empty());

    auto bad_system = run_cli("compose --system nonsense --out run", dir);
    CHECK(bad_system.exit_code == 1);

    auto no_sub = run_cli("", dir);
    CHECK(no_sub.exit_code != 0);
    fs::remove_all(dir);
}

TEST_CASE("cli compose: artifacts, manifest and reproducibility") {
    auto dir = fresh_dir("compose");
    auto r1 = run_cli("compose --system swarm --bars 4 --iterations 2 --seed 9 --out run1", dir);
    REQUIRE(r1.exit_code == 0);

    fs::path run1 = dir / "run1";
    REQUIRE(fs::exists(run1 / "result.json"));
    REQUIRE(fs::exists(run1 / "manifest.json"));
    REQUIRE(fs::exists(run1 / "best_composition.json"));

    json result = json::parse(slurp(run1 / "result.json"));
    CHECK(result["failed"] == false);
    CHECK(result["score_trace"].size() == 2);

    json manifest = json::parse(slurp(run1 / "manifest.json"));
    CHECK(manifest["schema_version"] == 1);
    CHECK(manifest.contains("command"));
    CHECK(manifest.contains("config"));
    CHECK(manifest["seeds"]["run_seed"] == 9);
    CHECK(manifest.contains("timestamps"));

    SUBCASE("same flags give byte-identical artifacts") {
        auto r2 = run_cli("compose --system swarm --bars 4 --iterations 2 --seed 9 --out run2",
                          dir);
        REQUIRE(r2.exit_code == 0);
        CHECK(slurp(dir / "run2" / "result.json") == slurp(run1 / "result.json"));
        CHECK(slurp(dir / "run2" / "best_composition.json") ==
              slurp(run1 / "best_composition.json"));
    }
    SUBCASE("re-running from the manifest config reproduces the run") {
        std::ofstream(dir / "replay.json") << manifest["config"].dump();
        auto r3 = run_cli("compose --config replay.json --out run3", dir);
        REQUIRE(r3.exit_code == 0);
        CHECK(slurp(dir / "run3" / "result.json") == slurp(run1 / "result.json"));
    }
    fs::remove_all(dir);
}

TEST_CASE("cli compose: flag > config file > default precedence") {
    auto dir = fresh_dir("precedence");
    std::ofstream(dir / "cfg.json") << R"({"n_bars": 6, "seed": 33})";
    auto r = run_cli("compose --config cfg.json --bars 5 --iterations 1 --out run", dir);
    REQUIRE(r.exit_code == 0);
    json manifest = json::parse(slurp(dir / "run" / "manifest.json"));
    CHECK(manifest["config"]["n_bars"] == 5);        // flag wins
    CHECK(manifest["config"]["seed"] == 33);         // config file beats default
    CHECK(manifest["config"]["system"] == "swarm");  // untouched default
    fs::remove_all(dir);
}

TEST_CASE("cli analyze: stdout and file output with manifest") {
    auto dir = fresh_dir("analyze");
    auto compose = run_cli("compose --bars 8 --iterations 1 --seed 4 --out run", dir);
    REQUIRE(compose.exit_code == 0);

    auto to_stdout = run_cli("analyze musicology --in run/best_composition.json", dir);
    REQUIRE(to_stdout.exit_code == 0);
    CHECK(json::parse(to_stdout.out).is_object());

    auto to_file = run_cli("analyze graph --in run/best_composition.json --out graph.json", dir);
    REQUIRE(to_file.exit_code == 0);
    CHECK(json::parse(slurp(dir / "graph.json")).is_object());
    CHECK(fs::exists(dir / "graph.json.manifest.json"));

    auto missing = run_cli("analyze musicology --in nope.json", dir);
    CHECK(missing.exit_code != 0);
    fs::remove_all(dir);
}

TEST_CASE("cli equilibrium and particles round trip") {
    auto dir = fresh_dir("eqparts");
    std::ofstream traits(dir / "traits.csv");
    traits << "iteration,agent,trait,value\n";
    for (int t = 0; t < 6; ++t)
        for (int a = 1; a <= 4; ++a)
            traits << t << "," << a << ",risk_taking," << 0.5 + 0.04 * t + 0.01 * a << "\n";
    traits.close();
    auto eq = run_cli("equilibrium --traits traits.csv", dir);
    REQUIRE(eq.exit_code == 0);
    CHECK(json::parse(eq.out).contains("fit"));

    auto parts = run_cli("particles --rule lj --steps 20 --seed 2 --out lab", dir);
    REQUIRE(parts.exit_code == 0);
    CHECK(fs::exists(dir / "lab" / "config.csv"));
    CHECK(fs::exists(dir / "lab" / "gr.csv"));
    CHECK(fs::exists(dir / "lab" / "series.csv"));
    CHECK(fs::exists(dir / "lab" / "manifest.json"));
    fs::remove_all(dir);
}
