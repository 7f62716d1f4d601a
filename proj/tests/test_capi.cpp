#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmcomp.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Calls an API function and converts the (code, string) pair into owned data.
struct ApiResult {
    int code = 0;
    std::string text;
};

template <typename Fn>
ApiResult call(Fn&& fn) {
    char* out = nullptr;
    ApiResult r;
    r.code = fn(&out);
    if (out != nullptr) {
        r.text = out;
        sc_string_free(out);
    }
    return r;
}

json stub_config(int bars, int iterations, unsigned seed) {
    return {{"system", "swarm"},
            {"n_bars", bars},
            {"iterations", iterations},
            {"seed", seed},
            {"policy", {{"kind", "stub"}}}};
}

}  // namespace

TEST_CASE("sc_version and clean error state") {
    REQUIRE(sc_version() != nullptr);
    CHECK(std::strlen(sc_version()) > 0);
    REQUIRE(sc_last_error() != nullptr);
}

TEST_CASE("sc_compose: stub run succeeds and reproduces bit-for-bit") {
    auto cfg = stub_config(4, 2, 11).dump();
    auto r1 = call([&](char** out) { return sc_compose(cfg.c_str(), out); });
    REQUIRE(r1.code == 0);
    json j1 = json::parse(r1.text);
    CHECK(j1["failed"] == false);
    CHECK(j1["best_score"].get<double>() >= 0.0);
    CHECK(j1["best_score"].get<double>() <= 1.0);
    CHECK(j1["score_trace"].size() == 2);
    CHECK(j1.contains("best_piece"));

    auto r2 = call([&](char** out) { return sc_compose(cfg.c_str(), out); });
    REQUIRE(r2.code == 0);
    CHECK(r1.text == r2.text);
}

TEST_CASE("error codes: 1 for bad input, 2 for runtime trouble") {
    auto bad_json = call([](char** out) { return sc_compose("{not json", out); });
    CHECK(bad_json.code == 1);
    CHECK(std::strlen(sc_last_error()) > 0);

    auto bad_system = call([](char** out) {
        return sc_compose(R"({"system":"nonsense"})", out);
    });
    CHECK(bad_system.code == 1);

    auto bad_piece = call([](char** out) { return sc_analyze_musicology("[1,2]", out); });
    CHECK(bad_piece.code == 1);

    // null argument is an input error, not a crash
    auto null_cfg = call([](char** out) { return sc_compose(nullptr, out); });
    CHECK(null_cfg.code == 1);
    CHECK(sc_compose("{}", nullptr) != 0);
}

TEST_CASE("piece handle: json round trip and midi export") {
    auto cfg = stub_config(4, 1, 3).dump();
    auto run = call([&](char** out) { return sc_compose(cfg.c_str(), out); });
    REQUIRE(run.code == 0);
    std::string piece_json = json::parse(run.text)["best_piece"].dump();

    sc_piece* piece = nullptr;
    REQUIRE(sc_piece_from_json(piece_json.c_str(), &piece) == 0);
    REQUIRE(piece != nullptr);

    auto round = call([&](char** out) { return sc_piece_to_json(piece, out); });
    REQUIRE(round.code == 0);
    CHECK(json::parse(round.text) == json::parse(piece_json));

    fs::path midi = fs::temp_directory_path() / "swarmcomp_capi_test.mid";
    REQUIRE(sc_piece_to_midi_file(piece, midi.string().c_str()) == 0);
    std::ifstream in(midi, std::ios::binary);
    char magic[4] = {};
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "MThd");
    sc_piece_free(piece);
    fs::remove(midi);

    sc_piece* bad = nullptr;
    CHECK(sc_piece_from_json("{\"x\":1}", &bad) == 1);
    CHECK(bad == nullptr);
}

TEST_CASE("analysis entry points run end to end on a composed piece") {
    auto cfg = stub_config(8, 1, 5).dump();
    auto run = call([&](char** out) { return sc_compose(cfg.c_str(), out); });
    REQUIRE(run.code == 0);
    std::string piece = json::parse(run.text)["best_piece"].dump();

    auto mus = call([&](char** out) { return sc_analyze_musicology(piece.c_str(), out); });
    REQUIRE(mus.code == 0);
    CHECK(json::parse(mus.text).is_object());

    auto graph = call([&](char** out) {
        return sc_analyze_graph(piece.c_str(), R"({"n_null":5,"seed":1})", out);
    });
    REQUIRE(graph.code == 0);
    CHECK(json::parse(graph.text).is_object());

    auto multi = call([&](char** out) {
        return sc_analyze_multiscale(piece.c_str(), R"({"n_null":5,"seed":1})", out);
    });
    REQUIRE(multi.code == 0);
    CHECK(json::parse(multi.text).contains("levels"));
}

TEST_CASE("sc_equilibrium accepts csv and json trajectories") {
    std::string csv = "iteration,agent,trait,value\n";
    for (int t = 0; t < 6; ++t)
        for (int a = 1; a <= 4; ++a)
            csv += std::to_string(t) + "," + std::to_string(a) + ",risk_taking," +
                   std::to_string(0.5 + 0.05 * t + 0.01 * a) + "\n";
    auto r = call([&](char** out) { return sc_equilibrium(csv.c_str(), "csv", out); });
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.text).contains("fit"));

    auto bad = call([&](char** out) { return sc_equilibrium(csv.c_str(), "json", out); });
    CHECK(bad.code == 1);
}

TEST_CASE("sc_particles runs a short experiment") {
    auto r = call([](char** out) {
        return sc_particles(R"({"rule":"lj","steps":30,"seed":2,"n":64,"rho":0.8,"stride":10})",
                            out);
    });
    REQUIRE(r.code == 0);
    json j = json::parse(r.text);
    CHECK(j["rule"] == "lj");
    CHECK(j["n"] == 64);

    auto bad = call([](char** out) { return sc_particles(R"({"rule":"plasma"})", out); });
    CHECK(bad.code == 1);
}
