#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmcomp/orchestrator.hpp"

using namespace sc;
using namespace sc::test;

namespace fs = std::filesystem;

namespace {

RunConfig stub_config(RunConfig::System system, int bars, int iterations, std::uint64_t seed) {
    RunConfig c;
    c.system = system;
    c.n_bars = bars;
    c.iterations = iterations;
    c.seed = seed;
    c.policy.kind = PolicyConfig::Kind::Stub;
    return c;
}

/// Wraps the stub policy but replaces the critic score with a scripted trace.
struct ScriptedCritic : Policy {
    std::vector<double> trace;
    std::size_t at = 0;
    std::unique_ptr<Policy> inner = make_stub_policy();

    EnhancedBarProposal compose(const AgentState& s, const PersonalityVector& p,
                                const LocalContext& c, const SensedSignals& g,
                                const std::string& o, std::uint64_t seed) override {
        return inner->compose(s, p, c, g, o, seed);
    }
    PieceAssessment assess_piece(const Piece&, const std::string&) override {
        double sigma = trace[std::min(at, trace.size() - 1)];
        ++at;
        return {sigma, "scripted"};
    }
    std::string propose_local_objective(const AgentState& s, const std::string& f,
                                        const std::string& g, int b) override {
        return inner->propose_local_objective(s, f, g, b);
    }
    DetailedPeerAssessment assess_peer(const Piece& p, int r, int t,
                                       const std::string& o) override {
        return inner->assess_peer(p, r, t, o);
    }
    std::array<double, 5> personality_deltas(const PersonalityVector& p, const std::string& f,
                                             double r, const std::string& o,
                                             std::uint64_t seed) override {
        return inner->personality_deltas(p, f, r, o, seed);
    }
    std::string compose_single_shot(int n, const std::vector<std::string>& v,
                                    const PieceMetadata& m, const std::string& o,
                                    std::uint64_t seed) override {
        return inner->compose_single_shot(n, v, m, o, seed);
    }
};

}  // namespace

TEST_CASE("seed_piece is a deterministic C-major quarter grid") {
    Piece piece = seed_piece(1, {"Piano"});
    REQUIRE(piece.bars.size() == 1);
    REQUIRE(piece.bars[0].voices.size() == 1);
    const auto& notes = piece.bars[0].voices[0].notes;
    REQUIRE(notes.size() == 4);
    for (const auto& note : notes) CHECK(note.duration == doctest::Approx(1.0));

    Piece eight = seed_piece(8, {"Piano", "Bass"});
    CHECK(validate_piece(eight, {"Piano", "Bass"}).empty());
    CHECK(seed_piece(8, {"Piano", "Bass"}) == eight);
}

TEST_CASE("extract_context windows") {
    Piece piece = seed_piece(8, {"Piano"});
    CHECK(extract_context(piece, 1, -1).size() == 8);

    auto edge = extract_context(piece, 1, 1);
    REQUIRE(edge.size() == 2);
    CHECK(edge[0].bar_number == 1);
    CHECK(edge[1].bar_number == 2);

    auto mid = extract_context(piece, 4, 2);
    REQUIRE(mid.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(mid[i].bar_number == i + 2);
}

TEST_CASE("central critic: determinism, best tracking, plateau") {
    SUBCASE("T=1 stub run is deterministic with a length-1 trace") {
        auto a = run_central_critic(stub_config(RunConfig::System::Critic, 4, 1, 5));
        auto b = run_central_critic(stub_config(RunConfig::System::Critic, 4, 1, 5));
        CHECK(a.score_trace.size() == 1);
        CHECK(a.best_piece == b.best_piece);
        CHECK(a.best_score == doctest::Approx(b.best_score));
    }

    SUBCASE("rising trace keeps the last iterate, falling keeps the first") {
        RunConfig config = stub_config(RunConfig::System::Critic, 2, 3, 1);
        config.patience = 100;

        ScriptedCritic rising;
        rising.trace = {0.1, 0.5, 0.9};
        auto up = run_central_critic(config, &rising);
        CHECK(up.best_score == doctest::Approx(0.9));
        CHECK(up.best_iteration == 3);

        ScriptedCritic falling;
        falling.trace = {0.9, 0.5, 0.1};
        auto down = run_central_critic(config, &falling);
        CHECK(down.best_score == doctest::Approx(0.9));
        CHECK(down.best_iteration == 1);

        // ties keep the later iterate
        ScriptedCritic flat;
        flat.trace = {0.5, 0.5, 0.5};
        auto tied = run_central_critic(config, &flat);
        CHECK(tied.best_iteration == static_cast<int>(tied.score_trace.size()));
    }

    SUBCASE("plateau: S = [0.5, 0.5, 0.5] with patience 2 stops after iteration 3") {
        RunConfig config = stub_config(RunConfig::System::Critic, 2, 10, 3);
        config.patience = 2;
        config.epsilon_plateau = 1e-3;
        ScriptedCritic flat;
        flat.trace = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
        auto result = run_central_critic(config, &flat);
        CHECK(result.score_trace.size() == 3);
    }
}

TEST_CASE("swarm run: shapes, bounds and reproducibility") {
    RunConfig config = stub_config(RunConfig::System::Swarm, 8, 8, 7);
    config.patience = 1000;  // exercise all iterations for the shape contract
    auto result = run_swarm(config);

    SUBCASE("trait trajectory tensor is (T+1) x N x 5 within bounds") {
        REQUIRE(result.trait_trajectory.size() == result.score_trace.size() + 1);
        for (const auto& snapshot : result.trait_trajectory) {
            REQUIRE(snapshot.size() == 8);
            for (const auto& agent : snapshot)
                for (double v : agent) {
                    CHECK(v >= 0.1);
                    CHECK(v <= 0.9);
                }
        }
    }
    SUBCASE("sigma within [0,1] and best is the max") {
        double best = -1.0;
        for (double s : result.score_trace) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
            best = std::max(best, s);
        }
        CHECK(result.best_score == doctest::Approx(best));
    }
    SUBCASE("bit-reproducible across invocations") {
        auto again = run_swarm(config);
        CHECK(again.best_piece == result.best_piece);
        CHECK(again.score_trace == result.score_trace);
        REQUIRE(again.trait_trajectory.size() == result.trait_trajectory.size());
        for (std::size_t t = 0; t < again.trait_trajectory.size(); ++t)
            CHECK(again.trait_trajectory[t] == result.trait_trajectory[t]);
    }
    SUBCASE("total decay empties the pheromone map each iteration") {
        RunConfig harsh = config;
        harsh.env.lambda_decay = 1.0;
        harsh.env.strength_floor = 0.01;
        auto r = run_swarm(harsh);  // must complete without corruption
        CHECK(!r.failed);
    }
}

TEST_CASE("single shot: one call, valid piece, raw preserved on failure") {
    auto result = run_single_shot(stub_config(RunConfig::System::Single, 8, 1, 11));
    CHECK(!result.failed);
    CHECK(result.score_trace.size() == 1);
    CHECK(result.best_piece.bars.size() == 8);
    CHECK(validate_piece(result.best_piece, {"Piano"}).empty());
}

TEST_CASE("persistence layout and round trips") {
    auto dir = (fs::temp_directory_path() / "sc_orch_persist").string();
    fs::remove_all(dir);
    RunConfig config = stub_config(RunConfig::System::Swarm, 4, 3, 2);
    config.patience = 1000;
    config.out_dir = dir;
    auto result = run_swarm(config);

    int iters = static_cast<int>(result.score_trace.size());
    for (int t = 1; t <= iters; ++t) {
        auto iter_dir = fs::path(dir) / ("iter_" + std::to_string(t));
        CHECK(fs::exists(iter_dir / "bars.json"));
        CHECK(fs::exists(iter_dir / "agent_states.json"));
        CHECK(fs::exists(iter_dir / "consensus.json"));
        CHECK(fs::exists(iter_dir / "environment.json"));
        CHECK(fs::exists(iter_dir / "piece.mid"));

        // bars.json re-imports to a valid piece
        Piece piece = piece_from_json(json::parse(read_file((iter_dir / "bars.json").string())));
        CHECK(validate_piece(piece, {"Piano"}).empty());
    }

    CHECK(fs::exists(fs::path(dir) / "best_composition.json"));
    CHECK(fs::exists(fs::path(dir) / "score_history.csv"));
    CHECK(fs::exists(fs::path(dir) / "trait_trajectories.csv"));

    auto best = json::parse(read_file((fs::path(dir) / "best_composition.json").string()));
    double max_sigma = -1.0;
    for (double s : result.score_trace) max_sigma = std::max(max_sigma, s);
    CHECK(best["best_score"].get<double>() == doctest::Approx(max_sigma));
    fs::remove_all(dir);
}

TEST_CASE("best piece re-scores to best_score under the stub assessor") {
    auto result = run_central_critic(stub_config(RunConfig::System::Critic, 4, 4, 9));
    auto re = stub_assess_piece(result.best_piece, stub_config(RunConfig::System::Critic, 4, 4, 9)
                                                       .objective);
    CHECK(re.score == doctest::Approx(result.best_score).epsilon(1e-12));
}
