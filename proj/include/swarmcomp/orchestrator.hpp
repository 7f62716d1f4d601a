#pragma once

#include <limits>

#include "swarmcomp/consensus.hpp"
#include "swarmcomp/policy.hpp"
#include "swarmcomp/swarm_env.hpp"

namespace sc {

struct RunConfig {
    enum class System { Critic, Swarm, Single };
    enum class PersonalityInit { Uniform, Random };

    System system = System::Swarm;
    int n_bars = 8;
    std::vector<std::string> voices = {"Piano"};
    int iterations = 8;
    int context_window = -1;  // -1 = full draft
    int sensing_radius = 2;
    int peer_range = 2;
    std::string objective = "Compose a coherent piece with inventive, connected motifs.";
    PolicyConfig policy;
    PersonalityInit personality_init = PersonalityInit::Uniform;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty disables persistence
    double beats_per_bar = kDefaultBeatsPerBar;
    PieceMetadata metadata;
    double epsilon_plateau = 1e-3;
    int patience = 3;
    bool use_external_critic = false;  // swarm sigma source (default: pure consensus)
    EnvironmentConfig env;
    RewardWeights reward_weights;
    int max_workers = 0;  // 0 = hardware concurrency

    json to_json() const;
};

struct RunResult {
    Piece best_piece;
    double best_score = -std::numeric_limits<double>::infinity();
    int best_iteration = 0;
    std::vector<double> score_trace;
    // Swarm extras: trait snapshots [t][agent][trait], t = 0..T.
    std::vector<std::vector<std::array<double, 5>>> trait_trajectory;
    std::vector<json> environment_history;
    bool failed = false;
    std::string failure_reason;
    std::string raw_response;  // preserved on single-shot parse failure
    std::vector<std::string> diagnostics;
};

/// Deterministic C-major quarter-note seed: C4 E4 G4 C5 cycled per voice.
Piece seed_piece(int n_bars, const std::vector<std::string>& voices,
                 const PieceMetadata& metadata = {}, double beats_per_bar = kDefaultBeatsPerBar);

/// k = -1 -> all bars; else bars with |j - i| <= k, index-ordered.
std::vector<Bar> extract_context(const Piece& piece, int bar_index, int window);

/// `policy_override` (when non-null) replaces the policy built from
/// config.policy — used to inject scripted policies in tests.
RunResult run_central_critic(const RunConfig& config, Policy* policy_override = nullptr);
RunResult run_swarm(const RunConfig& config, Policy* policy_override = nullptr);
RunResult run_single_shot(const RunConfig& config, Policy* policy_override = nullptr);
RunResult run(const RunConfig& config);

/// Writes iter_{t}/bars.json, agent_states.json, critic_feedback.json (or
/// consensus.json + environment.json) and piece.mid under out_dir.
void persist_iteration(const std::string& out_dir, int iteration, const Piece& piece,
                       const std::string& feedback, const std::vector<AgentState>& states,
                       const json* environment = nullptr, const json* consensus = nullptr);

void persist_final(const std::string& out_dir, const RunResult& result);

}  // namespace sc
