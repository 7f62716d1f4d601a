#include "swarmcomp/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <fstream>
#include <thread>

#include "swarmcomp/rng.hpp"

namespace fs = std::filesystem;

namespace sc {
namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Fan out fn(0..n-1) over a bounded pool; each task owns slot i, so the
/// result is independent of scheduling.
void parallel_for(int n, int max_workers, const std::function<void(int)>& fn) {
    int workers = max_workers > 0 ? max_workers
                                  : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::string system_name(RunConfig::System s) {
    switch (s) {
        case RunConfig::System::Critic: return "critic";
        case RunConfig::System::Swarm: return "swarm";
        case RunConfig::System::Single: return "single";
    }
    return "swarm";
}

void check_config(const RunConfig& config, RunConfig::System expected) {
    if (config.system != expected)
        throw std::invalid_argument("run dispatched to the wrong system: " +
                                    system_name(config.system));
    if (config.n_bars < 1) throw std::invalid_argument("n_bars must be >= 1");
    if (config.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (config.context_window < -1) throw std::invalid_argument("context window must be >= -1");
    if (config.voices.empty()) throw std::invalid_argument("at least one voice is required");
}

std::vector<PersonalityVector> init_personalities(const RunConfig& config) {
    std::vector<PersonalityVector> out(static_cast<std::size_t>(config.n_bars));
    if (config.personality_init == RunConfig::PersonalityInit::Random) {
        auto rng = make_rng(config.seed, "personality-init");
        std::uniform_real_distribution<double> traits(0.1, 0.9);
        for (auto& p : out) {
            std::array<double, 5> v{};
            for (double& x : v) x = traits(rng);
            p = PersonalityVector::from_values(v);
        }
    }
    return out;
}

std::vector<std::array<double, 5>> snapshot_traits(const std::vector<PersonalityVector>& ps) {
    std::vector<std::array<double, 5>> out;
    out.reserve(ps.size());
    for (const auto& p : ps) out.push_back(p.values());
    return out;
}

LocalContext make_context(const Piece& piece, const RunConfig& config, int bar_number,
                          int window) {
    LocalContext ctx;
    ctx.bars = extract_context(piece, bar_number, window);
    ctx.bar_number = bar_number;
    ctx.key = piece.metadata.key;
    ctx.voices = config.voices;
    ctx.beats_per_bar = config.beats_per_bar;
    return ctx;
}

void track_best(RunResult& result, const Piece& piece, double sigma, int iteration) {
    if (sigma >= result.best_score) {  // ties keep the later iterate
        result.best_score = sigma;
        result.best_piece = piece;
        result.best_iteration = iteration;
    }
}

}  // namespace

json RunConfig::to_json() const {
    json j;
    j["system"] = system_name(system);
    j["n_bars"] = n_bars;
    j["voices"] = voices;
    j["iterations"] = iterations;
    j["context_window"] = context_window;
    j["sensing_radius"] = sensing_radius;
    j["peer_range"] = peer_range;
    j["objective"] = objective;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["beats_per_bar"] = beats_per_bar;
    j["personality_init"] =
        personality_init == PersonalityInit::Random ? "random" : "uniform";
    j["epsilon_plateau"] = epsilon_plateau;
    j["patience"] = patience;
    j["use_external_critic"] = use_external_critic;
    j["max_workers"] = max_workers;
    j["metadata"] = {{"key", metadata.key},
                     {"time_signature",
                      {{"numerator", metadata.time_sig_num}, {"denominator", metadata.time_sig_den}}},
                     {"tempo_bpm", metadata.tempo_bpm}};
    j["policy"] = {{"kind", policy.kind == PolicyConfig::Kind::Remote ? "remote" : "stub"},
                   {"endpoint", policy.endpoint},
                   {"path", policy.path},
                   {"model", policy.model},
                   {"api_key_env", policy.api_key_env},  // the variable name, never its value
                   {"timeout_seconds", policy.timeout_seconds},
                   {"max_retries", policy.max_retries},
                   {"temperature", policy.temperature},
                   {"prompts_dir", policy.prompts_dir}};
    j["environment"] = {{"lambda_decay", env.lambda_decay},
                        {"strength_floor", env.strength_floor},
                        {"alpha_reinforce", env.alpha_reinforce},
                        {"deposit_strength", env.deposit_strength},
                        {"theme_strength_min", env.theme_strength_min},
                        {"theme_support_min", env.theme_support_min}};
    j["reward_weights"] = {{"quality", reward_weights.quality},
                           {"alignment", reward_weights.alignment},
                           {"cooperation", reward_weights.cooperation},
                           {"innovation", reward_weights.innovation}};
    return j;
}

Piece seed_piece(int n_bars, const std::vector<std::string>& voices,
                 const PieceMetadata& metadata, double beats_per_bar) {
    if (n_bars < 1) throw std::invalid_argument("seed_piece: n_bars must be >= 1");
    static const char* kCycle[4] = {"C4", "E4", "G4", "C5"};
    std::vector<Bar> bars;
    bars.reserve(static_cast<std::size_t>(n_bars));
    for (int b = 1; b <= n_bars; ++b) {
        Bar bar;
        bar.bar_number = b;
        bar.rationale = "seed";
        for (const auto& instrument : voices) {
            VoiceLine voice;
            voice.instrument = instrument;
            double remaining = beats_per_bar;
            int idx = 0;
            while (remaining > kDurationTolerance) {
                double dur = std::min(1.0, remaining);
                voice.notes.push_back(NoteEvent{kCycle[idx % 4], dur});
                remaining -= dur;
                ++idx;
            }
            bar.voices.push_back(std::move(voice));
        }
        bars.push_back(std::move(bar));
    }
    return assemble_piece(std::move(bars), metadata);
}

std::vector<Bar> extract_context(const Piece& piece, int bar_index, int window) {
    std::vector<Bar> out;
    for (const Bar& bar : piece.bars) {
        if (window < 0 || std::abs(bar.bar_number - bar_index) <= window) out.push_back(bar);
    }
    return out;
}

void persist_iteration(const std::string& out_dir, int iteration, const Piece& piece,
                       const std::string& feedback, const std::vector<AgentState>& states,
                       const json* environment, const json* consensus) {
    if (out_dir.empty()) return;
    fs::path dir = fs::path(out_dir) / ("iter_" + std::to_string(iteration));
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_file((dir / "bars.json").string(), piece_to_json(piece).dump(2) + "\n");

    json agents = json::array();
    for (const auto& s : states) agents.push_back(s.to_json());
    write_file((dir / "agent_states.json").string(), agents.dump(2) + "\n");

    if (consensus != nullptr) {
        write_file((dir / "consensus.json").string(), consensus->dump(2) + "\n");
        if (environment != nullptr)
            write_file((dir / "environment.json").string(), environment->dump(2) + "\n");
    } else {
        json fb = {{"feedback", feedback}};
        write_file((dir / "critic_feedback.json").string(), fb.dump(2) + "\n");
    }
    write_file((dir / "piece.mid").string(), piece_to_midi(piece));
}

void persist_final(const std::string& out_dir, const RunResult& result) {
    if (out_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    json best = {{"best_score", result.best_score},
                 {"best_iteration", result.best_iteration},
                 {"piece", piece_to_json(result.best_piece)}};
    write_file((fs::path(out_dir) / "best_composition.json").string(), best.dump(2) + "\n");

    std::string csv = "iteration,sigma,is_best\n";
    for (std::size_t t = 0; t < result.score_trace.size(); ++t) {
        int it = static_cast<int>(t) + 1;
        csv += std::to_string(it) + "," + fmt(result.score_trace[t]) + "," +
               (it == result.best_iteration ? "1" : "0") + "\n";
    }
    write_file((fs::path(out_dir) / "score_history.csv").string(), csv);

    if (!result.trait_trajectory.empty()) {
        std::string traits = "iteration,agent,trait,value\n";
        const auto& names = PersonalityVector::trait_names();
        for (std::size_t t = 0; t < result.trait_trajectory.size(); ++t)
            for (std::size_t a = 0; a < result.trait_trajectory[t].size(); ++a)
                for (std::size_t k = 0; k < 5; ++k)
                    traits += std::to_string(t) + "," + std::to_string(a + 1) + "," + names[k] +
                              "," + fmt(result.trait_trajectory[t][a][k]) + "\n";
        write_file((fs::path(out_dir) / "trait_trajectories.csv").string(), traits);
    }
    if (!result.diagnostics.empty()) {
        json diag = result.diagnostics;
        write_file((fs::path(out_dir) / "diagnostics.json").string(), diag.dump(2) + "\n");
    }
}

RunResult run_central_critic(const RunConfig& config, Policy* policy_override) {
    check_config(config, RunConfig::System::Critic);
    std::unique_ptr<Policy> owned;
    Policy* policy = policy_override;
    if (policy == nullptr) {
        owned = make_policy(config.policy);
        policy = owned.get();
    }
    const int n = config.n_bars;

    Piece piece = seed_piece(n, config.voices, config.metadata, config.beats_per_bar);
    std::vector<AgentState> states(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) states[static_cast<std::size_t>(i)].agent_id = i + 1;
    PersonalityVector neutral;

    RunResult result;
    result.best_piece = piece;
    std::string critique;
    int stale = 0;

    for (int t = 1; t <= config.iterations; ++t) {
        // Pass A: reflection / objective update.
        for (int i = 0; i < n; ++i) {
            auto& state = states[static_cast<std::size_t>(i)];
            try {
                std::string objective =
                    policy->propose_local_objective(state, critique, config.objective, i + 1);
                state.local_objective = objective;
                state.remember_objective(objective);
            } catch (const std::exception& e) {
                result.diagnostics.push_back("iter " + std::to_string(t) + " bar " +
                                             std::to_string(i + 1) +
                                             " objective update failed: " + e.what());
            }
        }

        // Pass B: per-agent composition over the previous draft.
        std::vector<Bar> draft(piece.bars.begin(), piece.bars.end());
        std::vector<std::string> failures(static_cast<std::size_t>(n));
        parallel_for(n, config.max_workers, [&](int i) {
            auto& state = states[static_cast<std::size_t>(i)];
            try {
                auto proposal = policy->compose(
                    state, neutral, make_context(piece, config, i + 1, config.context_window),
                    SensedSignals{}, state.local_objective.empty() ? config.objective
                                                                   : state.local_objective,
                    stream_seed(config.seed, "compose", static_cast<std::uint64_t>(t),
                                static_cast<std::uint64_t>(i + 1)));
                draft[static_cast<std::size_t>(i)] = std::move(proposal.bar);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(i)] = e.what();  // previous bar retained
            }
        });
        for (int i = 0; i < n; ++i) {
            const auto& err = failures[static_cast<std::size_t>(i)];
            if (!err.empty())
                result.diagnostics.push_back("iter " + std::to_string(t) + " bar " +
                                             std::to_string(i + 1) + " compose failed: " + err);
            states[static_cast<std::size_t>(i)].remember_action(
                draft[static_cast<std::size_t>(i)]);
        }
        Piece candidate = assemble_piece(std::move(draft), piece.metadata);

        // Global critique and memory update.
        PieceAssessment assessment;
        try {
            assessment = policy->assess_piece(candidate, config.objective);
        } catch (const std::exception& e) {
            result.diagnostics.push_back("iter " + std::to_string(t) +
                                         " critic failed, iteration discarded: " + e.what());
            continue;  // run continues with the previous draft
        }
        piece = std::move(candidate);
        critique = assessment.justification;
        for (auto& state : states) state.remember_feedback(critique);

        double prev_best = result.best_score;
        result.score_trace.push_back(assessment.score);
        track_best(result, piece, assessment.score, t);
        persist_iteration(config.out_dir, t, piece, critique, states);

        stale = assessment.score > prev_best + config.epsilon_plateau ? 0 : stale + 1;
        if (stale >= config.patience) break;
    }
    persist_final(config.out_dir, result);
    return result;
}

RunResult run_swarm(const RunConfig& config, Policy* policy_override) {
    check_config(config, RunConfig::System::Swarm);
    std::unique_ptr<Policy> owned;
    Policy* policy = policy_override;
    if (policy == nullptr) {
        owned = make_policy(config.policy);
        policy = owned.get();
    }
    const int n = config.n_bars;

    Environment env(config.env);
    Piece piece = seed_piece(n, config.voices, config.metadata, config.beats_per_bar);
    std::vector<AgentState> states(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) states[static_cast<std::size_t>(i)].agent_id = i + 1;
    std::vector<PersonalityVector> personalities = init_personalities(config);

    RunResult result;
    result.best_piece = piece;
    result.trait_trajectory.push_back(snapshot_traits(personalities));
    int stale = 0;

    for (int t = 1; t <= config.iterations; ++t) {
        // Environment update before anyone composes.
        env.decay_and_prune();
        env.update_global_energy();
        env.refresh_themes();
        const Environment snapshot = env;  // immutable view for the compose phase

        std::vector<Bar> draft(piece.bars.begin(), piece.bars.end());
        std::vector<std::string> failures(static_cast<std::size_t>(n));
        parallel_for(n, config.max_workers, [&](int i) {
            SensedSignals sensed;
            sensed.pheromones = snapshot.sense(i + 1, config.sensing_radius);
            sensed.themes = snapshot.themes();
            sensed.global_energy = snapshot.global_energy();
            auto& state = states[static_cast<std::size_t>(i)];
            try {
                auto proposal = policy->compose(
                    state, personalities[static_cast<std::size_t>(i)],
                    make_context(piece, config, i + 1, config.context_window), sensed,
                    config.objective,
                    stream_seed(config.seed, "compose", static_cast<std::uint64_t>(t),
                                static_cast<std::uint64_t>(i + 1)));
                draft[static_cast<std::size_t>(i)] = std::move(proposal.bar);
            } catch (const std::exception& e) {
                failures[static_cast<std::size_t>(i)] = e.what();
            }
        });
        for (int i = 0; i < n; ++i) {
            const auto& err = failures[static_cast<std::size_t>(i)];
            if (!err.empty())
                result.diagnostics.push_back("iter " + std::to_string(t) + " bar " +
                                             std::to_string(i + 1) + " compose failed: " + err);
            states[static_cast<std::size_t>(i)].remember_action(
                draft[static_cast<std::size_t>(i)]);
        }

        // Ordered deposit merge: ascending bar index, then deterministic
        // pattern order inside deposit_from_bar.
        for (int i = 0; i < n; ++i) env.deposit_from_bar(draft[static_cast<std::size_t>(i)], t);

        Piece candidate = assemble_piece(std::move(draft), piece.metadata);
        piece = std::move(candidate);

        // Distributed peer assessment.
        std::vector<std::vector<DetailedPeerAssessment>> per_target(
            static_cast<std::size_t>(n));
        std::vector<std::vector<std::string>> assess_failures(static_cast<std::size_t>(n));
        parallel_for(n, config.max_workers, [&](int j) {
            per_target[static_cast<std::size_t>(j)] =
                assess_neighborhood(piece, j + 1, config.peer_range, config.objective, *policy,
                                    &assess_failures[static_cast<std::size_t>(j)]);
        });
        std::vector<DetailedPeerAssessment> all;
        for (int j = 0; j < n; ++j) {
            for (const auto& f : assess_failures[static_cast<std::size_t>(j)])
                result.diagnostics.push_back("iter " + std::to_string(t) + " " + f);
            all.insert(all.end(), per_target[static_cast<std::size_t>(j)].begin(),
                       per_target[static_cast<std::size_t>(j)].end());
        }
        ConsensusReport report = aggregate(all, n);

        double sigma = report.overall_satisfaction;
        if (config.use_external_critic) {
            try {
                sigma = policy->assess_piece(piece, config.objective).score;
            } catch (const std::exception& e) {
                result.diagnostics.push_back("iter " + std::to_string(t) +
                                             " external critic failed, using consensus: " +
                                             e.what());
            }
        }

        update_env_from_consensus(env, report, config.env.alpha_reinforce,
                                  config.reward_weights);
        env.update_global_energy();

        // Personality evolution + memory update.
        for (int i = 0; i < n; ++i) {
            auto it = report.per_bar.find(i + 1);
            double reward = it != report.per_bar.end()
                                ? shaped_reward(it->second, config.reward_weights)
                                : 0.5;
            std::string feedback;
            for (const auto& a : per_target[static_cast<std::size_t>(i)]) {
                if (!a.suggestions.empty()) feedback += a.suggestions + " ";
                if (!a.musical_feedback.empty()) feedback += a.musical_feedback + " ";
            }
            personalities[static_cast<std::size_t>(i)] = evolve_personality(
                personalities[static_cast<std::size_t>(i)], feedback, reward, config.objective,
                *policy,
                stream_seed(config.seed, "evolve", static_cast<std::uint64_t>(t),
                            static_cast<std::uint64_t>(i + 1)));
            states[static_cast<std::size_t>(i)].remember_feedback(
                "reward=" + fmt(reward) + (feedback.empty() ? "" : " " + feedback));
        }
        result.trait_trajectory.push_back(snapshot_traits(personalities));

        double prev_best = result.best_score;
        result.score_trace.push_back(sigma);
        track_best(result, piece, sigma, t);

        json env_json = env.to_json();
        result.environment_history.push_back(env_json);
        json consensus_json = report.to_json();
        persist_iteration(config.out_dir, t, piece, "", states, &env_json, &consensus_json);

        stale = sigma > prev_best + config.epsilon_plateau ? 0 : stale + 1;
        if (stale >= config.patience) break;
    }
    persist_final(config.out_dir, result);
    return result;
}

RunResult run_single_shot(const RunConfig& config, Policy* policy_override) {
    check_config(config, RunConfig::System::Single);
    std::unique_ptr<Policy> owned;
    Policy* policy = policy_override;
    if (policy == nullptr) {
        owned = make_policy(config.policy);
        policy = owned.get();
    }

    RunResult result;
    std::string raw = policy->compose_single_shot(config.n_bars, config.voices, config.metadata,
                                                  config.objective, config.seed);
    try {
        Piece piece = parse_piece_response(raw, config.voices, config.beats_per_bar,
                                           config.n_bars);
        // No critique loop; the score trace carries the local deterministic
        // assessment so single-shot runs are comparable in reports.
        PieceAssessment assessment = stub_assess_piece(piece, config.objective);
        result.score_trace.push_back(assessment.score);
        track_best(result, piece, assessment.score, 1);
        std::vector<AgentState> states;
        persist_iteration(config.out_dir, 1, piece, assessment.justification, states);
        persist_final(config.out_dir, result);
    } catch (const std::exception& e) {
        result.failed = true;
        result.failure_reason = e.what();
        result.raw_response = raw;  // preserved verbatim, no repair pass
        if (!config.out_dir.empty()) {
            std::error_code ec;
            fs::create_directories(config.out_dir, ec);
            if (!ec) {
                write_file((fs::path(config.out_dir) / "raw_response.txt").string(), raw);
                json diag = {{"failed", true}, {"reason", result.failure_reason}};
                write_file((fs::path(config.out_dir) / "diagnostics.json").string(),
                           diag.dump(2) + "\n");
            }
        }
    }
    return result;
}

RunResult run(const RunConfig& config) {
    switch (config.system) {
        case RunConfig::System::Critic: return run_central_critic(config);
        case RunConfig::System::Swarm: return run_swarm(config);
        case RunConfig::System::Single: return run_single_shot(config);
    }
    throw std::invalid_argument("unknown system");
}

}  // namespace sc
