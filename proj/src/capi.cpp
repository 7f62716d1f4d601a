#include "swarmcomp.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "swarmcomp/equilibrium.hpp"
#include "swarmcomp/multiscale.hpp"
#include "swarmcomp/musicology.hpp"
#include "swarmcomp/orchestrator.hpp"
#include "swarmcomp/particle_lab.hpp"
#include "swarmcomp/structure_graph.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

/* 1 = the caller handed us bad input, 2 = something broke at runtime */
int fail(int code, const std::string& message) {
    g_last_error = message;
    return code;
}

bool is_input_error(const std::exception& e) {
    return dynamic_cast<const std::invalid_argument*>(&e) != nullptr ||
           dynamic_cast<const sc::SchemaError*>(&e) != nullptr ||
           dynamic_cast<const sc::MusicError*>(&e) != nullptr ||
           dynamic_cast<const sc::BarIndexError*>(&e) != nullptr ||
           dynamic_cast<const sc::BadWeights*>(&e) != nullptr ||
           dynamic_cast<const nlohmann::json::exception*>(&e) != nullptr;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const std::exception& e) {
        return fail(is_input_error(e) ? 1 : 2, e.what());
    } catch (...) {
        return fail(2, "unknown error");
    }
}

sc::RunConfig parse_run_config(const sc::json& j) {
    sc::RunConfig c;
    std::string system = j.value("system", "swarm");
    if (system == "critic")
        c.system = sc::RunConfig::System::Critic;
    else if (system == "swarm")
        c.system = sc::RunConfig::System::Swarm;
    else if (system == "single")
        c.system = sc::RunConfig::System::Single;
    else
        throw std::invalid_argument("unknown system: " + system);

    c.n_bars = j.value("n_bars", c.n_bars);
    if (j.contains("voices")) c.voices = j.at("voices").get<std::vector<std::string>>();
    c.iterations = j.value("iterations", c.iterations);
    c.context_window = j.value("context_window", c.context_window);
    c.sensing_radius = j.value("sensing_radius", c.sensing_radius);
    c.peer_range = j.value("peer_range", c.peer_range);
    c.objective = j.value("objective", c.objective);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.beats_per_bar = j.value("beats_per_bar", c.beats_per_bar);
    c.epsilon_plateau = j.value("epsilon_plateau", c.epsilon_plateau);
    c.patience = j.value("patience", c.patience);
    c.use_external_critic = j.value("use_external_critic", c.use_external_critic);
    c.max_workers = j.value("max_workers", c.max_workers);
    std::string init = j.value("personality_init", "uniform");
    if (init == "random")
        c.personality_init = sc::RunConfig::PersonalityInit::Random;
    else if (init != "uniform")
        throw std::invalid_argument("unknown personality_init: " + init);

    if (j.contains("metadata")) {
        const auto& m = j.at("metadata");
        c.metadata.key = m.value("key", c.metadata.key);
        c.metadata.tempo_bpm = m.value("tempo_bpm", c.metadata.tempo_bpm);
        if (m.contains("time_signature")) {
            c.metadata.time_sig_num = m.at("time_signature").value("numerator", 4);
            c.metadata.time_sig_den = m.at("time_signature").value("denominator", 4);
        }
    }
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        std::string kind = p.value("kind", "stub");
        if (kind == "remote")
            c.policy.kind = sc::PolicyConfig::Kind::Remote;
        else if (kind == "stub")
            c.policy.kind = sc::PolicyConfig::Kind::Stub;
        else
            throw std::invalid_argument("unknown policy kind: " + kind);
        c.policy.endpoint = p.value("endpoint", c.policy.endpoint);
        c.policy.path = p.value("path", c.policy.path);
        c.policy.model = p.value("model", c.policy.model);
        c.policy.api_key_env = p.value("api_key_env", c.policy.api_key_env);
        c.policy.timeout_seconds = p.value("timeout_seconds", c.policy.timeout_seconds);
        c.policy.max_retries = p.value("max_retries", c.policy.max_retries);
        c.policy.temperature = p.value("temperature", c.policy.temperature);
        c.policy.prompts_dir = p.value("prompts_dir", c.policy.prompts_dir);
        c.policy.seed = c.seed;
    }
    if (j.contains("environment")) {
        const auto& e = j.at("environment");
        c.env.lambda_decay = e.value("lambda_decay", c.env.lambda_decay);
        c.env.strength_floor = e.value("strength_floor", c.env.strength_floor);
        c.env.alpha_reinforce = e.value("alpha_reinforce", c.env.alpha_reinforce);
        c.env.deposit_strength = e.value("deposit_strength", c.env.deposit_strength);
        c.env.theme_strength_min = e.value("theme_strength_min", c.env.theme_strength_min);
        c.env.theme_support_min = e.value("theme_support_min", c.env.theme_support_min);
    }
    if (j.contains("reward_weights")) {
        const auto& w = j.at("reward_weights");
        c.reward_weights.quality = w.value("quality", c.reward_weights.quality);
        c.reward_weights.alignment = w.value("alignment", c.reward_weights.alignment);
        c.reward_weights.cooperation = w.value("cooperation", c.reward_weights.cooperation);
        c.reward_weights.innovation = w.value("innovation", c.reward_weights.innovation);
    }
    return c;
}

}  // namespace

extern "C" {

struct sc_piece {
    sc::Piece piece;
};

const char* sc_version(void) { return "0.1.0"; }

const char* sc_last_error(void) { return g_last_error.c_str(); }

void sc_string_free(char* s) { std::free(s); }

int sc_compose(const char* config_json, char** out_result_json) {
    if (config_json == nullptr || out_result_json == nullptr)
        return fail(1, "null argument");
    return guarded([&] {
        sc::RunConfig config = parse_run_config(sc::json::parse(config_json));
        sc::RunResult result = sc::run(config);
        sc::json j;
        j["best_score"] = result.best_score;
        j["best_iteration"] = result.best_iteration;
        j["score_trace"] = result.score_trace;
        j["failed"] = result.failed;
        j["failure_reason"] = result.failure_reason;
        if (!result.raw_response.empty()) j["raw_response"] = result.raw_response;
        j["diagnostics"] = result.diagnostics;
        if (!result.failed) j["best_piece"] = sc::piece_to_json(result.best_piece);
        if (!result.trait_trajectory.empty()) {
            sc::json traj = sc::json::array();
            for (const auto& snap : result.trait_trajectory) {
                sc::json sj = sc::json::array();
                for (const auto& agent : snap) sj.push_back(agent);
                traj.push_back(std::move(sj));
            }
            j["trait_trajectory"] = traj;
        }
        *out_result_json = dup_string(j.dump(2));
        return 0;
    });
}

int sc_analyze_musicology(const char* piece_json, char** out_json) {
    if (piece_json == nullptr || out_json == nullptr) return fail(1, "null argument");
    return guarded([&] {
        sc::Piece piece = sc::piece_from_json(sc::json::parse(piece_json));
        *out_json = dup_string(sc::musicology_report(piece).dump(2));
        return 0;
    });
}

int sc_analyze_graph(const char* piece_json, const char* options_json, char** out_json) {
    if (piece_json == nullptr || out_json == nullptr) return fail(1, "null argument");
    return guarded([&] {
        sc::Piece piece = sc::piece_from_json(sc::json::parse(piece_json));
        sc::json opt = options_json != nullptr ? sc::json::parse(options_json) : sc::json::object();
        auto report = sc::structure_report(piece, opt.value("frame_len", 1.0),
                                           opt.value("k", 6), opt.value("n_null", 20),
                                           opt.value("seed", std::uint64_t{0}));
        *out_json = dup_string(report.dump(2));
        return 0;
    });
}

int sc_analyze_multiscale(const char* piece_json, const char* options_json, char** out_json) {
    if (piece_json == nullptr || out_json == nullptr) return fail(1, "null argument");
    return guarded([&] {
        sc::Piece piece = sc::piece_from_json(sc::json::parse(piece_json));
        sc::json opt = options_json != nullptr ? sc::json::parse(options_json) : sc::json::object();
        auto frames = sc::frame_features(piece, opt.value("frame_len", 1.0));
        if (frames.frames.size() < 2) throw std::invalid_argument("piece yields < 2 frames");
        auto g = sc::knn_graph(sc::build_ssm(frames), opt.value("k", 6));
        auto report = sc::multiscale_report(g, sc::kDefaultQuantiles, opt.value("top_k", 6),
                                            opt.value("n_null", 20),
                                            opt.value("seed", std::uint64_t{0}));
        *out_json = dup_string(report.dump(2));
        return 0;
    });
}

int sc_equilibrium(const char* trajectory_text, const char* format, char** out_json) {
    if (trajectory_text == nullptr || format == nullptr || out_json == nullptr)
        return fail(1, "null argument");
    return guarded([&] {
        sc::TraitTrajectory traj;
        std::string fmt(format);
        if (fmt == "json")
            traj = sc::TraitTrajectory::from_json(sc::json::parse(trajectory_text));
        else if (fmt == "csv")
            traj = sc::TraitTrajectory::from_csv(trajectory_text);
        else
            throw std::invalid_argument("format must be json or csv");
        *out_json = dup_string(sc::equilibrium_report(traj).dump(2));
        return 0;
    });
}

int sc_particles(const char* config_json, char** out_json) {
    if (config_json == nullptr || out_json == nullptr) return fail(1, "null argument");
    return guarded([&] {
        sc::json j = sc::json::parse(config_json);
        auto rule = sc::InteractionRule::by_name(j.value("rule", "lj"));
        sc::AnnealSchedule schedule;
        schedule.steps = j.value(
            "steps", rule.kind == sc::InteractionRule::Kind::Vicsek ? 2000 : schedule.steps);
        schedule.t0 = j.value("t0", schedule.t0);
        schedule.t_min = j.value("t_min", schedule.t_min);
        schedule.p = j.value("p", schedule.p);
        auto summary = sc::run_experiment(rule, schedule, j.value("seed", std::uint64_t{42}),
                                          j.value("out_dir", std::string{}),
                                          j.value("stride", 50), j.value("n", 1024),
                                          j.value("rho", 0.8));
        *out_json = dup_string(summary.dump(2));
        return 0;
    });
}

int sc_piece_from_json(const char* piece_json, sc_piece** out) {
    if (piece_json == nullptr || out == nullptr) return fail(1, "null argument");
    return guarded([&] {
        auto handle = new sc_piece{sc::piece_from_json(sc::json::parse(piece_json))};
        *out = handle;
        return 0;
    });
}

int sc_piece_to_json(const sc_piece* piece, char** out_json) {
    if (piece == nullptr || out_json == nullptr) return fail(1, "null argument");
    return guarded([&] {
        *out_json = dup_string(sc::piece_to_json(piece->piece).dump(2));
        return 0;
    });
}

int sc_piece_to_midi_file(const sc_piece* piece, const char* path) {
    if (piece == nullptr || path == nullptr) return fail(1, "null argument");
    return guarded([&] {
        sc::write_file(path, sc::piece_to_midi(piece->piece));
        return 0;
    });
}

void sc_piece_free(sc_piece* piece) { delete piece; }

}  // extern "C"
