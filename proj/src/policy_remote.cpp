#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "httplib.h"
#include "swarmcomp/policy.hpp"
#include "swarmcomp/rng.hpp"

namespace sc {

namespace {

// Built-in prompt templates; files with the same name in prompts_dir take
// precedence so the wording can be tuned without a rebuild.
const char* kCompositionTemplate = R"(You are a composer agent responsible for one bar.
Global objective: {objective}
Your local objective: {local_objective}
Personality traits: {personality}
Sensed pheromones and themes: {pheromones}
Local score context (JSON bars): {context}
Recent feedback: {feedback}
Reply with ONLY a JSON object:
{"voices":[{"instrument":"<name>","notes":[{"pitch":"C4","duration":1.0}]}],
 "rationale":"...","detailed_reasoning":"...","personality_reflection":"...",
 "pheromone_interpretation":"..."}
Durations per voice must sum to {beats} beats. Instruments must be exactly: {voices}.)";

const char* kReflectionTemplate = R"(You are a composer agent reflecting on critic feedback.
Global objective: {objective}
Critic feedback: {feedback}
Past objectives: {context}
Reply with ONLY a JSON object: {"new_objective":"<one sentence>"})";

const char* kCriticTemplate = R"(You are a music critic. Assess harmony, voice-leading, rhythm and form.
Objective: {objective}
Piece (JSON): {context}
Reply with ONLY a JSON object: {"score":<0..1>,"justification":"per-bar comments"})";

const char* kPeerTemplate = R"(You are agent {rater} rating bar {target} of a shared composition.
Objective: {objective}
Piece (JSON): {context}
Reply with ONLY a JSON object with fields musical_quality, objective_alignment,
swarm_cooperation, innovation_value (each 0..1) and text fields musical_feedback,
cooperation_feedback, innovation_commentary, suggestions.)";

const char* kEvolutionTemplate = R"(You adapt a composer agent's personality from peer feedback.
Traits now: {personality}
Feedback: {feedback}
Reward: {reward}
Objective: {objective}
Reply with ONLY a JSON object of per-trait deltas, e.g.
{"risk_taking":0.05,"harmonic_sensitivity":0.0,"rhythmic_drive":-0.05,"theme_loyalty":0.0,"neighbor_influence":0.0})";

const char* kSingleShotTemplate = R"(Compose a complete {bars}-bar piece in one reply.
Objective: {objective}
Key: {key}; tempo {tempo} BPM; {beats} beats per bar.
Instruments, exactly these names: {voices}
Reply with ONLY a JSON object:
{"metadata":{"key":"...","time_signature":{"numerator":4,"denominator":4},"tempo_bpm":120},
 "bars":[{"bar_number":1,"rationale":"...","voices":[{"instrument":"<name>",
 "notes":[{"pitch":"C4","duration":1.0}]}]}]}
Bar numbers must cover 1..{bars}; durations per voice must sum to {beats}. No text outside the JSON.)";

std::string load_template(const std::string& prompts_dir, const std::string& name,
                          const char* fallback) {
    if (!prompts_dir.empty()) {
        auto path = std::filesystem::path(prompts_dir) / (name + ".txt");
        if (std::filesystem::exists(path)) return read_file(path.string());
    }
    return fallback;
}

std::string fill(std::string tmpl, const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [name, value] : vars) {
        std::string token = "{" + name + "}";
        size_t at = 0;
        while ((at = tmpl.find(token, at)) != std::string::npos) {
            tmpl.replace(at, token.size(), value);
            at += value.size();
        }
    }
    return tmpl;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ", ";
        out += parts[i];
    }
    return out;
}

double get_score_field(const json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number())
        throw SchemaError(std::string("missing numeric field: ") + field);
    return std::clamp(j[field].get<double>(), 0.0, 1.0);
}

class RemotePolicy final : public Policy {
public:
    explicit RemotePolicy(PolicyConfig config) : config_(std::move(config)) {}

    EnhancedBarProposal compose(const AgentState& state, const PersonalityVector& personality,
                                const LocalContext& context, const SensedSignals& sensed,
                                const std::string& objective, std::uint64_t seed) override {
        (void)seed;
        json bars = json::array();
        for (const auto& bar : context.bars) {
            Piece tmp;
            tmp.bars.push_back(bar);
            bars.push_back(piece_to_json(tmp)["bars"][0]);
        }
        json personality_json;
        for (size_t i = 0; i < 5; ++i)
            personality_json[PersonalityVector::trait_names()[i]] = personality.values()[i];
        json pheromones = json::array();
        for (const auto& p : sensed.pheromones)
            pheromones.push_back({{"pattern", p.pattern_data}, {"strength", p.strength}});

        std::string prompt = fill(
            load_template(config_.prompts_dir, "composition", kCompositionTemplate),
            {{"objective", objective},
             {"local_objective", state.local_objective},
             {"personality", personality_json.dump()},
             {"pheromones", pheromones.dump()},
             {"context", bars.dump()},
             {"feedback", state.past_feedback.empty() ? "" : state.past_feedback.back()},
             {"beats", std::to_string(context.beats_per_bar)},
             {"voices", join(context.voices)}});
        std::string raw = llm_complete(prompt, config_);
        return parse_bar_proposal(raw, context.voices, context.beats_per_bar,
                                  context.bar_number);
    }

    PieceAssessment assess_piece(const Piece& piece, const std::string& objective) override {
        std::string prompt =
            fill(load_template(config_.prompts_dir, "critic", kCriticTemplate),
                 {{"objective", objective}, {"context", piece_to_json(piece).dump()}});
        json j = extract_json_object(llm_complete(prompt, config_));
        PieceAssessment a;
        a.score = get_score_field(j, "score");
        if (!j.contains("justification") || !j["justification"].is_string())
            throw SchemaError("missing string field: justification");
        a.justification = j["justification"].get<std::string>();
        return a;
    }

    std::string propose_local_objective(const AgentState& state,
                                        const std::string& critic_feedback,
                                        const std::string& global_objective,
                                        int bar_number) override {
        (void)bar_number;
        json past(state.past_objectives);
        std::string prompt =
            fill(load_template(config_.prompts_dir, "reflection", kReflectionTemplate),
                 {{"objective", global_objective},
                  {"feedback", critic_feedback},
                  {"context", past.dump()}});
        json j = extract_json_object(llm_complete(prompt, config_));
        if (!j.contains("new_objective") || !j["new_objective"].is_string())
            throw SchemaError("missing string field: new_objective");
        return j["new_objective"].get<std::string>();
    }

    DetailedPeerAssessment assess_peer(const Piece& piece, int rater_id, int target_bar,
                                       const std::string& objective) override {
        std::string prompt =
            fill(load_template(config_.prompts_dir, "peer_assessment", kPeerTemplate),
                 {{"objective", objective},
                  {"context", piece_to_json(piece).dump()},
                  {"rater", std::to_string(rater_id)},
                  {"target", std::to_string(target_bar)}});
        json j = extract_json_object(llm_complete(prompt, config_));
        DetailedPeerAssessment a;
        a.rater_id = rater_id;
        a.target_bar = target_bar;
        a.musical_quality = get_score_field(j, "musical_quality");
        a.objective_alignment = get_score_field(j, "objective_alignment");
        a.swarm_cooperation = get_score_field(j, "swarm_cooperation");
        a.innovation_value = get_score_field(j, "innovation_value");
        a.musical_feedback = j.value("musical_feedback", "");
        a.cooperation_feedback = j.value("cooperation_feedback", "");
        a.innovation_commentary = j.value("innovation_commentary", "");
        a.suggestions = j.value("suggestions", "");
        return a;
    }

    std::array<double, 5> personality_deltas(const PersonalityVector& personality,
                                             const std::string& feedback, double reward,
                                             const std::string& objective,
                                             std::uint64_t seed) override {
        (void)seed;
        json personality_json;
        for (size_t i = 0; i < 5; ++i)
            personality_json[PersonalityVector::trait_names()[i]] = personality.values()[i];
        std::string prompt =
            fill(load_template(config_.prompts_dir, "evolution", kEvolutionTemplate),
                 {{"personality", personality_json.dump()},
                  {"feedback", feedback},
                  {"reward", std::to_string(reward)},
                  {"objective", objective}});
        json j = extract_json_object(llm_complete(prompt, config_));
        std::array<double, 5> deltas{};
        for (size_t i = 0; i < 5; ++i) {
            const char* name = PersonalityVector::trait_names()[i];
            if (!j.contains(name) || !j[name].is_number())
                throw SchemaError(std::string("missing numeric delta: ") + name);
            deltas[i] = j[name].get<double>();
        }
        return deltas;
    }

    std::string compose_single_shot(int n_bars, const std::vector<std::string>& voices,
                                    const PieceMetadata& metadata, const std::string& objective,
                                    std::uint64_t seed) override {
        (void)seed;
        std::string prompt =
            fill(load_template(config_.prompts_dir, "single_shot", kSingleShotTemplate),
                 {{"bars", std::to_string(n_bars)},
                  {"objective", objective},
                  {"key", metadata.key},
                  {"tempo", std::to_string(metadata.tempo_bpm)},
                  {"beats", std::to_string(kDefaultBeatsPerBar)},
                  {"voices", join(voices)}});
        return llm_complete(prompt, config_);
    }

private:
    PolicyConfig config_;
};

}  // namespace

std::string llm_complete(const std::string& prompt, const PolicyConfig& config) {
    if (config.kind != PolicyConfig::Kind::Remote)
        throw std::logic_error("llm_complete requires a remote policy config");
    const char* key = std::getenv(config.api_key_env.c_str());
    if (!key || !*key) throw AuthError("missing API key in env var " + config.api_key_env);

    httplib::Client client(config.endpoint);
    auto seconds = static_cast<time_t>(config.timeout_seconds);
    auto micros = static_cast<time_t>((config.timeout_seconds - seconds) * 1e6);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);

    json body{{"model", config.model},
              {"temperature", config.temperature},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
    httplib::Headers headers{{"Authorization", "Bearer " + std::string(key)}};

    std::string last_error = "transport error";
    bool timed_out = false;
    bool rate_limited = false;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
        }
        std::clog << "[llm] POST " << config.endpoint << config.path << " model=" << config.model
                  << " attempt=" << attempt << " (auth redacted)\n";
        auto res = client.Post(config.path, headers, body.dump(), "application/json");
        if (!res) {
            timed_out = (res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read);
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 401 || res->status == 403)
            throw AuthError("API key rejected (HTTP " + std::to_string(res->status) + ")");
        if (res->status == 429) {
            rate_limited = true;
            last_error = "HTTP 429";
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("unexpected HTTP status " + std::to_string(res->status));
        json reply = json::parse(res->body, nullptr, false);
        if (reply.is_discarded()) throw SchemaError("response body is not JSON");
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
            throw SchemaError("response missing choices[0].message.content");
        }
    }
    if (rate_limited) throw RateLimited("rate limited after retries");
    if (timed_out) throw TimeoutError("request timed out after retries");
    throw TransportError("request failed after retries: " + last_error);
}

std::unique_ptr<Policy> make_remote_policy(const PolicyConfig& config) {
    if (config.endpoint.empty() || config.model.empty())
        throw std::invalid_argument("remote policy requires endpoint and model");
    return std::make_unique<RemotePolicy>(config);
}

std::unique_ptr<Policy> make_policy(const PolicyConfig& config) {
    if (config.kind == PolicyConfig::Kind::Remote) return make_remote_policy(config);
    return make_stub_policy();
}

}  // namespace sc
