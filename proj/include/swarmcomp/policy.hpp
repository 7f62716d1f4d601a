#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "swarmcomp/score.hpp"
#include "swarmcomp/swarm_env.hpp"

namespace sc {

struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};
struct MusicError : std::runtime_error {
    explicit MusicError(const std::string& what) : std::runtime_error(what) {}
};
struct AuthError : std::runtime_error {
    explicit AuthError(const std::string& what) : std::runtime_error(what) {}
};
struct TransportError : std::runtime_error {
    explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};
struct TimeoutError : std::runtime_error {
    explicit TimeoutError(const std::string& what) : std::runtime_error(what) {}
};
struct RateLimited : std::runtime_error {
    explicit RateLimited(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kMemoryCap = 8;

/// Per-bar agent episodic memory. Lists are FIFO-bounded at kMemoryCap.
struct AgentState {
    int agent_id = 1;  // bar index
    std::string local_objective;
    std::deque<Bar> past_actions;
    std::deque<std::string> past_feedback;
    std::deque<std::string> past_objectives;

    void remember_action(Bar bar);
    void remember_feedback(std::string text);
    void remember_objective(std::string text);

    json to_json() const;
};

/// Five evolving traits, each clamped to [0.1, 0.9].
struct PersonalityVector {
    double risk_taking = 0.5;
    double harmonic_sensitivity = 0.5;
    double rhythmic_drive = 0.5;
    double theme_loyalty = 0.5;
    double neighbor_influence = 0.5;

    std::array<double, 5> values() const {
        return {risk_taking, harmonic_sensitivity, rhythmic_drive, theme_loyalty,
                neighbor_influence};
    }
    static PersonalityVector from_values(const std::array<double, 5>& v);
    void clamp();
    bool valid() const;

    static const std::array<const char*, 5>& trait_names();
};

struct EnhancedBarProposal {
    Bar bar;
    std::string rationale;
    std::string detailed_reasoning;
    std::string personality_reflection;
    std::string pheromone_interpretation;
};

struct PolicyConfig {
    enum class Kind { Remote, Stub };
    Kind kind = Kind::Stub;
    std::string endpoint;  // e.g. http://localhost:8080
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "LLM_API_KEY";
    double timeout_seconds = 30.0;
    int max_retries = 3;
    double temperature = 0.7;
    std::uint64_t seed = 0;
    std::string prompts_dir;  // prompt template assets; built-ins when empty
};

/// Score context handed to a composing agent.
struct LocalContext {
    std::vector<Bar> bars;  // bars within the window, index-ordered
    int bar_number = 1;
    std::string key = "C major";
    std::vector<std::string> voices;
    double beats_per_bar = kDefaultBeatsPerBar;
};

struct SensedSignals {
    std::vector<Pheromone> pheromones;
    std::vector<EmergentTheme> themes;
    double global_energy = 0.0;
};

/// Peer rating of one bar; all four scores in [0,1].
struct DetailedPeerAssessment {
    int rater_id = 0;
    int target_bar = 0;
    double musical_quality = 0.0;
    double objective_alignment = 0.0;
    double swarm_cooperation = 0.0;
    double innovation_value = 0.0;
    std::string musical_feedback;
    std::string cooperation_feedback;
    std::string innovation_commentary;
    std::string suggestions;

    std::array<double, 4> scores() const {
        return {musical_quality, objective_alignment, swarm_cooperation, innovation_value};
    }
};

struct PieceAssessment {
    double score = 0.0;  // sigma in [0,1]
    std::string justification;
};

// ---------------------------------------------------------------------------
// Parsing

/// Extracts the first JSON object from raw text, tolerating markdown code
/// fences. Throws SchemaError when no object is found or it does not parse.
json extract_json_object(const std::string& raw);

/// Strict parse + pitch sanitization + music validation. No repair pass.
EnhancedBarProposal parse_bar_proposal(const std::string& raw,
                                       const std::vector<std::string>& voices,
                                       double beats_per_bar, int bar_number);

/// Parses a whole piece (single-shot reply shape).
Piece parse_piece_response(const std::string& raw, const std::vector<std::string>& voices,
                           double beats_per_bar, int n_bars);

// ---------------------------------------------------------------------------
// Remote transport

/// One chat-completion round trip with retry/backoff on transport and 5xx
/// errors. The API key is read from the configured environment variable and
/// never appears in logs or error text.
std::string llm_complete(const std::string& prompt, const PolicyConfig& config);

// ---------------------------------------------------------------------------
// Policy interface

class Policy {
public:
    virtual ~Policy() = default;

    virtual EnhancedBarProposal compose(const AgentState& state,
                                        const PersonalityVector& personality,
                                        const LocalContext& context, const SensedSignals& sensed,
                                        const std::string& objective, std::uint64_t seed) = 0;

    virtual PieceAssessment assess_piece(const Piece& piece, const std::string& objective) = 0;

    virtual std::string propose_local_objective(const AgentState& state,
                                                const std::string& critic_feedback,
                                                const std::string& global_objective,
                                                int bar_number) = 0;

    virtual DetailedPeerAssessment assess_peer(const Piece& piece, int rater_id, int target_bar,
                                               const std::string& objective) = 0;

    /// Proposed per-trait deltas; orchestrators clamp and apply. May throw —
    /// callers fall back to seeded drift.
    virtual std::array<double, 5> personality_deltas(const PersonalityVector& personality,
                                                     const std::string& feedback, double reward,
                                                     const std::string& objective,
                                                     std::uint64_t seed) = 0;

    /// Returns the raw reply text; callers parse it with parse_piece_response
    /// so the unparsed payload can be preserved when parsing fails.
    virtual std::string compose_single_shot(int n_bars, const std::vector<std::string>& voices,
                                            const PieceMetadata& metadata,
                                            const std::string& objective, std::uint64_t seed) = 0;
};

std::unique_ptr<Policy> make_policy(const PolicyConfig& config);
std::unique_ptr<Policy> make_stub_policy();
std::unique_ptr<Policy> make_remote_policy(const PolicyConfig& config);

// Stub internals exposed for targeted tests.
PieceAssessment stub_assess_piece(const Piece& piece, const std::string& objective);

}  // namespace sc
