#include <algorithm>

#include "swarmcomp/policy.hpp"

namespace sc {

namespace {

template <typename Deque, typename T>
void push_bounded(Deque& dq, T&& value) {
    dq.push_back(std::forward<T>(value));
    while (dq.size() > static_cast<size_t>(kMemoryCap)) dq.pop_front();
}

}  // namespace

void AgentState::remember_action(Bar bar) { push_bounded(past_actions, std::move(bar)); }
void AgentState::remember_feedback(std::string text) {
    push_bounded(past_feedback, std::move(text));
}
void AgentState::remember_objective(std::string text) {
    push_bounded(past_objectives, std::move(text));
}

json AgentState::to_json() const {
    json actions = json::array();
    for (const auto& bar : past_actions) {
        json voices = json::array();
        for (const auto& v : bar.voices) {
            json notes = json::array();
            for (const auto& n : v.notes)
                notes.push_back({{"pitch", n.pitch}, {"duration", n.duration}});
            voices.push_back({{"instrument", v.instrument}, {"notes", notes}});
        }
        actions.push_back({{"bar_number", bar.bar_number}, {"voices", voices}});
    }
    return json{{"agent_id", agent_id},
                {"local_objective", local_objective},
                {"past_actions", actions},
                {"past_feedback", past_feedback},
                {"past_objectives", past_objectives}};
}

PersonalityVector PersonalityVector::from_values(const std::array<double, 5>& v) {
    PersonalityVector p;
    p.risk_taking = v[0];
    p.harmonic_sensitivity = v[1];
    p.rhythmic_drive = v[2];
    p.theme_loyalty = v[3];
    p.neighbor_influence = v[4];
    return p;
}

void PersonalityVector::clamp() {
    auto c = [](double x) { return std::clamp(x, 0.1, 0.9); };
    risk_taking = c(risk_taking);
    harmonic_sensitivity = c(harmonic_sensitivity);
    rhythmic_drive = c(rhythmic_drive);
    theme_loyalty = c(theme_loyalty);
    neighbor_influence = c(neighbor_influence);
}

bool PersonalityVector::valid() const {
    for (double v : values())
        if (v < 0.1 - 1e-12 || v > 0.9 + 1e-12) return false;
    return true;
}

const std::array<const char*, 5>& PersonalityVector::trait_names() {
    static const std::array<const char*, 5> names = {"risk_taking", "harmonic_sensitivity",
                                                     "rhythmic_drive", "theme_loyalty",
                                                     "neighbor_influence"};
    return names;
}

json extract_json_object(const std::string& raw) {
    // Scan for the first top-level {...}, respecting strings and escapes.
    // Markdown fences are plain text outside the object, so the scan already
    // skips them.
    size_t start = raw.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (size_t i = start; i < raw.size(); ++i) {
            char c = raw[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"')
                in_string = true;
            else if (c == '{')
                ++depth;
            else if (c == '}') {
                --depth;
                if (depth == 0) {
                    auto parsed =
                        json::parse(raw.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;  // try next candidate start
                }
            }
        }
        start = raw.find('{', start + 1);
    }
    throw SchemaError("no JSON object found in response");
}

namespace {

Bar bar_from_proposal_json(const json& j, const std::vector<std::string>& voices,
                           double beats_per_bar, int bar_number) {
    if (!j.contains("voices")) throw SchemaError("missing field: voices");
    if (!j["voices"].is_array()) throw SchemaError("voices must be an array");
    Bar bar;
    bar.bar_number = bar_number;
    bar.rationale = j.value("rationale", "");
    for (const auto& jv : j["voices"]) {
        if (!jv.contains("instrument") || !jv["instrument"].is_string())
            throw SchemaError("voice missing string field: instrument");
        if (!jv.contains("notes") || !jv["notes"].is_array())
            throw SchemaError("voice missing array field: notes");
        VoiceLine voice;
        voice.instrument = jv["instrument"].get<std::string>();
        for (const auto& jn : jv["notes"]) {
            if (!jn.contains("pitch") || !jn["pitch"].is_string())
                throw SchemaError("note missing string field: pitch");
            if (!jn.contains("duration") || !jn["duration"].is_number())
                throw SchemaError("note missing numeric field: duration");
            NoteEvent note;
            note.pitch = sanitize_note(jn["pitch"].get<std::string>());
            note.duration = jn["duration"].get<double>();
            voice.notes.push_back(std::move(note));
        }
        bar.voices.push_back(std::move(voice));
    }
    auto report = validate_bar(bar, voices, beats_per_bar);
    if (!report.empty()) throw MusicError(report.front().message);
    return bar;
}

}  // namespace

EnhancedBarProposal parse_bar_proposal(const std::string& raw,
                                       const std::vector<std::string>& voices,
                                       double beats_per_bar, int bar_number) {
    json j = extract_json_object(raw);
    EnhancedBarProposal proposal;
    proposal.bar = bar_from_proposal_json(j, voices, beats_per_bar, bar_number);
    proposal.rationale = j.value("rationale", "");
    proposal.detailed_reasoning = j.value("detailed_reasoning", "");
    proposal.personality_reflection = j.value("personality_reflection", "");
    proposal.pheromone_interpretation = j.value("pheromone_interpretation", "");
    return proposal;
}

Piece parse_piece_response(const std::string& raw, const std::vector<std::string>& voices,
                           double beats_per_bar, int n_bars) {
    json j = extract_json_object(raw);
    if (!j.contains("bars") || !j["bars"].is_array()) throw SchemaError("missing array: bars");

    PieceMetadata metadata;
    if (j.contains("metadata")) {
        const auto& m = j["metadata"];
        metadata.key = m.value("key", metadata.key);
        metadata.tempo_bpm = m.value("tempo_bpm", metadata.tempo_bpm);
        if (m.contains("time_signature")) {
            metadata.time_sig_num = m["time_signature"].value("numerator", 4);
            metadata.time_sig_den = m["time_signature"].value("denominator", 4);
        }
    }

    std::vector<Bar> bars;
    for (const auto& jb : j["bars"]) {
        if (!jb.contains("bar_number") || !jb["bar_number"].is_number_integer())
            throw SchemaError("bar missing integer field: bar_number");
        bars.push_back(bar_from_proposal_json(jb, voices, beats_per_bar,
                                              jb["bar_number"].get<int>()));
        bars.back().rationale = jb.value("rationale", "");
    }
    if (static_cast<int>(bars.size()) != n_bars)
        throw MusicError("expected " + std::to_string(n_bars) + " bars, got " +
                         std::to_string(bars.size()));
    return assemble_piece(std::move(bars), std::move(metadata));
}

}  // namespace sc
