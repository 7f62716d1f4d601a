#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmcomp/musicology.hpp"
#include "swarmcomp/policy.hpp"
#include "swarmcomp/rng.hpp"

namespace sc {

namespace {

struct KeyScale {
    int tonic = 0;
    bool minor = false;
};

KeyScale parse_key(const std::string& key) {
    KeyScale ks;
    std::istringstream ss(key);
    std::string tonic_name, mode;
    ss >> tonic_name >> mode;
    try {
        ks.tonic = pitch_class(tonic_name + "4");
    } catch (const std::exception&) {
        ks.tonic = 0;
    }
    ks.minor = (mode == "minor" || mode == "Minor");
    return ks;
}

bool in_scale(int midi, const KeyScale& ks) {
    static const int major[7] = {0, 2, 4, 5, 7, 9, 11};
    static const int minor[7] = {0, 2, 3, 5, 7, 8, 10};
    int rel = ((midi - ks.tonic) % 12 + 12) % 12;
    const int* degrees = ks.minor ? minor : major;
    for (int i = 0; i < 7; ++i)
        if (degrees[i] == rel) return true;
    return false;
}

int snap_to_scale(int midi, const KeyScale& ks) {
    for (int d = 0; d <= 6; ++d) {
        if (in_scale(midi - d, ks)) return midi - d;
        if (in_scale(midi + d, ks)) return midi + d;
    }
    return midi;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(3);
    ss << v;
    return ss.str();
}

double cosine12(const std::array<double, 12>& a, const std::array<double, 12>& b) {
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < 12; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0 || nb <= 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

// Per-bar critic components, also used to build the parseable justification.
struct BarComponents {
    double stability = 0.0;
    double diversity = 0.0;
    double violation_freedom = 0.0;
    double risk = 0.0;

    const char* lowest() const {
        const char* name = "stability";
        double best = stability;
        if (diversity < best) { best = diversity; name = "diversity"; }
        if (violation_freedom < best) { best = violation_freedom; name = "violation_freedom"; }
        if (risk < best) { best = risk; name = "risk"; }
        return name;
    }
};

BarComponents bar_components(const Piece& piece, size_t bar_idx, const TonalCurves& curves) {
    BarComponents c;
    const Bar& bar = piece.bars[bar_idx];
    c.stability = curves.per_measure[bar_idx].stability;
    Piece one;
    one.metadata = piece.metadata;
    Bar b = bar;
    b.bar_number = 1;
    one.bars.push_back(b);
    c.diversity = rhythm_diversity(one);
    auto melody = upper_melody(one);
    if (!melody.midis.empty()) {
        auto cm = creative_metrics(melody);
        c.violation_freedom = 1.0 - cm.violation_density;
        c.risk = cm.creative_risk;
    }
    return c;
}

class StubPolicy final : public Policy {
public:
    EnhancedBarProposal compose(const AgentState& state, const PersonalityVector& personality,
                                const LocalContext& context, const SensedSignals& sensed,
                                const std::string& objective, std::uint64_t seed) override {
        auto rng = std::mt19937_64(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        KeyScale ks = parse_key(context.key);

        // Strongest sensed melodic motif, if any.
        std::vector<int> motif;
        for (const auto& p : sensed.pheromones) {
            if (p.pattern_type != PatternType::MelodicMotif) continue;
            int a = 0, b = 0;
            if (std::sscanf(p.pattern_data.c_str(), "%d,%d", &a, &b) == 2) {
                motif = {a, b};
                break;
            }
        }

        // Contour of the previous bar's top voice.
        std::vector<int> contour;
        int start_midi = 60 + ks.tonic;
        for (const auto& bar : context.bars) {
            if (bar.bar_number != context.bar_number - 1 || bar.voices.empty()) continue;
            std::vector<int> midis;
            for (const auto& n : bar.voices.front().notes)
                if (!n.is_rest()) midis.push_back(pitch_to_midi(n.pitch));
            for (size_t i = 0; i + 1 < midis.size(); ++i)
                contour.push_back(midis[i + 1] >= midis[i] ? 1 : -1);
            if (!midis.empty()) start_midi = midis.back();
        }

        Bar bar;
        bar.bar_number = context.bar_number;
        for (size_t vi = 0; vi < context.voices.size(); ++vi) {
            VoiceLine voice;
            voice.instrument = context.voices[vi];
            int current = std::clamp(start_midi - 12 * static_cast<int>(vi), 36, 84);
            double remaining = context.beats_per_bar;
            size_t pos = 0, motif_pos = 0;
            bool first = true;
            while (remaining > 1e-9) {
                double d = 1.0;
                if (u(rng) < personality.rhythmic_drive) d = u(rng) < 0.5 ? 0.25 : 0.5;
                d = std::min(d, remaining);
                if (remaining - d > 1e-9 && remaining - d < 0.25 - 1e-9) d = remaining;

                if (!first && u(rng) < 0.05) {
                    voice.notes.push_back({"rest", d});
                    remaining -= d;
                    continue;
                }
                int interval = 0;
                if (!motif.empty() && u(rng) < personality.theme_loyalty) {
                    interval = motif[motif_pos % motif.size()];
                    ++motif_pos;
                } else if (u(rng) < personality.risk_taking) {
                    std::uniform_int_distribution<int> mag(8, 14);
                    interval = mag(rng) * (u(rng) < 0.5 ? 1 : -1);
                } else {
                    std::uniform_int_distribution<int> mag(0, 2);
                    interval = mag(rng) * (u(rng) < 0.5 ? 1 : -1);
                }
                if (!contour.empty() && u(rng) < personality.neighbor_influence) {
                    int sign = contour[pos % contour.size()];
                    interval = std::abs(interval) * sign;
                }
                int cand = first ? current : current + interval;
                if (u(rng) < personality.harmonic_sensitivity) cand = snap_to_scale(cand, ks);
                while (cand < 36) cand += 12;
                while (cand > 84) cand -= 12;
                current = cand;
                voice.notes.push_back({midi_to_pitch(current), d});
                remaining -= d;
                first = false;
                ++pos;
            }
            bar.voices.push_back(std::move(voice));
        }

        EnhancedBarProposal proposal;
        proposal.bar = std::move(bar);
        proposal.rationale = "seeded generation for bar " + std::to_string(context.bar_number) +
                             " toward: " + objective;
        proposal.detailed_reasoning =
            "risk=" + fmt(personality.risk_taking) + " harm=" + fmt(personality.harmonic_sensitivity) +
            " drive=" + fmt(personality.rhythmic_drive);
        proposal.personality_reflection =
            "theme_loyalty=" + fmt(personality.theme_loyalty) +
            " neighbor_influence=" + fmt(personality.neighbor_influence);
        proposal.pheromone_interpretation =
            motif.empty() ? "no melodic pheromones sensed"
                          : "reusing strongest sensed motif when loyalty fires";
        (void)state;
        return proposal;
    }

    PieceAssessment assess_piece(const Piece& piece, const std::string& objective) override {
        return stub_assess_piece(piece, objective);
    }

    std::string propose_local_objective(const AgentState& state,
                                        const std::string& critic_feedback,
                                        const std::string& global_objective,
                                        int bar_number) override {
        (void)state;
        std::string needle = "bar=" + std::to_string(bar_number) + " ";
        size_t at = critic_feedback.find(needle);
        std::string component;
        if (at != std::string::npos) {
            size_t lo = critic_feedback.find("lowest=", at);
            size_t eol = critic_feedback.find('\n', at);
            if (lo != std::string::npos && (eol == std::string::npos || lo < eol)) {
                lo += 7;
                size_t end = critic_feedback.find_first_of(" \n", lo);
                component = critic_feedback.substr(lo, end - lo);
            }
        }
        if (component.empty())
            return "Refine bar " + std::to_string(bar_number) +
                   " in service of: " + global_objective;
        return "Improve " + component + " in bar " + std::to_string(bar_number) +
               " while serving: " + global_objective;
    }

    DetailedPeerAssessment assess_peer(const Piece& piece, int rater_id, int target_bar,
                                       const std::string& objective) override {
        DetailedPeerAssessment a;
        a.rater_id = rater_id;
        a.target_bar = target_bar;
        if (piece.bars.empty()) return a;
        auto curves = tonal_curves(piece);
        size_t ti = static_cast<size_t>(target_bar - 1);
        size_t ri = static_cast<size_t>(rater_id - 1);
        if (ti >= piece.bars.size()) return a;

        auto comps = bar_components(piece, ti, curves);
        double tension = curves.per_measure[ti].tension;
        a.musical_quality = comps.stability;
        a.objective_alignment = 0.5 * comps.stability + 0.5 * (1.0 - tension);
        if (ri < piece.bars.size())
            a.swarm_cooperation = std::max(
                0.0, cosine12(bar_chroma(piece.bars[ti]), bar_chroma(piece.bars[ri])));
        a.innovation_value = comps.risk;

        // small rater-dependent deterministic offset so agreement is informative
        double jitter =
            (static_cast<double>(stream_seed(0, "peer-jitter", rater_id, target_bar) % 1000) /
                 1000.0 -
             0.5) *
            0.04;
        auto adj = [&](double v) { return std::clamp(v + jitter, 0.0, 1.0); };
        a.musical_quality = adj(a.musical_quality);
        a.objective_alignment = adj(a.objective_alignment);
        a.swarm_cooperation = adj(a.swarm_cooperation);
        a.innovation_value = adj(a.innovation_value);

        a.musical_feedback = "stability " + fmt(comps.stability) + ", tension " + fmt(tension);
        a.cooperation_feedback = "chroma overlap with rater bar " + fmt(a.swarm_cooperation);
        a.innovation_commentary = "creative risk " + fmt(comps.risk);
        a.suggestions = "focus on " + std::string(comps.lowest()) + " (objective: " + objective + ")";
        return a;
    }

    std::array<double, 5> personality_deltas(const PersonalityVector& personality,
                                             const std::string& feedback, double reward,
                                             const std::string& objective,
                                             std::uint64_t seed) override {
        (void)personality;
        (void)feedback;
        (void)objective;
        auto rng = std::mt19937_64(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double magnitude = reward < 0.5 ? 0.10 : 0.05;
        std::array<double, 5> deltas{};
        for (auto& d : deltas) {
            double roll = u(rng);
            if (roll < 0.5) continue;  // leave half the traits alone on average
            d = (roll < 0.75 ? 1.0 : -1.0) * magnitude;
        }
        return deltas;
    }

    std::string compose_single_shot(int n_bars, const std::vector<std::string>& voices,
                                    const PieceMetadata& metadata, const std::string& objective,
                                    std::uint64_t seed) override {
        std::vector<Bar> bars;
        PersonalityVector personality;  // neutral traits
        for (int i = 1; i <= n_bars; ++i) {
            LocalContext context;
            context.bars = bars;
            context.bar_number = i;
            context.key = metadata.key;
            context.voices = voices;
            AgentState state;
            state.agent_id = i;
            auto proposal = compose(state, personality, context, SensedSignals{}, objective,
                                    stream_seed(seed, "single-shot", i));
            bars.push_back(proposal.bar);
        }
        return piece_to_json(assemble_piece(std::move(bars), metadata)).dump(2);
    }
};

}  // namespace

PieceAssessment stub_assess_piece(const Piece& piece, const std::string& objective) {
    PieceAssessment result;
    bool any_note = false;
    for (const auto& bar : piece.bars)
        for (const auto& voice : bar.voices)
            for (const auto& note : voice.notes)
                if (!note.is_rest()) any_note = true;

    std::ostringstream just;
    just << "critic components per bar (objective: " << objective << ")\n";

    if (!any_note || piece.bars.empty()) {
        // Degenerate score: with no sounding notes every component is 0.
        result.score = 0.0;
        just << "degenerate: no sounding notes\n";
        result.justification = just.str();
        return result;
    }

    auto curves = tonal_curves(piece);
    auto melody = upper_melody(piece);
    auto cm = creative_metrics(melody);
    double stability = curves.mean_stability;
    double diversity = rhythm_diversity(piece);
    double violation_freedom = melody.midis.empty() ? 0.0 : 1.0 - cm.violation_density;
    double risk = cm.creative_risk;
    result.score = std::clamp(
        0.4 * stability + 0.2 * diversity + 0.2 * violation_freedom + 0.2 * risk, 0.0, 1.0);

    for (size_t i = 0; i < piece.bars.size(); ++i) {
        auto comps = bar_components(piece, i, curves);
        just << "bar=" << piece.bars[i].bar_number << " stability=" << fmt(comps.stability)
             << " diversity=" << fmt(comps.diversity)
             << " violation_freedom=" << fmt(comps.violation_freedom)
             << " risk=" << fmt(comps.risk) << " lowest=" << comps.lowest() << "\n";
    }
    just << "totals stability=" << fmt(stability) << " diversity=" << fmt(diversity)
         << " violation_freedom=" << fmt(violation_freedom) << " risk=" << fmt(risk) << "\n";
    result.justification = just.str();
    return result;
}

std::unique_ptr<Policy> make_stub_policy() { return std::make_unique<StubPolicy>(); }

}  // namespace sc
