#include "swarmcomp/swarm_env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sc {

namespace {

std::string format_duration(double d) {
    std::ostringstream ss;
    ss << d;
    return ss.str();
}

}  // namespace

std::vector<std::string> motif_ngrams(const VoiceLine& voice) {
    std::vector<int> midis;
    for (const auto& note : voice.notes)
        if (!note.is_rest()) midis.push_back(pitch_to_midi(note.pitch));
    std::vector<std::string> grams;
    for (size_t i = 0; i + 2 < midis.size(); ++i) {
        std::ostringstream ss;
        ss << std::showpos << (midis[i + 1] - midis[i]) << "," << (midis[i + 2] - midis[i + 1]);
        grams.push_back(ss.str());
    }
    return grams;
}

std::string rhythm_pattern(const VoiceLine& voice) {
    std::string out;
    for (size_t i = 0; i < voice.notes.size(); ++i) {
        if (i) out += ",";
        out += format_duration(voice.notes[i].duration);
    }
    return out;
}

Pheromone* Environment::find(const std::string& pattern_data) {
    for (auto& p : pheromones_)
        if (p.pattern_data == pattern_data) return &p;
    return nullptr;
}

void Environment::deposit_from_bar(const Bar& bar, int iteration) {
    auto add = [&](PatternType type, const std::string& data) {
        if (data.empty()) return;
        if (Pheromone* existing = find(data)) {
            existing->strength =
                std::min(1.0, existing->strength + config_.alpha_reinforce * existing->success_score);
            existing->timestamp = iteration;
            existing->all_source_bars.insert(bar.bar_number);
        } else {
            Pheromone p;
            p.pattern_type = type;
            p.pattern_data = data;
            p.strength = config_.deposit_strength;
            p.source_bar = bar.bar_number;
            p.success_score = 0.5;
            p.timestamp = iteration;
            p.all_source_bars.insert(bar.bar_number);
            pheromones_.push_back(std::move(p));
        }
    };
    for (const auto& voice : bar.voices) {
        for (const auto& gram : motif_ngrams(voice)) add(PatternType::MelodicMotif, gram);
        add(PatternType::Rhythm, rhythm_pattern(voice));
    }
}

void Environment::decay_and_prune(double lambda_decay, double floor) {
    for (auto& p : pheromones_) p.strength *= (1.0 - lambda_decay);
    std::erase_if(pheromones_, [&](const Pheromone& p) { return p.strength < floor; });
}

void Environment::reinforce(const std::string& pattern_data, double alpha, double success_score) {
    Pheromone* p = find(pattern_data);
    if (!p) throw UnknownPattern(pattern_data);
    p->strength = std::min(1.0, p->strength + alpha * success_score);
    // running mean of observed success
    p->success_count += 1;
    p->success_score += (success_score - p->success_score) / p->success_count;
}

void Environment::decay_bar(int source_bar, double lambda) {
    for (auto& p : pheromones_)
        if (p.all_source_bars.count(source_bar)) p.strength *= (1.0 - lambda);
    std::erase_if(pheromones_,
                  [&](const Pheromone& p) { return p.strength < config_.strength_floor; });
}

double Environment::update_global_energy() {
    if (pheromones_.empty()) {
        global_energy_ = 0.0;
    } else {
        double sum = 0;
        for (const auto& p : pheromones_) sum += p.strength;
        global_energy_ = sum / pheromones_.size();
    }
    return global_energy_;
}

std::vector<EmergentTheme> Environment::detect_emergent_themes(double s_min, int m_min) {
    std::vector<EmergentTheme> themes;
    for (const auto& p : pheromones_) {
        if (p.strength < s_min) continue;
        if (static_cast<int>(p.all_source_bars.size()) < m_min) continue;
        EmergentTheme theme;
        theme.pattern_data = p.pattern_data;
        theme.pattern_type = p.pattern_type;
        theme.source_bars.assign(p.all_source_bars.begin(), p.all_source_bars.end());
        theme.mean_strength = p.strength;
        themes.push_back(std::move(theme));
    }
    std::stable_sort(themes.begin(), themes.end(),
                     [](const EmergentTheme& a, const EmergentTheme& b) {
                         return a.mean_strength > b.mean_strength;
                     });
    return themes;
}

std::vector<Pheromone> Environment::sense(int bar_index, int radius) const {
    std::vector<Pheromone> view;
    for (const auto& p : pheromones_) {
        bool in_range = std::abs(p.source_bar - bar_index) <= radius;
        if (!in_range) {
            // themes are globally visible regardless of radius
            for (const auto& theme : themes_)
                if (theme.pattern_data == p.pattern_data) {
                    in_range = true;
                    break;
                }
        }
        if (in_range) view.push_back(p);
    }
    std::stable_sort(view.begin(), view.end(), [](const Pheromone& a, const Pheromone& b) {
        return a.strength > b.strength;
    });
    return view;
}

json Environment::to_json() const {
    json pheromones = json::array();
    for (const auto& p : pheromones_) {
        pheromones.push_back(
            {{"pattern_type", p.pattern_type == PatternType::MelodicMotif ? "melodic_motif" : "rhythm"},
             {"pattern_data", p.pattern_data},
             {"strength", p.strength},
             {"source_bar", p.source_bar},
             {"success_score", p.success_score},
             {"timestamp", p.timestamp},
             {"all_source_bars", p.all_source_bars}});
    }
    json themes = json::array();
    for (const auto& t : themes_) {
        themes.push_back(
            {{"pattern_type", t.pattern_type == PatternType::MelodicMotif ? "melodic_motif" : "rhythm"},
             {"pattern_data", t.pattern_data},
             {"source_bars", t.source_bars},
             {"mean_strength", t.mean_strength}});
    }
    return json{{"pheromones", pheromones}, {"global_energy", global_energy_}, {"themes", themes}};
}

}  // namespace sc
