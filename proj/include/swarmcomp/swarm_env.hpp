#pragma once

#include <set>
#include <string>
#include <vector>

#include "swarmcomp/score.hpp"

namespace sc {

enum class PatternType { MelodicMotif, Rhythm };

/// Canonical pattern encoding: motif = interval 3-gram ("+3,+4"), rhythm =
/// full duration sequence ("1,0.5,0.5,2").
struct Pheromone {
    PatternType pattern_type = PatternType::MelodicMotif;
    std::string pattern_data;
    double strength = 0.5;
    int source_bar = 0;
    double success_score = 0.5;
    int success_count = 1;
    int timestamp = 0;
    std::set<int> all_source_bars;  // every bar that deposited this pattern
};

struct EmergentTheme {
    std::string pattern_data;
    PatternType pattern_type = PatternType::MelodicMotif;
    std::vector<int> source_bars;
    double mean_strength = 0.0;
};

struct EnvironmentConfig {
    double lambda_decay = 0.15;
    double strength_floor = 0.05;
    double alpha_reinforce = 0.25;
    double deposit_strength = 0.5;
    double theme_strength_min = 0.6;
    int theme_support_min = 2;
    int sensing_radius = 2;
};

struct UnknownPattern : std::runtime_error {
    explicit UnknownPattern(const std::string& p) : std::runtime_error("unknown pattern: " + p) {}
};

class Environment {
public:
    explicit Environment(EnvironmentConfig config = {}) : config_(config) {}

    const EnvironmentConfig& config() const { return config_; }
    const std::vector<Pheromone>& pheromones() const { return pheromones_; }
    const std::vector<EmergentTheme>& themes() const { return themes_; }
    double global_energy() const { return global_energy_; }

    /// Extracts interval 3-grams and the per-voice duration sequence from
    /// the bar; identical patterns are reinforced instead of duplicated.
    void deposit_from_bar(const Bar& bar, int iteration);

    /// strength *= (1 - lambda); pheromones below `floor` are pruned.
    void decay_and_prune(double lambda_decay, double floor);
    void decay_and_prune() { decay_and_prune(config_.lambda_decay, config_.strength_floor); }

    /// strength = min(1, strength + alpha*success); success_score becomes the
    /// running mean of deposits/reinforcements seen so far.
    void reinforce(const std::string& pattern_data, double alpha, double success_score);

    /// One decay step applied only to pheromones from one bar.
    void decay_bar(int source_bar, double lambda);

    /// Mean strength of live pheromones (0 when empty). Cached in the map.
    double update_global_energy();

    std::vector<EmergentTheme> detect_emergent_themes(double s_min, int m_min);
    void refresh_themes() { themes_ = detect_emergent_themes(config_.theme_strength_min, config_.theme_support_min); }

    /// Pheromones with |source_bar - bar_index| <= radius plus all emergent
    /// themes (globally visible), sorted by strength descending.
    std::vector<Pheromone> sense(int bar_index, int radius) const;

    std::vector<Pheromone>& mutable_pheromones() { return pheromones_; }

    json to_json() const;

private:
    Pheromone* find(const std::string& pattern_data);

    EnvironmentConfig config_;
    std::vector<Pheromone> pheromones_;
    std::vector<EmergentTheme> themes_;
    double global_energy_ = 0.0;
};

/// Interval 3-grams of one voice, e.g. "+3,+4" windows.
std::vector<std::string> motif_ngrams(const VoiceLine& voice);
std::string rhythm_pattern(const VoiceLine& voice);

}  // namespace sc
