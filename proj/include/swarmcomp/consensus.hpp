#pragma once

#include <map>
#include <optional>

#include "swarmcomp/policy.hpp"

namespace sc {

struct BadWeights : std::runtime_error {
    explicit BadWeights(const std::string& what) : std::runtime_error(what) {}
};

struct RewardWeights {
    double quality = 0.4;
    double alignment = 0.3;
    double cooperation = 0.15;
    double innovation = 0.15;
};

struct BarConsensus {
    int bar_number = 0;
    int rater_count = 0;
    // mean and agreement (1 - population std) per metric:
    // [quality, alignment, cooperation, innovation]
    std::array<double, 4> means{};
    std::array<double, 4> agreements{};
};

struct ConsensusReport {
    std::map<int, BarConsensus> per_bar;   // assessed bars only
    std::vector<int> unassessed_bars;
    double overall_satisfaction = 0.0;     // sigma: mean of all (bar, metric) means

    json to_json() const;
};

/// One assessment per agent i != j with |i - j| <= k. Raters whose policy
/// call fails are skipped (and reported), never fabricated.
std::vector<DetailedPeerAssessment> assess_neighborhood(const Piece& piece, int target_bar,
                                                        int range, const std::string& objective,
                                                        Policy& policy,
                                                        std::vector<std::string>* failures = nullptr);

ConsensusReport aggregate(const std::vector<DetailedPeerAssessment>& assessments, int n_bars);

/// r = weighted blend of the four consensus means; weights must sum to 1.
double shaped_reward(const BarConsensus& consensus, const RewardWeights& weights = {});

/// Applies the policy-proposed deltas under the clamp rules: |delta| <= 0.20,
/// nonzero deltas coerced to |delta| >= 0.05, result in [0.1, 0.9]. On policy
/// failure a seeded uniform drift in [-0.01, 0.01] per trait is applied.
PersonalityVector evolve_personality(const PersonalityVector& personality,
                                     const std::string& feedback, double reward,
                                     const std::string& objective, Policy& policy,
                                     std::uint64_t seed);

/// Reinforce pheromones from well-rated bars (reward >= 0.5), attenuate the
/// rest with a decay scaled by (0.5 - r)/0.5.
void update_env_from_consensus(Environment& env, const ConsensusReport& report,
                               double alpha_reinforce,
                               const RewardWeights& weights = {});

}  // namespace sc
