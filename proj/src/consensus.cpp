#include "swarmcomp/consensus.hpp"

#include <algorithm>
#include <cmath>

#include "swarmcomp/rng.hpp"

namespace sc {

std::vector<DetailedPeerAssessment> assess_neighborhood(const Piece& piece, int target_bar,
                                                        int range, const std::string& objective,
                                                        Policy& policy,
                                                        std::vector<std::string>* failures) {
    std::vector<DetailedPeerAssessment> out;
    int n = static_cast<int>(piece.bars.size());
    for (int rater = std::max(1, target_bar - range);
         rater <= std::min(n, target_bar + range); ++rater) {
        if (rater == target_bar) continue;
        try {
            out.push_back(policy.assess_peer(piece, rater, target_bar, objective));
        } catch (const std::exception& e) {
            if (failures)
                failures->push_back("rater " + std::to_string(rater) + " -> bar " +
                                    std::to_string(target_bar) + ": " + e.what());
        }
    }
    return out;
}

ConsensusReport aggregate(const std::vector<DetailedPeerAssessment>& assessments, int n_bars) {
    ConsensusReport report;
    std::map<int, std::vector<const DetailedPeerAssessment*>> by_bar;
    for (const auto& a : assessments) by_bar[a.target_bar].push_back(&a);

    double sigma_sum = 0.0;
    int sigma_count = 0;
    for (int bar = 1; bar <= n_bars; ++bar) {
        auto it = by_bar.find(bar);
        if (it == by_bar.end() || it->second.empty()) {
            report.unassessed_bars.push_back(bar);
            continue;
        }
        BarConsensus bc;
        bc.bar_number = bar;
        bc.rater_count = static_cast<int>(it->second.size());
        for (int m = 0; m < 4; ++m) {
            double mean = 0.0;
            for (const auto* a : it->second) mean += a->scores()[m];
            mean /= bc.rater_count;
            double var = 0.0;  // population variance
            for (const auto* a : it->second) {
                double d = a->scores()[m] - mean;
                var += d * d;
            }
            var /= bc.rater_count;
            bc.means[m] = mean;
            bc.agreements[m] = 1.0 - std::sqrt(var);
            sigma_sum += mean;
            ++sigma_count;
        }
        report.per_bar[bar] = bc;
    }
    report.overall_satisfaction = sigma_count > 0 ? sigma_sum / sigma_count : 0.0;
    return report;
}

double shaped_reward(const BarConsensus& consensus, const RewardWeights& weights) {
    double sum = weights.quality + weights.alignment + weights.cooperation + weights.innovation;
    if (std::abs(sum - 1.0) > 1e-9)
        throw BadWeights("reward weights must sum to 1, got " + std::to_string(sum));
    return weights.quality * consensus.means[0] + weights.alignment * consensus.means[1] +
           weights.cooperation * consensus.means[2] + weights.innovation * consensus.means[3];
}

PersonalityVector evolve_personality(const PersonalityVector& personality,
                                     const std::string& feedback, double reward,
                                     const std::string& objective, Policy& policy,
                                     std::uint64_t seed) {
    auto values = personality.values();
    std::array<double, 5> deltas{};
    bool fell_back = false;
    try {
        deltas = policy.personality_deltas(personality, feedback, reward, objective, seed);
    } catch (const std::exception&) {
        fell_back = true;
    }
    if (fell_back) {
        auto rng = std::mt19937_64(seed);
        std::uniform_real_distribution<double> drift(-0.01, 0.01);
        for (auto& d : deltas) d = drift(rng);
    } else {
        for (auto& d : deltas) {
            d = std::clamp(d, -0.20, 0.20);
            if (d != 0.0 && std::abs(d) < 0.05) d = d > 0 ? 0.05 : -0.05;
        }
    }
    for (size_t i = 0; i < 5; ++i) values[i] = std::clamp(values[i] + deltas[i], 0.1, 0.9);
    return PersonalityVector::from_values(values);
}

void update_env_from_consensus(Environment& env, const ConsensusReport& report,
                               double alpha_reinforce, const RewardWeights& weights) {
    for (const auto& [bar, consensus] : report.per_bar) {
        double reward = shaped_reward(consensus, weights);
        if (reward >= 0.5) {
            // scaled so the 0.5 boundary is a no-op and r=1 adds exactly alpha
            double success = (reward - 0.5) / 0.5;
            std::vector<std::string> patterns;
            for (const auto& p : env.pheromones())
                if (p.all_source_bars.count(bar)) patterns.push_back(p.pattern_data);
            for (const auto& pat : patterns) env.reinforce(pat, alpha_reinforce, success);
        } else {
            double lambda = env.config().lambda_decay * (0.5 - reward) / 0.5;
            env.decay_bar(bar, lambda);
        }
    }
}

json ConsensusReport::to_json() const {
    static const char* metric_names[4] = {"musical_quality", "objective_alignment",
                                          "swarm_cooperation", "innovation_value"};
    json bars = json::array();
    for (const auto& [bar, bc] : per_bar) {
        json means, agreements;
        for (int m = 0; m < 4; ++m) {
            means[metric_names[m]] = bc.means[m];
            agreements[metric_names[m]] = bc.agreements[m];
        }
        bars.push_back({{"bar_number", bar},
                        {"rater_count", bc.rater_count},
                        {"means", means},
                        {"agreements", agreements}});
    }
    return json{{"per_bar", bars},
                {"unassessed_bars", unassessed_bars},
                {"overall_satisfaction", overall_satisfaction}};
}

}  // namespace sc
