#pragma once

#include <array>
#include <map>
#include <vector>

#include "swarmcomp/score.hpp"

namespace sc {

/// One voice flattened to (midi, duration) pairs with rests removed, plus the
/// successive semitone intervals.
struct MelodyView {
    std::vector<int> midis;
    std::vector<double> durations;
    std::vector<int> intervals;  // midis[i+1] - midis[i]
};

MelodyView melody_view(const Piece& piece, const std::string& instrument);

/// Upper voice = first voice of the first bar (melody-specific metrics are
/// computed on it by default; configurable at the call sites).
MelodyView upper_melody(const Piece& piece);

struct ExpectationResult {
    int violations = 0;
    double mean_surprise = 0.0;
    bool too_short = false;
};

/// Violation: stepwise motion (|interval| <= 2) followed by a leap
/// (|interval| > 7). Surprise per violation = min(1, |leap|/12).
ExpectationResult expectation_violations(const MelodyView& melody);

/// Leaps > 7 semitones divided by total note count. Throws on empty melody.
double surprise_density(const MelodyView& melody);

struct UnpredictabilityResult {
    double value = 0.0;
    bool too_short = false;
    bool low_support = false;  // every interval bigram unique
};

/// 1 - predictability under a self-trained order-2 maximum-likelihood model
/// over the interval sequence.
UnpredictabilityResult unpredictability(const MelodyView& melody);

struct CreativeMetrics {
    int expectation_violations = 0;
    double mean_surprise = 0.0;
    double surprise_density = 0.0;
    double violation_density = 0.0;
    double unpredictability = 0.0;
    double creative_risk = 0.0;
    bool degenerate = false;
};

CreativeMetrics creative_metrics(const MelodyView& melody);

/// Exact-value duration bins over all voices, ascending duration.
std::map<double, int> rhythm_histogram(const Piece& piece);

/// Normalized entropy of the duration distribution, in [0,1].
double rhythm_diversity(const Piece& piece);

struct TonalCurvePoint {
    double stability = 0.0;
    double tension = 0.0;
    bool all_rests = false;
};

struct TonalCurves {
    std::vector<TonalCurvePoint> per_measure;
    std::vector<int> tension_peaks;    // measure indices (0-based)
    std::vector<int> tension_valleys;
    int global_key = 0;        // 0..23: 0-11 major keys C..B, 12-23 minor
    double mean_stability = 0.0;
};

/// Krumhansl-Schmuckler template correlation per measure over all sounding
/// voices; tension blends pairwise dissonance with distance from the global
/// best key. Extrema filtered by an adaptive 0.25*(max-min) threshold.
TonalCurves tonal_curves(const Piece& piece);

/// Duration-weighted pitch-class profile of one bar across all voices.
std::array<double, 12> bar_chroma(const Bar& bar);

json musicology_report(const Piece& piece);

}  // namespace sc
