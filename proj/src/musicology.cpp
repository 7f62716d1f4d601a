#include "swarmcomp/musicology.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

namespace sc {

namespace {

// Krumhansl-Schmuckler key profiles.
const std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                              2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
const std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                              2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / 12.0;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / 12.0;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 12; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// Best correlation over the 24 rotated K-S templates. Returns {corr, key}.
std::pair<double, int> best_key_correlation(const std::array<double, 12>& profile) {
    double best = -2.0;
    int best_key = 0;
    for (int key = 0; key < 24; ++key) {
        const auto& tmpl = key < 12 ? kMajorProfile : kMinorProfile;
        int tonic = key % 12;
        std::array<double, 12> rotated;
        for (int pc = 0; pc < 12; ++pc) rotated[pc] = tmpl[(pc - tonic + 12) % 12];
        double c = pearson(profile, rotated);
        if (c > best) {
            best = c;
            best_key = key;
        }
    }
    return {best, best_key};
}

double key_correlation(const std::array<double, 12>& profile, int key) {
    const auto& tmpl = key < 12 ? kMajorProfile : kMinorProfile;
    int tonic = key % 12;
    std::array<double, 12> rotated;
    for (int pc = 0; pc < 12; ++pc) rotated[pc] = tmpl[(pc - tonic + 12) % 12];
    return pearson(profile, rotated);
}

bool is_dissonant_class(int semitones) {
    int ic = ((semitones % 12) + 12) % 12;
    return ic == 1 || ic == 2 || ic == 6 || ic == 10 || ic == 11;
}

// Duration-weighted fraction of dissonant pitch-class pairs among notes
// sounding simultaneously within the bar.
double bar_dissonance(const Bar& bar) {
    struct Span {
        double start, end;
        int midi;
    };
    std::vector<Span> spans;
    std::set<double> boundaries;
    for (const auto& voice : bar.voices) {
        double t = 0.0;
        for (const auto& note : voice.notes) {
            if (!note.is_rest()) {
                spans.push_back({t, t + note.duration, pitch_to_midi(note.pitch)});
                boundaries.insert(t);
                boundaries.insert(t + note.duration);
            }
            t += note.duration;
        }
    }
    if (spans.empty()) return 0.0;
    std::vector<double> cuts(boundaries.begin(), boundaries.end());
    double dissonant_weight = 0.0, pair_weight = 0.0;
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
        double a = cuts[s], b = cuts[s + 1], len = b - a;
        if (len <= 0) continue;
        std::set<int> pcs;
        for (const auto& span : spans)
            if (span.start <= a + 1e-12 && span.end >= b - 1e-12) pcs.insert(span.midi % 12);
        std::vector<int> v(pcs.begin(), pcs.end());
        for (size_t i = 0; i < v.size(); ++i)
            for (size_t j = i + 1; j < v.size(); ++j) {
                pair_weight += len;
                if (is_dissonant_class(v[j] - v[i])) dissonant_weight += len;
            }
    }
    return pair_weight > 0 ? dissonant_weight / pair_weight : 0.0;
}

}  // namespace

MelodyView melody_view(const Piece& piece, const std::string& instrument) {
    MelodyView m;
    for (const auto& bar : piece.bars) {
        const VoiceLine* voice = bar.find_voice(instrument);
        if (!voice) continue;
        for (const auto& note : voice->notes) {
            if (note.is_rest()) continue;
            m.midis.push_back(pitch_to_midi(note.pitch));
            m.durations.push_back(note.duration);
        }
    }
    for (size_t i = 0; i + 1 < m.midis.size(); ++i)
        m.intervals.push_back(m.midis[i + 1] - m.midis[i]);
    return m;
}

MelodyView upper_melody(const Piece& piece) {
    if (piece.bars.empty() || piece.bars.front().voices.empty()) return {};
    return melody_view(piece, piece.bars.front().voices.front().instrument);
}

ExpectationResult expectation_violations(const MelodyView& melody) {
    ExpectationResult r;
    if (melody.midis.size() < 3) {
        r.too_short = true;
        return r;
    }
    double surprise_sum = 0.0;
    for (size_t t = 0; t + 1 < melody.intervals.size(); ++t) {
        if (std::abs(melody.intervals[t]) <= 2 && std::abs(melody.intervals[t + 1]) > 7) {
            ++r.violations;
            surprise_sum += std::min(1.0, std::abs(melody.intervals[t + 1]) / 12.0);
        }
    }
    if (r.violations > 0) r.mean_surprise = surprise_sum / r.violations;
    return r;
}

double surprise_density(const MelodyView& melody) {
    if (melody.midis.empty()) throw std::invalid_argument("empty melody");
    int leaps = 0;
    for (int iv : melody.intervals)
        if (std::abs(iv) > 7) ++leaps;
    return static_cast<double>(leaps) / static_cast<double>(melody.midis.size());
}

UnpredictabilityResult unpredictability(const MelodyView& melody) {
    UnpredictabilityResult r;
    if (melody.intervals.size() < 3) {
        r.too_short = true;
        return r;
    }
    const auto& iv = melody.intervals;
    std::map<std::pair<int, int>, std::map<int, int>> continuations;
    for (size_t t = 0; t + 2 < iv.size(); ++t)
        continuations[{iv[t], iv[t + 1]}][iv[t + 2]]++;

    int hits = 0, total = 0;
    bool any_repeat = false;
    for (size_t t = 0; t + 2 < iv.size(); ++t) {
        const auto& table = continuations[{iv[t], iv[t + 1]}];
        int mode = table.begin()->first, mode_count = table.begin()->second;
        int support = 0;
        for (const auto& [next, count] : table) {
            support += count;
            if (count > mode_count) {
                mode = next;
                mode_count = count;
            }
        }
        if (support > 1) any_repeat = true;
        if (iv[t + 2] == mode) ++hits;
        ++total;
    }
    r.low_support = !any_repeat;
    double predictability = total > 0 ? static_cast<double>(hits) / total : 1.0;
    r.value = 1.0 - predictability;
    return r;
}

CreativeMetrics creative_metrics(const MelodyView& melody) {
    CreativeMetrics m;
    if (melody.midis.empty()) {
        m.degenerate = true;
        return m;
    }
    auto ev = expectation_violations(melody);
    m.expectation_violations = ev.violations;
    m.mean_surprise = ev.mean_surprise;
    m.surprise_density = surprise_density(melody);
    m.violation_density = static_cast<double>(ev.violations) / melody.midis.size();
    auto up = unpredictability(melody);
    m.unpredictability = up.value;
    m.degenerate = ev.too_short || up.too_short;
    m.creative_risk = (m.surprise_density + m.violation_density + m.unpredictability) / 3.0;
    return m;
}

std::map<double, int> rhythm_histogram(const Piece& piece) {
    std::map<double, int> bins;
    for (const auto& bar : piece.bars)
        for (const auto& voice : bar.voices)
            for (const auto& note : voice.notes) bins[note.duration]++;
    return bins;
}

double rhythm_diversity(const Piece& piece) {
    auto bins = rhythm_histogram(piece);
    if (bins.size() < 2) return 0.0;
    double total = 0;
    for (const auto& [d, c] : bins) total += c;
    double h = 0;
    for (const auto& [d, c] : bins) {
        double p = c / total;
        h -= p * std::log(p);
    }
    return h / std::log(static_cast<double>(bins.size()));
}

std::array<double, 12> bar_chroma(const Bar& bar) {
    std::array<double, 12> chroma{};
    for (const auto& voice : bar.voices)
        for (const auto& note : voice.notes)
            if (!note.is_rest()) chroma[pitch_to_midi(note.pitch) % 12] += note.duration;
    return chroma;
}

TonalCurves tonal_curves(const Piece& piece) {
    if (piece.bars.empty()) throw std::invalid_argument("tonal_curves requires >= 1 bar");
    TonalCurves out;

    std::array<double, 12> global{};
    for (const auto& bar : piece.bars) {
        auto c = bar_chroma(bar);
        for (int i = 0; i < 12; ++i) global[i] += c[i];
    }
    out.global_key = best_key_correlation(global).second;

    double stability_sum = 0.0;
    int counted = 0;
    for (const auto& bar : piece.bars) {
        TonalCurvePoint pt;
        auto chroma = bar_chroma(bar);
        double mass = std::accumulate(chroma.begin(), chroma.end(), 0.0);
        if (mass <= 0) {
            pt.all_rests = true;
        } else {
            auto [corr, key] = best_key_correlation(chroma);
            pt.stability = (corr + 1.0) / 2.0;
            double key_dist = 1.0 - (key_correlation(chroma, out.global_key) + 1.0) / 2.0;
            pt.tension = 0.5 * bar_dissonance(bar) + 0.5 * key_dist;
            stability_sum += pt.stability;
            ++counted;
        }
        out.per_measure.push_back(pt);
    }
    out.mean_stability = counted > 0 ? stability_sum / counted : 0.0;

    // Adaptive extrema: strict local extremum deviating from the curve mean
    // by more than 0.25*(max-min).
    std::vector<double> curve;
    for (const auto& pt : out.per_measure) curve.push_back(pt.tension);
    if (curve.size() >= 3) {
        double lo = *std::min_element(curve.begin(), curve.end());
        double hi = *std::max_element(curve.begin(), curve.end());
        double range = hi - lo;
        double mean = std::accumulate(curve.begin(), curve.end(), 0.0) / curve.size();
        double thr = 0.25 * range;
        if (range > 0) {
            for (size_t i = 1; i + 1 < curve.size(); ++i) {
                if (curve[i] > curve[i - 1] && curve[i] > curve[i + 1] && curve[i] - mean > thr)
                    out.tension_peaks.push_back(static_cast<int>(i));
                if (curve[i] < curve[i - 1] && curve[i] < curve[i + 1] && mean - curve[i] > thr)
                    out.tension_valleys.push_back(static_cast<int>(i));
            }
        }
    }
    return out;
}

json musicology_report(const Piece& piece) {
    auto melody = upper_melody(piece);
    auto cm = creative_metrics(melody);
    auto hist = rhythm_histogram(piece);
    json bins = json::array();
    for (const auto& [duration, count] : hist)
        bins.push_back({{"duration", duration}, {"count", count}});

    json report{{"creative",
                 {{"expectation_violations", cm.expectation_violations},
                  {"mean_surprise", cm.mean_surprise},
                  {"surprise_density", cm.surprise_density},
                  {"violation_density", cm.violation_density},
                  {"unpredictability", cm.unpredictability},
                  {"creative_risk", cm.creative_risk},
                  {"degenerate", cm.degenerate}}},
                {"rhythm_histogram", bins},
                {"rhythm_diversity", rhythm_diversity(piece)}};

    if (!piece.bars.empty()) {
        auto tc = tonal_curves(piece);
        json measures = json::array();
        for (const auto& pt : tc.per_measure)
            measures.push_back({{"stability", pt.stability},
                                {"tension", pt.tension},
                                {"all_rests", pt.all_rests}});
        report["tonal"] = {{"per_measure", measures},
                           {"mean_stability", tc.mean_stability},
                           {"global_key", tc.global_key},
                           {"tension_peaks", tc.tension_peaks},
                           {"tension_valleys", tc.tension_valleys}};
    }
    return report;
}

}  // namespace sc
