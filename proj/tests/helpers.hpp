#pragma once

#include <random>
#include <string>
#include <vector>

#include "swarmcomp/score.hpp"

namespace sc::test {

/// One-voice bar from explicit (pitch, duration) pairs.
inline Bar make_bar(int bar_number, const std::vector<std::pair<std::string, double>>& notes,
                    const std::string& instrument = "Piano") {
    Bar bar;
    bar.bar_number = bar_number;
    VoiceLine voice;
    voice.instrument = instrument;
    for (const auto& [pitch, duration] : notes) voice.notes.push_back({pitch, duration});
    bar.voices.push_back(std::move(voice));
    return bar;
}

inline Bar quarters_bar(int bar_number, const std::vector<std::string>& pitches,
                        const std::string& instrument = "Piano") {
    std::vector<std::pair<std::string, double>> notes;
    for (const auto& p : pitches) notes.emplace_back(p, 1.0);
    return make_bar(bar_number, notes, instrument);
}

inline Piece make_piece(const std::vector<Bar>& bars, PieceMetadata metadata = {}) {
    return assemble_piece(bars, metadata);
}

/// Melody fixture: starting midi + interval list, one bar per 4 notes
/// (padded with rests so durations always sum to 4 beats).
inline Piece melody_piece(int start_midi, const std::vector<int>& intervals) {
    std::vector<int> midis{start_midi};
    for (int iv : intervals) midis.push_back(midis.back() + iv);
    std::vector<Bar> bars;
    std::size_t at = 0;
    int bar_number = 1;
    while (at < midis.size()) {
        std::vector<std::pair<std::string, double>> notes;
        for (int slot = 0; slot < 4; ++slot) {
            if (at < midis.size())
                notes.emplace_back(midi_to_pitch(midis[at++]), 1.0);
            else
                notes.emplace_back("rest", 1.0);
        }
        bars.push_back(make_bar(bar_number++, notes));
    }
    return make_piece(bars);
}

/// Random valid piece: monophonic voices, durations from a small grid.
inline Piece random_piece(std::mt19937_64& rng, int n_bars = 4,
                          const std::vector<std::string>& voices = {"Piano"},
                          double rest_prob = 0.1) {
    std::uniform_int_distribution<int> midi_dist(36, 96);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double grid[] = {0.25, 0.5, 1.0, 2.0};
    std::vector<Bar> bars;
    for (int b = 1; b <= n_bars; ++b) {
        Bar bar;
        bar.bar_number = b;
        for (const auto& inst : voices) {
            VoiceLine voice;
            voice.instrument = inst;
            double left = 4.0;
            while (left > 1e-9) {
                double d = grid[rng() % 4];
                if (d > left) d = left;
                std::string pitch =
                    unit(rng) < rest_prob ? "rest" : midi_to_pitch(midi_dist(rng));
                voice.notes.push_back({pitch, d});
                left -= d;
            }
            bar.voices.push_back(std::move(voice));
        }
        bars.push_back(std::move(bar));
    }
    return make_piece(bars);
}

}  // namespace sc::test
