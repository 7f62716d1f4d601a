#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sc {

using json = nlohmann::json;

inline constexpr double kDurationTolerance = 1e-9;
inline constexpr double kDefaultBeatsPerBar = 4.0;
inline constexpr int kMidiTicksPerQuarter = 480;

struct RestHasNoPitch : std::runtime_error {
    RestHasNoPitch() : std::runtime_error("rest has no pitch") {}
};

struct BarIndexError : std::runtime_error {
    explicit BarIndexError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A single note or rest. `pitch` is a scientific pitch name ("A4", "G#5")
/// or the literal token "rest". Durations are in quarter-note beats.
struct NoteEvent {
    std::string pitch;
    double duration = 1.0;

    bool is_rest() const { return pitch == "rest"; }
    bool operator==(const NoteEvent&) const = default;
};

struct VoiceLine {
    std::string instrument;
    std::vector<NoteEvent> notes;

    double total_beats() const;
    bool operator==(const VoiceLine&) const = default;
};

struct Bar {
    int bar_number = 1;
    std::string rationale;
    std::vector<VoiceLine> voices;

    const VoiceLine* find_voice(const std::string& instrument) const;
    bool operator==(const Bar&) const = default;
};

struct PieceMetadata {
    std::string key = "C major";
    int time_sig_num = 4;
    int time_sig_den = 4;
    double tempo_bpm = 120.0;

    bool operator==(const PieceMetadata&) const = default;
};

struct Piece {
    PieceMetadata metadata;
    std::vector<Bar> bars;

    bool operator==(const Piece&) const = default;
};

// ---------------------------------------------------------------------------
// Pitch handling

/// Total sanitizer: any string in, a usable pitch token out. Accepts unicode
/// accidentals, lowercase, surrounding whitespace; clamps octaves to 0-8.
/// Unparseable tokens fall back to `fallback` (default "C4").
std::string sanitize_note(const std::string& token, const std::string& fallback = "C4");

/// Equal-temperament mapping with A4 = 69. Throws RestHasNoPitch on "rest"
/// and std::invalid_argument on malformed names.
int pitch_to_midi(const std::string& pitch);

/// Canonical sharp spelling: 60 -> "C4", 61 -> "C#4".
std::string midi_to_pitch(int midi);

/// Pitch class 0-11 (C=0). Throws as pitch_to_midi.
int pitch_class(const std::string& pitch);

// ---------------------------------------------------------------------------
// Validation

enum class IssueKind {
    DurationSumMismatch,
    UnknownInstrument,
    MissingVoice,
    BadPitch,
    NonPositiveDuration,
    BadBarNumber,
};

struct ValidationIssue {
    IssueKind kind;
    std::string message;
};

using ValidationReport = std::vector<ValidationIssue>;

/// Report-valued validation; empty report <=> bar is valid against the
/// configured voice set and beats-per-bar.
ValidationReport validate_bar(const Bar& bar, const std::vector<std::string>& voices,
                              double beats_per_bar = kDefaultBeatsPerBar);

ValidationReport validate_piece(const Piece& piece, const std::vector<std::string>& voices,
                                double beats_per_bar = kDefaultBeatsPerBar);

/// Sorts bars by bar_number and checks indices cover 1..N exactly.
/// Throws BarIndexError on gaps or duplicates.
Piece assemble_piece(std::vector<Bar> bars, PieceMetadata metadata);

// ---------------------------------------------------------------------------
// Serialization

json piece_to_json(const Piece& piece);
Piece piece_from_json(const json& j);

/// Standard MIDI File type 1, 480 TPQ, one track per voice.
std::vector<std::uint8_t> piece_to_midi(const Piece& piece);

void write_file(const std::string& path, const std::string& data);
void write_file(const std::string& path, const std::vector<std::uint8_t>& data);
std::string read_file(const std::string& path);

}  // namespace sc
