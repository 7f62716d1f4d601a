#include "swarmcomp/score.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sc {

namespace {

const int kLetterSemitone[7] = {9, 11, 0, 2, 4, 5, 7};  // A B C D E F G

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Parses letter + accidentals + octave. Returns false when the token is not
// a pitch name. Unicode sharps/flats (U+266F / U+266D) are accepted.
bool parse_pitch(const std::string& raw, char& letter, int& accidental, int& octave) {
    std::string s = trim(raw);
    if (s.empty()) return false;
    size_t i = 0;
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    if (c < 'A' || c > 'G') return false;
    letter = c;
    ++i;
    accidental = 0;
    while (i < s.size()) {
        if (s[i] == '#') {
            ++accidental;
            ++i;
        } else if (s.compare(i, 3, "♯") == 0) {
            ++accidental;
            i += 3;
        } else if (s.compare(i, 3, "♭") == 0) {
            --accidental;
            i += 3;
        } else if (s[i] == 'b' || s[i] == 'B') {
            // the octave always starts with a digit or '-', so a 'b' here is a flat
            --accidental;
            ++i;
        } else {
            break;
        }
    }
    if (i >= s.size()) return false;
    size_t pos = 0;
    std::string tail = s.substr(i);
    try {
        octave = std::stoi(tail, &pos);
    } catch (const std::exception&) {
        return false;
    }
    if (pos != tail.size()) return false;
    if (std::abs(accidental) > 2) return false;
    return true;
}

std::string spell(char letter, int accidental, int octave) {
    std::string out(1, letter);
    for (int k = 0; k < accidental; ++k) out += '#';
    for (int k = 0; k > accidental; --k) out += 'b';
    out += std::to_string(octave);
    return out;
}

void push_varint(std::vector<std::uint8_t>& out, std::uint32_t value) {
    std::uint8_t buf[5];
    int n = 0;
    buf[n++] = value & 0x7F;
    while (value >>= 7) buf[n++] = (value & 0x7F) | 0x80;
    while (n--) out.push_back(buf[n]);
}

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back((v >> 24) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back(v & 0xFF);
}

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back((v >> 8) & 0xFF);
    out.push_back(v & 0xFF);
}

}  // namespace

double VoiceLine::total_beats() const {
    double sum = 0.0;
    for (const auto& n : notes) sum += n.duration;
    return sum;
}

const VoiceLine* Bar::find_voice(const std::string& instrument) const {
    for (const auto& v : voices)
        if (v.instrument == instrument) return &v;
    return nullptr;
}

std::string sanitize_note(const std::string& token, const std::string& fallback) {
    std::string s = trim(token);
    std::string lowered = s;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "rest" || lowered == "r") return "rest";

    char letter;
    int accidental, octave;
    if (!parse_pitch(s, letter, accidental, octave)) return fallback;
    octave = std::clamp(octave, 0, 8);
    std::string spelled = spell(letter, accidental, octave);
    // Octave clamping keeps every parsed name inside MIDI 0-127, but double
    // accidentals at the extremes could still escape; re-check.
    try {
        int midi = pitch_to_midi(spelled);
        if (midi < 0 || midi > 127) return fallback;
    } catch (const std::exception&) {
        return fallback;
    }
    return spelled;
}

int pitch_to_midi(const std::string& pitch) {
    if (pitch == "rest") throw RestHasNoPitch();
    char letter;
    int accidental, octave;
    if (!parse_pitch(pitch, letter, accidental, octave))
        throw std::invalid_argument("not a pitch name: " + pitch);
    int midi = (octave + 1) * 12 + kLetterSemitone[letter - 'A'] + accidental;
    if (midi < 0 || midi > 127) throw std::invalid_argument("pitch out of MIDI range: " + pitch);
    return midi;
}

std::string midi_to_pitch(int midi) {
    if (midi < 0 || midi > 127) throw std::invalid_argument("midi out of range");
    static const char* names[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                    "F#", "G",  "G#", "A",  "A#", "B"};
    return std::string(names[midi % 12]) + std::to_string(midi / 12 - 1);
}

int pitch_class(const std::string& pitch) { return pitch_to_midi(pitch) % 12; }

ValidationReport validate_bar(const Bar& bar, const std::vector<std::string>& voices,
                              double beats_per_bar) {
    ValidationReport report;
    if (bar.bar_number < 1) {
        report.push_back({IssueKind::BadBarNumber,
                          "bar_number must be >= 1, got " + std::to_string(bar.bar_number)});
    }
    std::vector<std::string> seen;
    for (const auto& voice : bar.voices) {
        if (std::find(voices.begin(), voices.end(), voice.instrument) == voices.end()) {
            report.push_back({IssueKind::UnknownInstrument,
                              "instrument '" + voice.instrument + "' not in voice set"});
        }
        seen.push_back(voice.instrument);
        double sum = 0.0;
        for (const auto& note : voice.notes) {
            if (!(note.duration > 0)) {
                report.push_back({IssueKind::NonPositiveDuration,
                                  "non-positive duration in voice '" + voice.instrument + "'"});
            }
            sum += note.duration;
            if (!note.is_rest()) {
                try {
                    pitch_to_midi(note.pitch);
                } catch (const std::exception&) {
                    report.push_back({IssueKind::BadPitch, "bad pitch '" + note.pitch +
                                                               "' in voice '" + voice.instrument +
                                                               "'"});
                }
            }
        }
        if (std::abs(sum - beats_per_bar) > kDurationTolerance) {
            std::ostringstream msg;
            msg << "DurationSumMismatch(" << sum << ", " << beats_per_bar << ") in voice '"
                << voice.instrument << "'";
            report.push_back({IssueKind::DurationSumMismatch, msg.str()});
        }
    }
    for (const auto& instrument : voices) {
        if (std::find(seen.begin(), seen.end(), instrument) == seen.end()) {
            report.push_back({IssueKind::MissingVoice, "missing voice '" + instrument + "'"});
        }
    }
    return report;
}

ValidationReport validate_piece(const Piece& piece, const std::vector<std::string>& voices,
                                double beats_per_bar) {
    ValidationReport report;
    for (const auto& bar : piece.bars) {
        auto r = validate_bar(bar, voices, beats_per_bar);
        report.insert(report.end(), r.begin(), r.end());
    }
    return report;
}

Piece assemble_piece(std::vector<Bar> bars, PieceMetadata metadata) {
    std::sort(bars.begin(), bars.end(),
              [](const Bar& a, const Bar& b) { return a.bar_number < b.bar_number; });
    for (size_t i = 0; i < bars.size(); ++i) {
        int expected = static_cast<int>(i) + 1;
        if (bars[i].bar_number != expected) {
            throw BarIndexError("bar indices must cover 1.." + std::to_string(bars.size()) +
                                "; found " + std::to_string(bars[i].bar_number) + " at position " +
                                std::to_string(expected));
        }
    }
    Piece piece;
    piece.metadata = std::move(metadata);
    piece.bars = std::move(bars);
    return piece;
}

json piece_to_json(const Piece& piece) {
    json bars = json::array();
    for (const auto& bar : piece.bars) {
        json voices = json::array();
        for (const auto& voice : bar.voices) {
            json notes = json::array();
            for (const auto& note : voice.notes)
                notes.push_back({{"pitch", note.pitch}, {"duration", note.duration}});
            voices.push_back({{"instrument", voice.instrument}, {"notes", notes}});
        }
        bars.push_back(
            {{"bar_number", bar.bar_number}, {"rationale", bar.rationale}, {"voices", voices}});
    }
    return json{{"metadata",
                 {{"key", piece.metadata.key},
                  {"time_signature",
                   {{"numerator", piece.metadata.time_sig_num},
                    {"denominator", piece.metadata.time_sig_den}}},
                  {"tempo_bpm", piece.metadata.tempo_bpm}}},
                {"bars", bars}};
}

Piece piece_from_json(const json& j) {
    Piece piece;
    const auto& meta = j.at("metadata");
    piece.metadata.key = meta.at("key").get<std::string>();
    piece.metadata.time_sig_num = meta.at("time_signature").at("numerator").get<int>();
    piece.metadata.time_sig_den = meta.at("time_signature").at("denominator").get<int>();
    piece.metadata.tempo_bpm = meta.at("tempo_bpm").get<double>();
    for (const auto& jb : j.at("bars")) {
        Bar bar;
        bar.bar_number = jb.at("bar_number").get<int>();
        bar.rationale = jb.value("rationale", "");
        for (const auto& jv : jb.at("voices")) {
            VoiceLine voice;
            voice.instrument = jv.at("instrument").get<std::string>();
            for (const auto& jn : jv.at("notes")) {
                voice.notes.push_back(
                    {jn.at("pitch").get<std::string>(), jn.at("duration").get<double>()});
            }
            bar.voices.push_back(std::move(voice));
        }
        piece.bars.push_back(std::move(bar));
    }
    return piece;
}

std::vector<std::uint8_t> piece_to_midi(const Piece& piece) {
    // Collect the voice set in first-appearance order.
    std::vector<std::string> instruments;
    for (const auto& bar : piece.bars)
        for (const auto& voice : bar.voices)
            if (std::find(instruments.begin(), instruments.end(), voice.instrument) ==
                instruments.end())
                instruments.push_back(voice.instrument);

    std::vector<std::vector<std::uint8_t>> tracks;

    // Tempo/time-signature track.
    {
        std::vector<std::uint8_t> t;
        push_varint(t, 0);
        std::uint32_t usec_per_quarter =
            static_cast<std::uint32_t>(std::llround(60000000.0 / piece.metadata.tempo_bpm));
        t.insert(t.end(), {0xFF, 0x51, 0x03});
        t.push_back((usec_per_quarter >> 16) & 0xFF);
        t.push_back((usec_per_quarter >> 8) & 0xFF);
        t.push_back(usec_per_quarter & 0xFF);
        push_varint(t, 0);
        int den_pow = 0;
        for (int d = piece.metadata.time_sig_den; d > 1; d >>= 1) ++den_pow;
        t.insert(t.end(), {0xFF, 0x58, 0x04, static_cast<std::uint8_t>(piece.metadata.time_sig_num),
                           static_cast<std::uint8_t>(den_pow), 24, 8});
        push_varint(t, 0);
        t.insert(t.end(), {0xFF, 0x2F, 0x00});
        tracks.push_back(std::move(t));
    }

    for (size_t vi = 0; vi < instruments.size(); ++vi) {
        std::vector<std::uint8_t> t;
        std::uint8_t channel = static_cast<std::uint8_t>(vi % 16);
        std::uint32_t pending_delta = 0;
        for (const auto& bar : piece.bars) {
            const VoiceLine* voice = bar.find_voice(instruments[vi]);
            if (!voice) continue;
            for (const auto& note : voice->notes) {
                std::uint32_t ticks = static_cast<std::uint32_t>(
                    std::llround(note.duration * kMidiTicksPerQuarter));
                if (note.is_rest()) {
                    pending_delta += ticks;
                    continue;
                }
                int midi = pitch_to_midi(note.pitch);
                push_varint(t, pending_delta);
                t.insert(t.end(), {static_cast<std::uint8_t>(0x90 | channel),
                                   static_cast<std::uint8_t>(midi), 80});
                push_varint(t, ticks);
                t.insert(t.end(), {static_cast<std::uint8_t>(0x80 | channel),
                                   static_cast<std::uint8_t>(midi), 0});
                pending_delta = 0;
            }
        }
        push_varint(t, pending_delta);
        t.insert(t.end(), {0xFF, 0x2F, 0x00});
        tracks.push_back(std::move(t));
    }

    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'M', 'T', 'h', 'd'});
    push_u32(out, 6);
    push_u16(out, 1);  // format 1
    push_u16(out, static_cast<std::uint16_t>(tracks.size()));
    push_u16(out, kMidiTicksPerQuarter);
    for (const auto& t : tracks) {
        out.insert(out.end(), {'M', 'T', 'r', 'k'});
        push_u32(out, static_cast<std::uint32_t>(t.size()));
        out.insert(out.end(), t.begin(), t.end());
    }
    return out;
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("write failed: " + path);
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace sc
