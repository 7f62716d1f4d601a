#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmcomp/score.hpp"

using namespace sc;
using namespace sc::test;

TEST_CASE("sanitize_note handles valid, rest and junk tokens") {
    CHECK(sanitize_note("A4") == "A4");
    CHECK(sanitize_note("rest") == "rest");
    CHECK(sanitize_note("Q#17") == "C4");
    CHECK(sanitize_note("  g#5 ") == "G#5");
    CHECK(sanitize_note("Bb3") == "Bb3");
    // out-of-range octaves clamp to 0-8
    CHECK(pitch_to_midi(sanitize_note("C9")) == pitch_to_midi("C8"));

    SUBCASE("output always re-parses (exhaustive junk scan)") {
        std::mt19937_64 rng(1);
        for (int i = 0; i < 2000; ++i) {
            std::string token;
            int len = static_cast<int>(rng() % 6);
            for (int c = 0; c < len; ++c) token.push_back(static_cast<char>(32 + rng() % 95));
            std::string out = sanitize_note(token);
            if (out != "rest") CHECK_NOTHROW(pitch_to_midi(out));
        }
    }

    SUBCASE("idempotent") {
        for (const char* t : {"A4", "rest", "Q#17", " db2", "c#-1", "B#4", "Cb4"}) {
            std::string once = sanitize_note(t);
            CHECK(sanitize_note(once) == once);
        }
    }
}

TEST_CASE("pitch_to_midi anchors and round trip") {
    CHECK(pitch_to_midi("A4") == 69);
    CHECK(pitch_to_midi("C4") == 60);
    CHECK(pitch_to_midi("G#5") == 80);
    CHECK_THROWS_AS(pitch_to_midi("rest"), RestHasNoPitch);

    SUBCASE("independent offset enumeration") {
        const char* names[] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
        for (int oct = 0; oct <= 8; ++oct)
            for (int pc = 0; pc < 12; ++pc) {
                int midi = (oct + 1) * 12 + pc;
                if (midi > 127) continue;
                CHECK(pitch_to_midi(std::string(names[pc]) + std::to_string(oct)) == midi);
            }
    }

    SUBCASE("midi_to_pitch inverse on 0-127") {
        for (int m = 0; m <= 127; ++m) CHECK(pitch_to_midi(midi_to_pitch(m)) == m);
    }
}

TEST_CASE("validate_bar reports each violated invariant") {
    std::vector<std::string> voices{"Piano"};
    CHECK(validate_bar(quarters_bar(1, {"C4", "E4", "G4", "C5"}), voices).empty());

    Bar short_bar = make_bar(1, {{"C4", 1.0}, {"E4", 1.0}, {"G4", 1.5}});
    auto report = validate_bar(short_bar, voices);
    bool found = false;
    for (const auto& issue : report)
        if (issue.kind == IssueKind::DurationSumMismatch) found = true;
    CHECK(found);

    Bar wrong_case = quarters_bar(1, {"C4", "E4", "G4", "C5"}, "piano");
    report = validate_bar(wrong_case, voices);
    bool unknown = false, missing = false;
    for (const auto& issue : report) {
        if (issue.kind == IssueKind::UnknownInstrument) unknown = true;
        if (issue.kind == IssueKind::MissingVoice) missing = true;
    }
    CHECK(unknown);
    CHECK(missing);
}

TEST_CASE("assemble_piece sorts and rejects gaps/duplicates") {
    auto b1 = quarters_bar(1, {"C4", "E4", "G4", "C5"});
    auto b2 = quarters_bar(2, {"D4", "F4", "A4", "D5"});
    auto b3 = quarters_bar(3, {"E4", "G4", "B4", "E5"});

    Piece piece = assemble_piece({b3, b1, b2}, {});
    REQUIRE(piece.bars.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(piece.bars[i].bar_number == i + 1);

    CHECK_THROWS_AS(assemble_piece({b1, b1, b2}, {}), BarIndexError);
    CHECK_THROWS_AS(assemble_piece({b1, b3}, {}), BarIndexError);
}

TEST_CASE("JSON export round-trips") {
    SUBCASE("empty-voice piece") {
        Bar bar;
        bar.bar_number = 1;
        bar.voices.push_back({"Piano", {}});
        Piece piece;
        piece.bars.push_back(bar);
        json j = piece_to_json(piece);
        CHECK(j["bars"][0]["voices"][0]["notes"].is_array());
        CHECK(j["bars"][0]["voices"][0]["notes"].empty());
        CHECK(piece_from_json(j) == piece);
    }
    SUBCASE("random pieces round trip exactly") {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 50; ++i) {
            Piece piece = random_piece(rng, 3, {"Piano", "Bass"});
            CHECK(piece_from_json(piece_to_json(piece)) == piece);
        }
    }
}

TEST_CASE("MIDI export: 4 quarters at 120 BPM decode to 480-tick pairs") {
    Piece piece = make_piece({quarters_bar(1, {"C4", "E4", "G4", "C5"})});
    auto bytes = piece_to_midi(piece);

    // manual decode oracle
    REQUIRE(bytes.size() > 22);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MThd");
    int tpq = bytes[12] * 256 + bytes[13];
    CHECK(tpq == 480);

    // find note-on events (0x90) in the voice track and check deltas
    std::vector<std::size_t> track_starts;
    for (std::size_t i = 0; i + 4 <= bytes.size(); ++i)
        if (std::string(bytes.begin() + i, bytes.begin() + i + 4) == "MTrk")
            track_starts.push_back(i);
    REQUIRE(track_starts.size() >= 1);

    // parse the last track's events with a minimal reader
    std::size_t at = track_starts.back() + 8;
    int note_ons = 0, note_offs = 0;
    long tick = 0;
    std::vector<long> on_ticks;
    int running = 0;
    while (at < bytes.size()) {
        long delta = 0;
        while (bytes[at] & 0x80) delta = (delta << 7) | (bytes[at++] & 0x7F);
        delta = (delta << 7) | bytes[at++];
        tick += delta;
        int status = bytes[at];
        if (status & 0x80) {
            running = status;
            ++at;
        } else {
            status = running;
        }
        if ((status & 0xF0) == 0x90) {
            int vel = bytes[at + 1];
            if (vel > 0) {
                ++note_ons;
                on_ticks.push_back(tick);
            } else {
                ++note_offs;
            }
            at += 2;
        } else if ((status & 0xF0) == 0x80) {
            ++note_offs;
            at += 2;
        } else if (status == 0xFF) {
            int type = bytes[at + 1];
            int len = bytes[at + 2];
            at += 3 + len;
            if (type == 0x2F) break;
        } else {
            at += 2;
        }
    }
    CHECK(note_ons == 4);
    CHECK(note_offs == 4);
    REQUIRE(on_ticks.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(on_ticks[i] == 480L * i);
}

TEST_CASE("file io round trip") {
    auto path = (std::filesystem::temp_directory_path() / "sc_io_test.txt").string();
    write_file(path, std::string("hello\n"));
    CHECK(read_file(path) == "hello\n");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_file("/nonexistent/sc/file"), IoError);
}
