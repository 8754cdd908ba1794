#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/matrix_io.hpp"
#include "darkselect/prng.hpp"
#include "darkselect/record.hpp"
#include "darkselect/subprocess.hpp"

using namespace darkselect;
namespace fs = std::filesystem;

namespace {

// Quantize to the canonical on-disk precision so round trips are exact.
double q9(double v) { return std::strtod(format_g9(v).c_str(), nullptr); }

UtteranceRecord random_record(Prng& rng, int i) {
    UtteranceRecord r;
    r.utterance_id = "utt-" + std::to_string(i);
    r.group_id = "grp-" + std::to_string(i % 7);
    r.channel_id = "ch-" + std::to_string(i % 5);
    if (rng.uniform() < 0.5) r.speaker_id = r.channel_id;
    r.text = "hello \"quoted\" text\t" + std::to_string(i);
    r.audio_path = rng.uniform() < 0.5 ? "" : "/tmp/a" + std::to_string(i) + ".wav";
    r.start_s = q9(rng.uniform(0.0, 100.0));
    r.end_s = q9(r.start_s + rng.uniform(0.01, 5.0));
    if (rng.uniform() < 0.7) r.ctc_score = q9(-rng.uniform(0.0, 2.0));
    if (rng.uniform() < 0.1) r.ctc_score = -std::numeric_limits<double>::infinity();
    if (rng.uniform() < 0.5) r.compactness = q9(rng.uniform(0.0, 10.0));
    if (rng.uniform() < 0.5) r.speech_fraction = q9(rng.uniform());
    if (rng.uniform() < 0.6) {
        r.acoustic_scores["naturalness"] = q9(rng.uniform(1.0, 5.0));
        r.acoustic_scores["noisiness"] = q9(rng.uniform(1.0, 5.0));
    }
    if (rng.uniform() < 0.5) r.planted_quality = q9(rng.uniform());
    if (rng.uniform() < 0.4) r.feature_path = "/tmp/f" + std::to_string(i) + ".mtx";
    if (rng.uniform() < 0.5) r.utt_score = q9(rng.gaussian());
    if (rng.uniform() < 0.5) r.selected.insert("ours-utt");
    if (rng.uniform() < 0.3) r.selected.insert("training");
    return r;
}

CorpusManifest random_manifest(Prng& rng, int n) {
    CorpusManifest m;
    for (int i = 0; i < n; ++i) m.records.push_back(random_record(rng, i));
    if (rng.uniform() < 0.7) {
        m.metadata["stages"] = "synthcorpus>ctc_filter";
        m.metadata["seed"] = "42";
    }
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("empty file reads as empty manifest") {
    TempDir tmp("manifest");
    const auto p = tmp.path() / "empty.jsonl";
    std::ofstream(p).close();
    const auto m = read_manifest(p);
    CHECK(m.records.empty());
    CHECK(m.metadata.empty());
}

TEST_CASE("two valid records preserve order") {
    TempDir tmp("manifest");
    const auto p = tmp.path() / "two.jsonl";
    {
        std::ofstream out(p);
        out << R"({"utterance_id":"b","group_id":"g","text":"x","start_s":0,"end_s":1})"
            << "\n";
        out << R"({"utterance_id":"a","group_id":"g","text":"y","start_s":1,"end_s":2})"
            << "\n";
    }
    const auto m = read_manifest(p);
    REQUIRE(m.records.size() == 2);
    CHECK(m.records[0].utterance_id == "b");
    CHECK(m.records[1].utterance_id == "a");
}

TEST_CASE("invalid timing names the offending record") {
    TempDir tmp("manifest");
    const auto p = tmp.path() / "bad.jsonl";
    {
        std::ofstream out(p);
        out << R"({"utterance_id":"ok","group_id":"g","text":"x","start_s":0,"end_s":1})"
            << "\n";
        out << R"({"utterance_id":"broken","group_id":"g","text":"y","start_s":2,"end_s":2})"
            << "\n";
    }
    try {
        read_manifest(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("broken") != std::string::npos);
        CHECK(msg.find(":2") != std::string::npos);  // line number
    }
}

TEST_CASE("duplicate utterance ids are rejected") {
    CorpusManifest m;
    for (int i = 0; i < 2; ++i) {
        UtteranceRecord r;
        r.utterance_id = "same";
        r.group_id = "g";
        r.end_s = 1.0;
        m.records.push_back(r);
    }
    CHECK_THROWS_AS(validate_manifest(m), ValidationError);
}

TEST_CASE("record invariants are enforced") {
    UtteranceRecord r;
    r.utterance_id = "u";
    r.group_id = "g";
    r.end_s = 1.0;
    validate_record(r);

    auto bad = r;
    bad.ctc_score = 0.5;
    CHECK_THROWS_AS(validate_record(bad), ValidationError);
    bad = r;
    bad.acoustic_scores["naturalness"] = 5.5;
    CHECK_THROWS_AS(validate_record(bad), ValidationError);
    bad = r;
    bad.speaker_id = "s";  // without channel_id
    CHECK_THROWS_AS(validate_record(bad), ValidationError);
    bad = r;
    bad.start_s = -0.5;
    CHECK_THROWS_AS(validate_record(bad), ValidationError);
}

TEST_CASE("unknown keys are rejected with line info") {
    CHECK_THROWS_AS(record_from_line(R"({"utterance_id":"u","wat":1})"),
                    ValidationError);
}

TEST_CASE("round trip is the identity and writes are byte-stable") {
    TempDir tmp("manifest");
    Prng rng(2024);
    for (int round = 0; round < 25; ++round) {
        const CorpusManifest m = random_manifest(rng, 1 + int(rng.below(40)));
        const auto p1 = tmp.path() / "m1.jsonl";
        const auto p2 = tmp.path() / "m2.jsonl";
        write_manifest(m, p1);
        const CorpusManifest back = read_manifest(p1);
        CHECK(back == m);
        write_manifest(back, p2);
        CHECK(slurp(p1) == slurp(p2));
    }
}

TEST_CASE("absent optional fields are omitted from the line") {
    UtteranceRecord r;
    r.utterance_id = "u";
    r.group_id = "g";
    r.text = "t";
    r.end_s = 1.0;
    const std::string line = record_to_line(r);
    CHECK(line.find("ctc_score") == std::string::npos);
    CHECK(line.find("utt_score") == std::string::npos);
    CHECK(line.find("selected") == std::string::npos);
    CHECK(line.find("speaker_id") == std::string::npos);
}

TEST_CASE("-inf ctc sentinel serializes as a string") {
    UtteranceRecord r;
    r.utterance_id = "u";
    r.group_id = "g";
    r.end_s = 1.0;
    r.ctc_score = -std::numeric_limits<double>::infinity();
    const std::string line = record_to_line(r);
    CHECK(line.find("\"ctc_score\":\"-inf\"") != std::string::npos);
    const auto back = record_from_line(line);
    REQUIRE(back.ctc_score.has_value());
    CHECK(std::isinf(*back.ctc_score));
}

TEST_CASE("1x1 matrix round-trips") {
    TempDir tmp("matrix");
    MatrixF m(1, 1);
    m(0, 0) = 0.0f;
    const auto p = tmp.path() / "a.mtx";
    write_matrix(m, p);
    const MatrixF back = read_matrix(p);
    REQUIRE(back.rows() == 1);
    REQUIRE(back.cols() == 1);
    CHECK(back(0, 0) == 0.0f);
}

TEST_CASE("matrix header/payload mismatch is rejected") {
    TempDir tmp("matrix");
    MatrixF m(2, 3);
    m.setZero();
    const auto p = tmp.path() / "bad.mtx";
    write_matrix(m, p);
    // truncate the payload by one value
    fs::resize_file(p, fs::file_size(p) - 4);
    CHECK_THROWS_AS(read_matrix(p), ValidationError);
}

TEST_CASE("bad magic is rejected") {
    TempDir tmp("matrix");
    const auto p = tmp.path() / "nomagic.mtx";
    std::ofstream(p, std::ios::binary) << "NOPE123456789";
    CHECK_THROWS_AS(read_matrix(p), ValidationError);
}

TEST_CASE("non-finite values are rejected on write") {
    MatrixF m(1, 2);
    m(0, 0) = 1.0f;
    m(0, 1) = std::numeric_limits<float>::quiet_NaN();
    TempDir tmp("matrix");
    CHECK_THROWS_AS(write_matrix(m, tmp.path() / "nan.mtx"), ValidationError);
}

TEST_CASE("random matrices round-trip bit-exactly") {
    TempDir tmp("matrix");
    Prng rng(7);
    for (int round = 0; round < 20; ++round) {
        const int rows = 1 + int(rng.below(8));
        const int cols = 1 + int(rng.below(8));
        MatrixF m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                m(i, j) = float(rng.gaussian() * 100.0);
        const auto p1 = tmp.path() / "r1.mtx";
        const auto p2 = tmp.path() / "r2.mtx";
        write_matrix(m, p1);
        write_matrix(read_matrix(p1), p2);
        CHECK(slurp(p1) == slurp(p2));
    }
}

TEST_CASE("stage metadata is append-only") {
    CorpusManifest m;
    m.append_stage("one");
    m.append_stage("two");
    CHECK(m.metadata["stages"] == "one>two");
}
