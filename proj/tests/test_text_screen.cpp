#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "darkselect/error.hpp"
#include "darkselect/prng.hpp"
#include "darkselect/subprocess.hpp"
#include "darkselect/text_screen.hpp"

using namespace darkselect;

namespace {

// Reference edit distance, quadratic table, no row compression.
std::size_t lev_oracle(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= m; ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[n][m];
}

SubtitleDoc doc_of(const std::vector<std::string>& texts) {
    SubtitleDoc doc;
    doc.group_id = "g";
    double t = 0.0;
    for (const auto& s : texts) {
        doc.lines.push_back({t, t + 1.0, s});
        t += 1.5;
    }
    return doc;
}

std::string random_word(Prng& rng) {
    std::string w;
    const std::size_t len = 2 + rng.below(6);
    for (std::size_t i = 0; i < len; ++i) w += char('a' + rng.below(26));
    return w;
}

}  // namespace

TEST_CASE("relative levenshtein basics") {
    CHECK(relative_levenshtein("abc", "abc") == 0.0);
    CHECK(relative_levenshtein("abc", "") == 1.0);
    CHECK(relative_levenshtein("", "") == 0.0);
    CHECK(relative_levenshtein("kitten", "sitting") ==
          doctest::Approx(3.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("relative levenshtein counts codepoints, not bytes") {
    // multi-byte codepoints: one substitution out of three characters
    const std::string a = "\xe3\x81\x82\xe3\x81\x84\xe3\x81\x86";  // three kana
    const std::string b = "\xe3\x81\x82\xe3\x81\x84\xe3\x81\x88";
    CHECK(relative_levenshtein(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("relative levenshtein is symmetric, zero iff equal, triangle holds") {
    Prng rng(31);
    for (int round = 0; round < 200; ++round) {
        std::string a, b, c;
        for (std::size_t i = 0, n = rng.below(12); i < n; ++i)
            a += char('a' + rng.below(4));
        for (std::size_t i = 0, n = rng.below(12); i < n; ++i)
            b += char('a' + rng.below(4));
        for (std::size_t i = 0, n = rng.below(12); i < n; ++i)
            c += char('a' + rng.below(4));

        CHECK(relative_levenshtein(a, b) == relative_levenshtein(b, a));
        CHECK((relative_levenshtein(a, b) == 0.0) == (a == b));

        // de-normalized distances obey the triangle inequality
        auto d = [](const std::string& x, const std::string& y) {
            return relative_levenshtein(x, y) * double(std::max(x.size(), y.size()));
        };
        CHECK(d(a, c) <= d(a, b) + d(b, c) + 1e-9);

        // spot-check against the quadratic oracle
        const double denom = std::max(a.size(), b.size());
        if (denom > 0)
            CHECK(relative_levenshtein(a, b) ==
                  doctest::Approx(lev_oracle(a, b) / denom).epsilon(1e-12));
    }
}

TEST_CASE("identical lines flag as auto-generated at any positive threshold") {
    const auto check = detect_auto_subtitles(doc_of({"same", "same", "same"}), 0.01);
    CHECK(check.verdict == AutoSubVerdict::kAutoGenerated);
    CHECK(check.mean_distance == 0.0);
}

TEST_CASE("disjoint lines never flag at threshold <= 1") {
    const auto check = detect_auto_subtitles(doc_of({"aaaa", "bbbb", "cccc"}), 1.0);
    CHECK(check.verdict == AutoSubVerdict::kManual);
    CHECK(check.mean_distance == 1.0);
}

TEST_CASE("fewer than two lines is insufficient data") {
    CHECK(detect_auto_subtitles(doc_of({"only"}), 0.5).verdict ==
          AutoSubVerdict::kInsufficientData);
    CHECK(detect_auto_subtitles(doc_of({}), 0.5).verdict ==
          AutoSubVerdict::kInsufficientData);
}

TEST_CASE("rolling captions flag, independent sentences do not") {
    Prng rng(17);
    // rolling: each line drops its first word and appends a new one
    std::vector<std::string> window;
    for (int i = 0; i < 6; ++i) window.push_back(random_word(rng));
    std::vector<std::string> rolling;
    for (int i = 0; i < 12; ++i) {
        std::string line = window[0];
        for (std::size_t w = 1; w < window.size(); ++w) line += " " + window[w];
        rolling.push_back(line);
        window.erase(window.begin());
        window.push_back(random_word(rng));
    }
    std::vector<std::string> independent;
    for (int i = 0; i < 12; ++i) {
        std::string line = random_word(rng);
        for (int w = 1; w < 5; ++w) line += " " + random_word(rng);
        independent.push_back(line);
    }

    const auto roll = detect_auto_subtitles(doc_of(rolling), 0.5);
    const auto indep = detect_auto_subtitles(doc_of(independent), 0.5);
    CHECK(roll.verdict == AutoSubVerdict::kAutoGenerated);
    CHECK(indep.verdict == AutoSubVerdict::kManual);
    CHECK(roll.mean_distance < indep.mean_distance);
}

TEST_CASE("detection is invariant to uniform time shifts") {
    auto doc = doc_of({"one two", "two three", "three four"});
    const auto before = detect_auto_subtitles(doc, 0.5);
    for (auto& line : doc.lines) {
        line.start_s += 120.0;
        line.end_s += 120.0;
    }
    const auto after = detect_auto_subtitles(doc, 0.5);
    CHECK(before.verdict == after.verdict);
    CHECK(before.mean_distance == after.mean_distance);
}

TEST_CASE("normalizers") {
    CHECK(normalize_text("abc 12", "identity") == "abc 12");
    CHECK(normalize_text("a,b!  c", "strip-punct") == "a b c");
    CHECK(normalize_text("  (hello)  world! ", "strip-punct") == "hello world");
    CHECK_THROWS_AS(normalize_text("x", "nope"), ValidationError);
}

TEST_CASE("external normalizer runs through the subprocess contract") {
    TempDir tmp("norm");
    const auto script = tmp.path() / "upper.sh";
    {
        std::ofstream out(script);
        out << "#!/bin/sh\n"
            << "in=\"\"; outp=\"\"\n"
            << "while [ $# -gt 0 ]; do\n"
            << "  case \"$1\" in\n"
            << "    --in) in=\"$2\"; shift 2;;\n"
            << "    --out) outp=\"$2\"; shift 2;;\n"
            << "    *) shift;;\n"
            << "  esac\n"
            << "done\n"
            << "tr 'a-z' 'A-Z' < \"$in\" > \"$outp\"\n";
    }
    run_command("chmod +x " + shell_quote(script.string()));
    CHECK(normalize_text("hello", "external:" + script.string()) == "HELLO");
}

TEST_CASE("webvtt parser reads timing lines and joins cue text") {
    TempDir tmp("vtt");
    const auto p = tmp.path() / "g.vtt";
    {
        std::ofstream out(p);
        out << "WEBVTT\n\n";
        out << "1\n00:00:01.500 --> 00:00:03.250\nfirst line\ncontinued\n\n";
        out << "00:01:00.000 --> 00:01:02.000\nsecond cue\n\n";
    }
    const auto doc = parse_webvtt(p, "g");
    REQUIRE(doc.lines.size() == 2);
    CHECK(doc.lines[0].start_s == doctest::Approx(1.5));
    CHECK(doc.lines[0].end_s == doctest::Approx(3.25));
    CHECK(doc.lines[0].text == "first line continued");
    CHECK(doc.lines[1].start_s == doctest::Approx(60.0));
    CHECK(doc.lines[1].text == "second cue");
}

TEST_CASE("subtitle docs must be ordered and non-negative") {
    SubtitleDoc doc;
    doc.lines.push_back({5.0, 6.0, "a"});
    doc.lines.push_back({1.0, 2.0, "b"});
    CHECK_THROWS_AS(validate_doc(doc), ValidationError);
    doc.lines = {{-1.0, 0.5, "a"}};
    CHECK_THROWS_AS(validate_doc(doc), ValidationError);
}
