#include "darkselect/text_screen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "darkselect/error.hpp"
#include "darkselect/subprocess.hpp"

namespace darkselect {

namespace {

// UTF-8 -> codepoints; each byte of an invalid sequence decodes to itself so
// the function is total.
std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = s[i];
        int len = 1;
        char32_t cp = c;
        if (c >= 0xf0) { len = 4; cp = c & 0x07; }
        else if (c >= 0xe0) { len = 3; cp = c & 0x0f; }
        else if (c >= 0xc0) { len = 2; cp = c & 0x1f; }
        if (len > 1) {
            if (i + len > s.size()) { out.push_back(c); ++i; continue; }
            bool ok = true;
            for (int k = 1; k < len; ++k) {
                const unsigned char cc = s[i + k];
                if ((cc & 0xc0) != 0x80) { ok = false; break; }
                cp = (cp << 6) | (cc & 0x3f);
            }
            if (!ok) { out.push_back(c); ++i; continue; }
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

}  // namespace

void validate_doc(const SubtitleDoc& doc) {
    double prev = -1.0;
    for (std::size_t i = 0; i < doc.lines.size(); ++i) {
        const auto& l = doc.lines[i];
        if (l.start_s < 0.0 || l.end_s < 0.0)
            throw ValidationError("subtitle line " + std::to_string(i) +
                                  " has negative timing");
        if (l.start_s < prev)
            throw ValidationError("subtitle lines not ordered by start time at line " +
                                  std::to_string(i));
        prev = l.start_s;
    }
}

double relative_levenshtein(const std::string& a, const std::string& b) {
    const auto ua = decode_utf8(a);
    const auto ub = decode_utf8(b);
    const std::size_t n = ua.size(), m = ub.size();
    if (n == 0 && m == 0) return 0.0;
    if (n == 0 || m == 0) return 1.0;

    std::vector<std::size_t> row(m + 1);
    for (std::size_t j = 0; j <= m; ++j) row[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                               diag + (ua[i - 1] == ub[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return double(row[m]) / double(std::max(n, m));
}

AutoSubtitleCheck detect_auto_subtitles(const SubtitleDoc& doc, double threshold) {
    validate_doc(doc);
    AutoSubtitleCheck result;
    if (doc.lines.size() < 2) {
        result.verdict = AutoSubVerdict::kInsufficientData;
        return result;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < doc.lines.size(); ++i)
        sum += relative_levenshtein(doc.lines[i].text, doc.lines[i + 1].text);
    result.mean_distance = sum / double(doc.lines.size() - 1);
    result.verdict = result.mean_distance < threshold
                         ? AutoSubVerdict::kAutoGenerated
                         : AutoSubVerdict::kManual;
    return result;
}

namespace {

const std::string kPunct = ",.!?;:'\"()[]{}";

std::string strip_punct(const std::string& text) {
    std::string spaced = text;
    for (char& c : spaced)
        if (kPunct.find(c) != std::string::npos) c = ' ';
    std::string out;
    bool in_space = true;  // also trims leading whitespace
    for (char c : spaced) {
        if (c == ' ' || c == '\t') {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

std::string normalize_text(const std::string& text, const std::string& normalizer) {
    if (normalizer == "identity") return text;
    if (normalizer == "strip-punct") return strip_punct(text);
    if (normalizer.rfind("external:", 0) == 0) {
        const std::string cmd = normalizer.substr(9);
        if (cmd.empty()) throw ValidationError("empty external normalizer command");
        TempDir tmp("normalize");
        const auto in_path = tmp.path() / "in.txt";
        const auto out_path = tmp.path() / "out.txt";
        {
            std::ofstream out(in_path, std::ios::binary);
            out << text << '\n';
        }
        run_command(cmd + " --in " + shell_quote(in_path.string()) + " --out " +
                    shell_quote(out_path.string()));
        std::ifstream in(out_path);
        if (!in) throw IoError("normalizer produced no output file");
        std::string line;
        std::getline(in, line);
        return line;
    }
    throw ValidationError("unknown normalizer '" + normalizer + "'");
}

namespace {

bool parse_timing(const std::string& line, double& start, double& end) {
    int h1, m1, s1, ms1, h2, m2, s2, ms2;
    if (std::sscanf(line.c_str(), "%d:%d:%d.%d --> %d:%d:%d.%d", &h1, &m1, &s1,
                    &ms1, &h2, &m2, &s2, &ms2) != 8)
        return false;
    start = h1 * 3600.0 + m1 * 60.0 + s1 + ms1 / 1000.0;
    end = h2 * 3600.0 + m2 * 60.0 + s2 + ms2 / 1000.0;
    return true;
}

}  // namespace

SubtitleDoc parse_webvtt(const std::filesystem::path& path,
                         const std::string& group_id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open subtitle file: " + path.string());

    SubtitleDoc doc;
    doc.group_id = group_id;
    std::string line;
    double start = 0.0, end = 0.0;
    bool in_cue = false;
    std::string text;
    auto flush = [&] {
        if (in_cue) doc.lines.push_back({start, end, text});
        in_cue = false;
        text.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        double s, e;
        if (parse_timing(line, s, e)) {
            flush();
            in_cue = true;
            start = s;
            end = e;
            continue;
        }
        if (in_cue) {
            if (!text.empty()) text += ' ';
            text += line;
        }
        // anything before the first timing line (WEBVTT header, cue ids) is skipped
    }
    flush();
    validate_doc(doc);
    return doc;
}

}  // namespace darkselect
