#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace darkselect {

// One subtitle document (all lines of one source video).
struct SubtitleDoc {
    struct Line {
        double start_s = 0.0;
        double end_s = 0.0;
        std::string text;
    };
    std::string group_id;
    std::vector<Line> lines;  // ordered by start_s
};

void validate_doc(const SubtitleDoc& doc);

// Levenshtein distance divided by max(len(a), len(b)), measured over Unicode
// codepoints; 0 for two empty strings.
double relative_levenshtein(const std::string& a, const std::string& b);

enum class AutoSubVerdict { kManual, kAutoGenerated, kInsufficientData };

struct AutoSubtitleCheck {
    AutoSubVerdict verdict = AutoSubVerdict::kInsufficientData;
    double mean_distance = 0.0;  // meaningless when data is insufficient
};

// Auto-generated captions repeat rolling text, so consecutive lines are
// abnormally similar: a mean consecutive-pair relative Levenshtein distance
// below the threshold flags the document. Documents with fewer than two
// lines are reported as insufficient data rather than guessed at.
AutoSubtitleCheck detect_auto_subtitles(const SubtitleDoc& doc,
                                        double threshold = 0.5);

// Text normalization hook. Built-in plugins:
//   "identity"         returns the input unchanged
//   "strip-punct"      punctuation -> space, whitespace collapsed, trimmed
//   "external:<cmd>"   subprocess: <cmd> --in <path> --out <path>, one line
//                      in, one line out, same order
// Unknown ids are an error.
std::string normalize_text(const std::string& text, const std::string& normalizer);

// WebVTT-like parser: "HH:MM:SS.mmm --> HH:MM:SS.mmm" timing lines, each
// followed by text lines until a blank line. Header/cue-id lines are skipped.
SubtitleDoc parse_webvtt(const std::filesystem::path& path,
                         const std::string& group_id);

}  // namespace darkselect
