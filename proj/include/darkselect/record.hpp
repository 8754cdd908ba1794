#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace darkselect {

// One subtitle/audio segment as it moves through the pipeline. Stages append
// fields (scores, speaker identity, selection tags); they never rewrite
// earlier ones. Absent optionals mean "not computed yet", which is distinct
// from a computed zero.
struct UtteranceRecord {
    std::string utterance_id;  // unique within a manifest
    std::string group_id;      // source video
    std::string channel_id;    // uploader; basis for speaker grouping
    std::string speaker_id;    // empty until group_to_speakers runs
    std::string text;
    std::string audio_path;
    double start_s = 0.0;
    double end_s = 0.0;  // must be > start_s

    std::optional<double> ctc_score;          // log-probability, <= 0 (-inf = unemittable)
    std::optional<double> compactness;        // per-group covariance determinant, >= 0
    std::optional<double> speech_fraction;    // VAD result in [0,1]
    std::map<std::string, double> acoustic_scores;  // named scores in [1,5]
    std::optional<double> planted_quality;    // synthetic ground truth in [0,1]
    std::string feature_path;                 // MatrixFile of frame-level features
    std::optional<double> utt_score;          // regressor output
    std::set<std::string> selected;           // method tags

    double duration_s() const { return end_s - start_s; }
    bool has_tag(const std::string& tag) const { return selected.count(tag) > 0; }

    bool operator==(const UtteranceRecord&) const = default;
};

struct CorpusManifest {
    std::vector<UtteranceRecord> records;
    // Flat metadata: "stages" holds the append-only '>'-separated stage list,
    // plus "config_hash" and "seed" once a run attaches them.
    std::map<std::string, std::string> metadata;

    void append_stage(const std::string& stage);
    std::size_t size() const { return records.size(); }

    bool operator==(const CorpusManifest&) const = default;
};

// Throws ValidationError naming the offending record. `where` is prefixed to
// messages (e.g. "line 12").
void validate_record(const UtteranceRecord& r, const std::string& where = {});

// Record-level validation for every record plus manifest-level checks
// (duplicate utterance ids, speaker implies channel).
void validate_manifest(const CorpusManifest& m);

// Records of one group, in manifest order. Group order follows first
// appearance in the manifest.
std::vector<std::pair<std::string, std::vector<const UtteranceRecord*>>>
group_records(const CorpusManifest& m);

// Distinct speaker ids in order of first appearance; empty ids are skipped.
std::vector<std::string> speaker_ids(const CorpusManifest& m);

}  // namespace darkselect
