#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "darkselect/record.hpp"

namespace darkselect {

// Per-speaker pseudo MOS on a common sentence set, as returned by a scorer.
struct SpeakerScoreTable {
    std::map<std::string, double> scores;  // speaker_id -> pseudo MOS in [1,5]
    std::string sentence_set_id;
    std::string scorer_id;
};

// TSV persistence: one "speaker<TAB>score" line per speaker, speaker order
// sorted. This is also the wire format scorers must emit.
SpeakerScoreTable read_score_table(const std::filesystem::path& path);
void write_score_table(const SpeakerScoreTable& table,
                       const std::filesystem::path& path);

// Closed-form ridge regressor over pooled utterance features. Features are
// standardized per dimension; the bias is the target mean and is not
// penalized. Zero-variance dimensions contribute nothing.
struct RegressorModel {
    std::string kind = "ridge-pooled";
    Eigen::VectorXd weights;  // per standardized feature dimension
    double bias = 0.0;
    double lambda = 1.0;
    Eigen::VectorXd feature_mean;
    Eigen::VectorXd feature_std;  // population std; 0 marks a constant dimension

    double predict(const Eigen::VectorXd& pooled) const;
};

void write_regressor(const RegressorModel& model, const std::filesystem::path& path);
RegressorModel read_regressor(const std::filesystem::path& path);

enum class SelectionMethod { kUnselected, kAcousticQuality, kOursUtt, kOursSpk };

SelectionMethod parse_method(const std::string& name);
std::string method_name(SelectionMethod m);

struct SelectionConfig {
    SelectionMethod method = SelectionMethod::kUnselected;
    double theta = -0.3;            // CTC cleaning threshold (inclusive)
    double compact_lo = 1.0;        // speaker compactness window
    double compact_hi = 7.0;
    double acoustic_threshold = 3.5;  // strict >: a score exactly at the
                                      // threshold is rejected
    std::optional<std::size_t> target_size;  // utterance budget
    std::string scorer_command;
    std::string feature_source = "matrix";  // "matrix" | "builtin"
    std::uint64_t seed = 0;
    double ridge_lambda = 1.0;
    std::string sentence_set_id = "common";
};

void validate_selection_config(const SelectionConfig& config);

// Invokes `<command> --manifest <path> --sentences <id> --out <path>` and
// parses the resulting table. Every speaker in the manifest must be scored,
// no extras, all values in [1,5].
SpeakerScoreTable run_scorer(const std::string& command,
                             const CorpusManifest& manifest,
                             const std::string& sentence_set_id);

// Desk-scale stand-in for the train-synthesize-predict loop. A speaker's
// pseudo MOS is 1 + 4 * mean(planted quality of its utterances tagged
// `selected_tag`) plus deterministic seeded noise, clipped to [1,5].
// Speakers with no tagged utterance fall back to their full utterance set,
// mirroring how an unseen speaker is still synthesizable through its
// embedding.
SpeakerScoreTable mock_speaker_scorer(const CorpusManifest& manifest,
                                      const std::string& selected_tag,
                                      std::uint64_t seed, double noise_sigma = 0.1,
                                      const std::string& sentence_set_id = "common");

// Frame-level matrix -> per-dimension mean and population std, concatenated.
// A single frame pools to [frame, 0...0].
Eigen::VectorXd pool_features(const Eigen::MatrixXd& frames);

// One training row per utterance; the target is the speaker's pseudo MOS
// (acoustically similar data is assumed to train to similar naturalness).
RegressorModel train_regressor(const std::vector<Eigen::VectorXd>& pooled_features,
                               const std::vector<std::string>& row_speakers,
                               const SpeakerScoreTable& targets, double lambda);

// Fills utt_score for every record. feature_source "matrix" reads the
// record's feature_path; "builtin" extracts frame statistics from audio_path.
CorpusManifest predict_utterance_scores(const RegressorModel& model,
                                        const CorpusManifest& manifest,
                                        const std::string& feature_source,
                                        std::size_t workers = 0);

// Built-in frame-statistics extractor (log energy, zero crossings, lag-1
// autocorrelation, mean absolute difference per 25 ms frame).
Eigen::MatrixXd builtin_features(const std::vector<float>& samples,
                                 int sample_rate = 16000);

// Pooled feature vector for one record under the given feature source.
Eigen::VectorXd pooled_features_for_record(const UtteranceRecord& record,
                                           const std::string& feature_source);

// The target_size-th largest score. Keeping scores >= threshold yields at
// least target_size items; exact-size selection breaks ties by utterance id.
double threshold_for_budget(const std::vector<double>& scores,
                            std::size_t target_size);

// Applies one selection method and returns the selected subset, each record
// tagged with the method name. ours-spk ranks speakers by pseudo MOS and
// adds whole speakers until the next would exceed the budget.
CorpusManifest select(const CorpusManifest& manifest, const SelectionConfig& config,
                      const SpeakerScoreTable* speaker_scores = nullptr);

}  // namespace darkselect
