#pragma once

#include <filesystem>
#include <string>

#include "darkselect/record.hpp"
#include "darkselect/selection.hpp"

namespace darkselect {

// Tag marking the current training set on manifests handed to scorers.
inline constexpr const char* kTrainingTag = "training";

// Stage artifact names for a single-iteration run. Additional iterations
// suffix the middle stages with "_iterN".
namespace artifacts {
inline constexpr const char* kConfig = "00_config.json";
inline constexpr const char* kInitial = "01_initial.jsonl";
inline constexpr const char* kSpeakerScores = "02_speaker_scores.tsv";
inline constexpr const char* kRegressor = "03_regressor.json";
inline constexpr const char* kScored = "04_scored.jsonl";
inline constexpr const char* kSelected = "05_selected.jsonl";
inline constexpr const char* kFinal = "06_final.jsonl";
inline constexpr const char* kFinalScores = "06_final_scores.tsv";
}  // namespace artifacts

struct LoopConfig {
    SelectionConfig selection;
    std::filesystem::path input_manifest;
    std::filesystem::path run_dir;
    std::size_t iterations = 1;  // select/retrain cycles
    std::size_t workers = 0;     // 0 = auto, capped by DARKSELECT_WORKERS
    bool force = false;          // redo completed stages (old outputs kept as revisions)
};

struct LoopResult {
    CorpusManifest selected;              // the filtered training set
    std::filesystem::path final_manifest;  // full manifest with selection tags
    std::filesystem::path final_scores;    // retraining evaluation per speaker
};

// Hash of the decision-relevant configuration; paths are excluded so two
// runs of the same experiment in different directories compare equal.
std::string config_hash(const LoopConfig& config);

// Runs the evaluation-in-the-loop pipeline:
//   init     tag the whole pre-screened manifest as the training set
//   score    pseudo MOS per speaker from the scorer subprocess
//   regress  ridge fit of speaker scores from pooled utterance features
//   predict  utterance-level scores from the regressor
//   select   apply the configured selection method
//   final    re-tag, emit the final manifest, score the retrained selection
// Every stage output is persisted; completed stages are skipped on rerun.
LoopResult loop_orchestrate(const LoopConfig& config);

}  // namespace darkselect
