#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "darkselect/selection.hpp"

namespace darkselect {

// Everything a pipeline run can be configured with. Loaded from a flat JSON
// config file; any field can be overridden by a CLI flag.
struct RunConfig {
    // selection
    std::string method = "unselected";
    double theta = -0.3;
    double compact_lo = 1.0;
    double compact_hi = 7.0;
    double acoustic_threshold = 3.5;
    std::optional<std::size_t> target_size;
    std::string scorer_command;
    std::string feature_source = "matrix";
    std::uint64_t seed = 0;
    double ridge_lambda = 1.0;
    std::string sentence_set_id = "common";
    std::size_t iterations = 1;
    std::size_t workers = 0;

    // text screening
    std::string normalizer = "identity";
    double auto_sub_threshold = 0.5;

    // speaker screening
    double min_speech_fraction = 0.5;
    std::size_t min_group_utts = 5;
    std::string reducer = "pca";
    int reducer_dim = 2;

    // alignment
    int ctc_window = 30;  // L
    std::int64_t max_block_frames = 3000;
    std::int64_t overlap_frames = 60;  // 600 ms at 10 ms frames
    bool allow_short_overlap = false;

    // paths
    std::string posterior_dir;
    std::string embedding_dir;
    std::string subtitle_dir;
    std::string vocab_path;

    SelectionConfig selection() const;
};

RunConfig load_config(const std::filesystem::path& path);

// Validates cross-field constraints (overlap duration, window sanity).
void validate_run_config(const RunConfig& config, double frame_duration_s = 0.01);

}  // namespace darkselect
