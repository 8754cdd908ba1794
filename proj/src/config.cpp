#include "darkselect/config.hpp"

#include <fstream>

#include <json.hpp>

#include "darkselect/error.hpp"

namespace darkselect {

SelectionConfig RunConfig::selection() const {
    SelectionConfig s;
    s.method = parse_method(method);
    s.theta = theta;
    s.compact_lo = compact_lo;
    s.compact_hi = compact_hi;
    s.acoustic_threshold = acoustic_threshold;
    s.target_size = target_size;
    s.scorer_command = scorer_command;
    s.feature_source = feature_source;
    s.seed = seed;
    s.ridge_lambda = ridge_lambda;
    s.sentence_set_id = sentence_set_id;
    return s;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");

    RunConfig c;
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "method") c.method = v.get<std::string>();
            else if (key == "theta") c.theta = v.get<double>();
            else if (key == "compact_lo") c.compact_lo = v.get<double>();
            else if (key == "compact_hi") c.compact_hi = v.get<double>();
            else if (key == "acoustic_threshold") c.acoustic_threshold = v.get<double>();
            else if (key == "target_size") c.target_size = v.get<std::size_t>();
            else if (key == "scorer_command") c.scorer_command = v.get<std::string>();
            else if (key == "feature_source") c.feature_source = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "ridge_lambda") c.ridge_lambda = v.get<double>();
            else if (key == "sentence_set_id") c.sentence_set_id = v.get<std::string>();
            else if (key == "iterations") c.iterations = v.get<std::size_t>();
            else if (key == "workers") c.workers = v.get<std::size_t>();
            else if (key == "normalizer") c.normalizer = v.get<std::string>();
            else if (key == "auto_sub_threshold") c.auto_sub_threshold = v.get<double>();
            else if (key == "min_speech_fraction") c.min_speech_fraction = v.get<double>();
            else if (key == "min_group_utts") c.min_group_utts = v.get<std::size_t>();
            else if (key == "reducer") c.reducer = v.get<std::string>();
            else if (key == "reducer_dim") c.reducer_dim = v.get<int>();
            else if (key == "ctc_window") c.ctc_window = v.get<int>();
            else if (key == "max_block_frames") c.max_block_frames = v.get<std::int64_t>();
            else if (key == "overlap_frames") c.overlap_frames = v.get<std::int64_t>();
            else if (key == "allow_short_overlap") c.allow_short_overlap = v.get<bool>();
            else if (key == "posterior_dir") c.posterior_dir = v.get<std::string>();
            else if (key == "embedding_dir") c.embedding_dir = v.get<std::string>();
            else if (key == "subtitle_dir") c.subtitle_dir = v.get<std::string>();
            else if (key == "vocab_path") c.vocab_path = v.get<std::string>();
            else throw ValidationError("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("config key '" + key + "': " + e.what());
        }
    }
    return c;
}

void validate_run_config(const RunConfig& config, double frame_duration_s) {
    validate_selection_config(config.selection());
    if (config.ctc_window < 1) throw ValidationError("ctc_window must be >= 1");
    if (config.reducer_dim < 1) throw ValidationError("reducer_dim must be >= 1");
    if (config.min_speech_fraction < 0.0 || config.min_speech_fraction > 1.0)
        throw ValidationError("min_speech_fraction must be in [0,1]");
    if (config.auto_sub_threshold < 0.0 || config.auto_sub_threshold > 1.0)
        throw ValidationError("auto_sub_threshold must be in [0,1]");
    if (config.max_block_frames <= 2 * config.overlap_frames)
        throw ValidationError("max_block_frames must exceed twice the overlap");
    if (!config.allow_short_overlap &&
        config.overlap_frames * frame_duration_s < 0.6 - 1e-9)
        throw ValidationError(
            "overlap below 600 ms distorts block-boundary scores; pass "
            "allow_short_overlap to override");
}

}  // namespace darkselect
