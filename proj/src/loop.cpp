#include "darkselect/loop.hpp"

#include <cstdio>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/prng.hpp"
#include "darkselect/run_dir.hpp"

namespace darkselect {

namespace {

std::string iter_suffix(std::size_t iter) {
    return iter == 1 ? std::string() : "_iter" + std::to_string(iter);
}

std::string with_suffix(const char* name, const std::string& suffix) {
    const std::string s(name);
    const auto dot = s.rfind('.');
    return s.substr(0, dot) + suffix + s.substr(dot);
}

nlohmann::ordered_json config_json(const LoopConfig& config) {
    nlohmann::ordered_json j;
    j["method"] = method_name(config.selection.method);
    j["theta"] = format_g9(config.selection.theta);
    j["compact_lo"] = format_g9(config.selection.compact_lo);
    j["compact_hi"] = format_g9(config.selection.compact_hi);
    j["acoustic_threshold"] = format_g9(config.selection.acoustic_threshold);
    j["target_size"] = config.selection.target_size
                           ? std::to_string(*config.selection.target_size)
                           : std::string("none");
    j["scorer_command"] = config.selection.scorer_command;
    j["feature_source"] = config.selection.feature_source;
    j["seed"] = std::to_string(config.selection.seed);
    j["ridge_lambda"] = format_g9(config.selection.ridge_lambda);
    j["sentence_set_id"] = config.selection.sentence_set_id;
    j["iterations"] = std::to_string(config.iterations);
    return j;
}

CorpusManifest retag(const CorpusManifest& manifest, const CorpusManifest& chosen,
                     const std::string& method_tag) {
    std::set<std::string> ids;
    for (const auto& r : chosen.records) ids.insert(r.utterance_id);
    CorpusManifest out = manifest;
    for (auto& r : out.records) {
        if (ids.count(r.utterance_id)) {
            r.selected.insert(kTrainingTag);
            r.selected.insert(method_tag);
        } else {
            r.selected.erase(kTrainingTag);
        }
    }
    return out;
}

}  // namespace

std::string config_hash(const LoopConfig& config) {
    const std::string canon = config_json(config).dump();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon)));
    return buf;
}

LoopResult loop_orchestrate(const LoopConfig& config) {
    validate_selection_config(config.selection);
    if (config.iterations < 1) throw ValidationError("iterations must be >= 1");
    if (config.selection.scorer_command.empty())
        throw ValidationError("loop requires a scorer command");

    RunDir rd(config.run_dir);
    const std::string hash = config_hash(config);

    // Config echo; a run directory is bound to one configuration.
    const auto config_path = rd.artifact(artifacts::kConfig);
    if (std::filesystem::exists(config_path)) {
        std::ifstream in(config_path);
        nlohmann::json existing;
        in >> existing;
        if (existing.value("config_hash", "") != hash)
            throw ValidationError(
                "run directory was created with a different configuration; use a "
                "fresh directory");
    } else {
        auto j = config_json(config);
        j["config_hash"] = hash;
        std::ofstream out(config_path, std::ios::binary | std::ios::trunc);
        out << j.dump(2) << '\n';
    }

    auto run_stage = [&](const std::string& stage,
                         const std::vector<std::string>& outputs,
                         const std::function<void()>& body) {
        if (config.force) rd.force_redo(stage);
        if (rd.stage_complete(stage)) return;  // resumable no-op
        body();
        rd.mark_done(stage, outputs);
    };

    // init: everything that survived pre-screening trains the initial model.
    run_stage("init", {artifacts::kInitial}, [&] {
        CorpusManifest m = read_manifest(config.input_manifest);
        if (m.records.empty()) throw ValidationError("input manifest is empty");
        for (auto& r : m.records) {
            if (r.speaker_id.empty())
                throw ValidationError("record '" + r.utterance_id +
                                      "' has no speaker_id (run speaker screening first)");
            r.selected.insert(kTrainingTag);
        }
        m.append_stage("loop_init");
        m.metadata["config_hash"] = hash;
        m.metadata["seed"] = std::to_string(config.selection.seed);
        write_manifest(m, rd.artifact(artifacts::kInitial));
    });

    std::string current = artifacts::kInitial;
    std::string scored_name;
    std::string selected_name;
    std::string scores_name;
    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        const std::string sfx = iter_suffix(iter);
        scores_name = with_suffix(artifacts::kSpeakerScores, sfx);
        const std::string regressor_name = with_suffix(artifacts::kRegressor, sfx);
        scored_name = with_suffix(artifacts::kScored, sfx);
        selected_name = with_suffix(artifacts::kSelected, sfx);
        const std::string input_name = current;

        run_stage("score" + sfx, {scores_name}, [&] {
            const CorpusManifest m = read_manifest(rd.artifact(input_name));
            const SpeakerScoreTable table =
                run_scorer(config.selection.scorer_command, m,
                           config.selection.sentence_set_id);
            write_score_table(table, rd.artifact(scores_name));
        });

        run_stage("regress" + sfx, {regressor_name}, [&] {
            const CorpusManifest m = read_manifest(rd.artifact(input_name));
            const SpeakerScoreTable table = read_score_table(rd.artifact(scores_name));
            std::vector<Eigen::VectorXd> rows;
            std::vector<std::string> speakers;
            rows.reserve(m.records.size());
            for (const auto& r : m.records) {
                rows.push_back(
                    pooled_features_for_record(r, config.selection.feature_source));
                speakers.push_back(r.speaker_id);
            }
            const RegressorModel model = train_regressor(
                rows, speakers, table, config.selection.ridge_lambda);
            write_regressor(model, rd.artifact(regressor_name));
        });

        run_stage("predict" + sfx, {scored_name}, [&] {
            const CorpusManifest m = read_manifest(rd.artifact(input_name));
            const RegressorModel model = read_regressor(rd.artifact(regressor_name));
            CorpusManifest scored = predict_utterance_scores(
                model, m, config.selection.feature_source, config.workers);
            write_manifest(scored, rd.artifact(scored_name));
        });

        run_stage("select" + sfx, {selected_name}, [&] {
            const CorpusManifest m = read_manifest(rd.artifact(scored_name));
            const SpeakerScoreTable table = read_score_table(rd.artifact(scores_name));
            const CorpusManifest chosen = select(m, config.selection, &table);
            write_manifest(chosen, rd.artifact(selected_name));
        });

        if (iter < config.iterations) {
            // Next iteration scores a manifest whose training tag marks this
            // iteration's selection.
            const std::string next_name =
                with_suffix(artifacts::kInitial, iter_suffix(iter + 1));
            run_stage("retag" + iter_suffix(iter + 1), {next_name}, [&] {
                const CorpusManifest base = read_manifest(rd.artifact(scored_name));
                const CorpusManifest chosen = read_manifest(rd.artifact(selected_name));
                write_manifest(
                    retag(base, chosen, method_name(config.selection.method)),
                    rd.artifact(next_name));
            });
            current = next_name;
        }
    }

    // final: emit the tagged full manifest and evaluate the retrained
    // selection, which also scores speakers the selection left unseen.
    run_stage("final", {artifacts::kFinal, artifacts::kFinalScores}, [&] {
        const CorpusManifest base = read_manifest(rd.artifact(scored_name));
        const CorpusManifest chosen = read_manifest(rd.artifact(selected_name));
        CorpusManifest final_m =
            retag(base, chosen, method_name(config.selection.method));
        final_m.append_stage("loop_final");
        write_manifest(final_m, rd.artifact(artifacts::kFinal));
        const SpeakerScoreTable table =
            run_scorer(config.selection.scorer_command, final_m,
                       config.selection.sentence_set_id);
        write_score_table(table, rd.artifact(artifacts::kFinalScores));
    });

    LoopResult result;
    result.selected = read_manifest(rd.artifact(selected_name));
    result.final_manifest = rd.artifact(artifacts::kFinal);
    result.final_scores = rd.artifact(artifacts::kFinalScores);
    return result;
}

}  // namespace darkselect
