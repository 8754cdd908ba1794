// darkselect: curates TTS training corpora from unvetted audio/subtitle
// collections. Subcommands cover the pipeline end to end: CTC alignment and
// scoring, text and speaker screening, evaluation-in-the-loop selection,
// corpus metrics, and a synthetic-corpus generator for desk-scale runs.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "darkselect/config.hpp"
#include "darkselect/ctc_align.hpp"
#include "darkselect/error.hpp"
#include "darkselect/loop.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/metrics.hpp"
#include "darkselect/record.hpp"
#include "darkselect/run_dir.hpp"
#include "darkselect/selection.hpp"
#include "darkselect/speaker_screen.hpp"
#include "darkselect/synth_corpus.hpp"
#include "darkselect/text_screen.hpp"

namespace ds = darkselect;
namespace fs = std::filesystem;

namespace {

// Pre-screening artifacts inside a run directory.
constexpr const char* kCtcManifest = "p1_ctc.jsonl";
constexpr const char* kTextManifest = "p2_text.jsonl";
constexpr const char* kPrescreened = "p3_prescreened.jsonl";

// Config file plus per-flag overrides: a flag passed on the command line
// always wins over the file value.
struct ConfigOpts {
    std::string config_path;
    ds::RunConfig flags;
    long long target_size_flag = -1;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file");
        auto opt = [&](const char* name, auto& field, const char* help) {
            opts[name] = sub->add_option(name, field, help);
        };
        opt("--method", flags.method,
            "unselected | acoustic-quality | ours-utt | ours-spk");
        opt("--theta", flags.theta, "CTC cleaning threshold (inclusive)");
        opt("--compact-lo", flags.compact_lo, "compactness window lower bound");
        opt("--compact-hi", flags.compact_hi, "compactness window upper bound");
        opt("--acoustic-threshold", flags.acoustic_threshold,
            "acoustic-quality threshold (strict >)");
        opt("--target-size", target_size_flag, "utterance budget");
        opt("--scorer-command", flags.scorer_command, "speaker scorer subprocess");
        opt("--feature-source", flags.feature_source, "matrix | builtin");
        opt("--seed", flags.seed, "run seed");
        opt("--ridge-lambda", flags.ridge_lambda, "ridge coefficient");
        opt("--sentence-set", flags.sentence_set_id, "common sentence set id");
        opt("--iterations", flags.iterations, "select/retrain cycles");
        opt("--workers", flags.workers, "worker threads (0 = auto)");
        opt("--normalizer", flags.normalizer,
            "identity | strip-punct | external:<cmd>");
        opt("--auto-sub-threshold", flags.auto_sub_threshold,
            "auto-subtitle mean-distance threshold");
        opt("--min-speech-fraction", flags.min_speech_fraction,
            "VAD gate per group");
        opt("--min-group-utts", flags.min_group_utts, "minimum utterances per group");
        opt("--reducer", flags.reducer, "pca | identity | external:<cmd>");
        opt("--reducer-dim", flags.reducer_dim, "reduced embedding dimension");
        opt("--ctc-window", flags.ctc_window, "confidence window L in frames");
        opt("--max-block-frames", flags.max_block_frames,
            "partition block size in frames");
        opt("--overlap-frames", flags.overlap_frames, "partition overlap in frames");
        sub->add_flag("--allow-short-overlap", flags.allow_short_overlap,
                      "permit overlap below 600 ms");
        opt("--posterior-dir", flags.posterior_dir, "per-group posterior MatrixFiles");
        opt("--embedding-dir", flags.embedding_dir, "per-group embedding MatrixFiles");
        opt("--subtitle-dir", flags.subtitle_dir, "per-group WebVTT files");
        opt("--vocab", flags.vocab_path, "token vocabulary file");
    }

    ds::RunConfig resolve() const {
        ds::RunConfig cfg;
        if (!config_path.empty()) cfg = ds::load_config(config_path);
        auto passed = [&](const char* name) {
            const auto it = opts.find(name);
            return it != opts.end() && it->second->count() > 0;
        };
        if (passed("--method")) cfg.method = flags.method;
        if (passed("--theta")) cfg.theta = flags.theta;
        if (passed("--compact-lo")) cfg.compact_lo = flags.compact_lo;
        if (passed("--compact-hi")) cfg.compact_hi = flags.compact_hi;
        if (passed("--acoustic-threshold"))
            cfg.acoustic_threshold = flags.acoustic_threshold;
        if (passed("--target-size")) {
            if (target_size_flag < 1)
                throw ds::ValidationError("target_size must be >= 1");
            cfg.target_size = std::size_t(target_size_flag);
        }
        if (passed("--scorer-command")) cfg.scorer_command = flags.scorer_command;
        if (passed("--feature-source")) cfg.feature_source = flags.feature_source;
        if (passed("--seed")) cfg.seed = flags.seed;
        if (passed("--ridge-lambda")) cfg.ridge_lambda = flags.ridge_lambda;
        if (passed("--sentence-set")) cfg.sentence_set_id = flags.sentence_set_id;
        if (passed("--iterations")) cfg.iterations = flags.iterations;
        if (passed("--workers")) cfg.workers = flags.workers;
        if (passed("--normalizer")) cfg.normalizer = flags.normalizer;
        if (passed("--auto-sub-threshold"))
            cfg.auto_sub_threshold = flags.auto_sub_threshold;
        if (passed("--min-speech-fraction"))
            cfg.min_speech_fraction = flags.min_speech_fraction;
        if (passed("--min-group-utts")) cfg.min_group_utts = flags.min_group_utts;
        if (passed("--reducer")) cfg.reducer = flags.reducer;
        if (passed("--reducer-dim")) cfg.reducer_dim = flags.reducer_dim;
        if (passed("--ctc-window")) cfg.ctc_window = flags.ctc_window;
        if (passed("--max-block-frames")) cfg.max_block_frames = flags.max_block_frames;
        if (passed("--overlap-frames")) cfg.overlap_frames = flags.overlap_frames;
        if (flags.allow_short_overlap) cfg.allow_short_overlap = true;
        if (passed("--posterior-dir")) cfg.posterior_dir = flags.posterior_dir;
        if (passed("--embedding-dir")) cfg.embedding_dir = flags.embedding_dir;
        if (passed("--subtitle-dir")) cfg.subtitle_dir = flags.subtitle_dir;
        if (passed("--vocab")) cfg.vocab_path = flags.vocab_path;
        return cfg;
    }
};

// Runs a pre-screening stage either directly (--manifest/--out) or inside a
// run directory with completion tracking and no-op resume.
struct StageIo {
    std::string manifest_path;
    std::string out_path;
    std::string run_dir;
    bool force = false;

    void attach(CLI::App* sub, bool manifest_required) {
        auto* m = sub->add_option("--manifest", manifest_path, "input manifest");
        if (manifest_required) m->required();
        sub->add_option("--out", out_path, "output manifest path");
        sub->add_option("--run-dir", run_dir, "run directory (staged mode)");
        sub->add_flag("--force", force, "redo a completed stage");
    }

    void run(const std::string& stage, const char* default_in,
             const char* default_out,
             const std::function<ds::CorpusManifest(const fs::path&)>& body) {
        if (run_dir.empty()) {
            if (manifest_path.empty())
                throw ds::ValidationError("--manifest is required without --run-dir");
            if (out_path.empty())
                throw ds::ValidationError("--out is required without --run-dir");
            ds::write_manifest(body(manifest_path), out_path);
            return;
        }
        ds::RunDir rd(run_dir);
        if (force) rd.force_redo(stage);
        if (rd.stage_complete(stage)) {
            std::cout << "stage " << stage << " already complete; skipping\n";
            return;
        }
        fs::path in = manifest_path;
        if (in.empty()) {
            if (default_in == nullptr)
                throw ds::ValidationError("stage '" + stage + "' needs --manifest");
            in = rd.artifact(default_in);
        }
        const fs::path out = out_path.empty() ? rd.artifact(default_out)
                                              : fs::path(out_path);
        ds::write_manifest(body(in), out);
        rd.mark_done(stage, {out.filename().string()});
    }
};

ds::PosteriorGrid load_group_posteriors(const ds::RunConfig& cfg,
                                        const std::string& group_id) {
    if (cfg.posterior_dir.empty())
        throw ds::ValidationError("posterior_dir is not configured");
    return ds::read_posteriors(fs::path(cfg.posterior_dir) / (group_id + ".mtx"));
}

ds::CorpusManifest align_manifest(const ds::CorpusManifest& input,
                                  const ds::RunConfig& cfg, bool retime) {
    if (cfg.vocab_path.empty())
        throw ds::ValidationError("vocab_path is not configured");
    const ds::Vocabulary vocab = ds::load_vocabulary(cfg.vocab_path);
    const ds::ScoreParams params{cfg.ctc_window, cfg.theta};

    ds::CorpusManifest out = input;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < out.records.size(); ++i)
        index[out.records[i].utterance_id] = i;

    for (const auto& [gid, records] : ds::group_records(input)) {
        const ds::PosteriorGrid grid = load_group_posteriors(cfg, gid);

        if (!retime) {
            for (const auto* r : records) {
                const auto tokens = ds::tokenize(vocab, r->text);
                out.records[index[r->utterance_id]].ctc_score =
                    ds::score_given_timings(grid, tokens, r->start_s, r->end_s, params);
            }
            continue;
        }

        // Full re-alignment: utterances in time order become one sequence
        // with per-utterance skip entries.
        std::vector<const ds::UtteranceRecord*> ordered(records.begin(), records.end());
        std::stable_sort(ordered.begin(), ordered.end(),
                         [](const auto* a, const auto* b) {
                             return a->start_s < b->start_s;
                         });
        ds::TokenSeq seq;
        for (const auto* r : ordered) {
            const auto tokens = ds::tokenize(vocab, r->text);
            seq.tokens.insert(seq.tokens.end(), tokens.begin(), tokens.end());
            seq.utterance_breaks.push_back(seq.tokens.size());
        }
        try {
            const ds::Trellis trellis = ds::build_trellis(grid, seq);
            const auto aligned = ds::backtrack(trellis, grid, params);
            for (std::size_t u = 0; u < ordered.size(); ++u) {
                auto& rec = out.records[index[ordered[u]->utterance_id]];
                rec.start_s = double(aligned[u].onset_frame) * grid.frame_duration_s;
                rec.end_s = double(aligned[u].offset_frame + 1) * grid.frame_duration_s;
                rec.ctc_score = aligned[u].confidence;
            }
        } catch (const ds::ValidationError&) {
            // whole group unemittable: reject every utterance in it
            for (const auto* r : ordered)
                out.records[index[r->utterance_id]].ctc_score =
                    -std::numeric_limits<double>::infinity();
        }
    }
    out.append_stage(retime ? "align" : "ctc_score");
    return out;
}

ds::CorpusManifest screen_text_manifest(const ds::CorpusManifest& input,
                                        const ds::RunConfig& cfg) {
    std::map<std::string, bool> drop;
    for (const auto& [gid, records] : ds::group_records(input)) {
        ds::SubtitleDoc doc;
        if (!cfg.subtitle_dir.empty()) {
            doc = ds::parse_webvtt(fs::path(cfg.subtitle_dir) / (gid + ".vtt"), gid);
        } else {
            doc.group_id = gid;
            std::vector<const ds::UtteranceRecord*> ordered(records.begin(),
                                                            records.end());
            std::stable_sort(ordered.begin(), ordered.end(),
                             [](const auto* a, const auto* b) {
                                 return a->start_s < b->start_s;
                             });
            for (const auto* r : ordered)
                doc.lines.push_back({r->start_s, r->end_s, r->text});
        }
        const auto check = ds::detect_auto_subtitles(doc, cfg.auto_sub_threshold);
        // Insufficient data keeps the group: one subtitle line is no evidence
        // of rolling captions.
        drop[gid] = check.verdict == ds::AutoSubVerdict::kAutoGenerated;
    }

    ds::CorpusManifest out;
    out.metadata = input.metadata;
    for (const auto& r : input.records) {
        if (drop[r.group_id]) continue;
        out.records.push_back(r);
        out.records.back().text = ds::normalize_text(r.text, cfg.normalizer);
    }
    out.append_stage("text_screen");
    return out;
}

ds::CorpusManifest screen_speaker_manifest(const ds::CorpusManifest& input,
                                           const ds::RunConfig& cfg) {
    if (cfg.embedding_dir.empty())
        throw ds::ValidationError("embedding_dir is not configured");

    ds::CorpusManifest gated = ds::drop_nonspeech_and_short(
        input, cfg.min_speech_fraction, cfg.min_group_utts);

    for (const auto& [gid, records] : ds::group_records(gated)) {
        const ds::EmbeddingSet all =
            ds::read_embeddings(fs::path(cfg.embedding_dir) / (gid + ".mtx"));
        ds::EmbeddingSet subset;
        subset.dim = all.dim;
        for (const auto* r : records) {
            const auto it = all.vectors.find(r->utterance_id);
            if (it == all.vectors.end())
                throw ds::ValidationError("no embedding for utterance '" +
                                          r->utterance_id + "'");
            subset.vectors.emplace(r->utterance_id, it->second);
        }
        const ds::EmbeddingSet reduced =
            ds::reduce_embeddings(subset, cfg.reducer, cfg.reducer_dim);
        const auto result = ds::compactness_score(reduced, gid, cfg.reducer);
        for (auto& rec : gated.records)
            if (rec.group_id == gid) rec.compactness = result.score;
    }

    ds::CorpusManifest filtered =
        ds::filter_groups_by_compactness(gated, cfg.compact_lo, cfg.compact_hi);
    return ds::group_to_speakers(filtered);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TTS corpus curation from dark audio/subtitle collections"};
    app.require_subcommand(1);

    // --- synthcorpus ---------------------------------------------------
    auto* synth = app.add_subcommand(
        "synthcorpus", "generate a seeded synthetic corpus with ground truth");
    ds::SyntheticSpec spec;
    std::string synth_out;
    bool no_posteriors = false, no_subtitles = false;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--speakers", spec.n_speakers, "number of speakers");
    synth->add_option("--utts-min", spec.utts_min, "min utterances per speaker");
    synth->add_option("--utts-max", spec.utts_max, "max utterances per speaker");
    synth->add_option("--mixed-fraction", spec.mixed_fraction,
                      "fraction of mixed-quality speakers");
    synth->add_option("--embedding-dim", spec.embedding_dim, "embedding dimension");
    synth->add_option("--seed", spec.seed, "generator seed");
    synth->add_flag("--no-posteriors", no_posteriors, "skip posterior generation");
    synth->add_flag("--no-subtitles", no_subtitles, "skip subtitle generation");
    synth->callback([&] {
        spec.with_posteriors = !no_posteriors;
        spec.with_subtitles = !no_subtitles;
        const auto manifest = ds::generate_synthetic_corpus(spec, synth_out);
        std::cout << "wrote " << manifest.records.size() << " records for "
                  << ds::speaker_ids(ds::group_to_speakers(manifest)).size()
                  << " speakers to " << synth_out << "\n";
    });

    // --- align / score --------------------------------------------------
    ConfigOpts align_cfg, score_cfg;
    StageIo align_io, score_io;
    bool align_nofilter = false, score_nofilter = false;

    auto* align = app.add_subcommand(
        "align", "re-align subtitles to audio via CTC segmentation and score them");
    align_cfg.attach(align);
    align_io.attach(align, true);
    align->add_flag("--no-filter", align_nofilter, "keep records below theta");
    align->callback([&] {
        const auto cfg = align_cfg.resolve();
        ds::validate_run_config(cfg);
        align_io.run("align", nullptr, kCtcManifest, [&](const fs::path& in) {
            auto m = align_manifest(ds::read_manifest(in), cfg, true);
            return align_nofilter ? m : ds::filter_by_ctc(m, cfg.theta);
        });
    });

    auto* score = app.add_subcommand(
        "score", "CTC-score records at their existing timings");
    score_cfg.attach(score);
    score_io.attach(score, true);
    score->add_flag("--no-filter", score_nofilter, "keep records below theta");
    score->callback([&] {
        const auto cfg = score_cfg.resolve();
        ds::validate_run_config(cfg);
        score_io.run("ctc_score", nullptr, kCtcManifest, [&](const fs::path& in) {
            auto m = align_manifest(ds::read_manifest(in), cfg, false);
            return score_nofilter ? m : ds::filter_by_ctc(m, cfg.theta);
        });
    });

    // --- screen-text ------------------------------------------------------
    ConfigOpts text_cfg;
    StageIo text_io;
    auto* screen_text = app.add_subcommand(
        "screen-text", "drop auto-subtitle groups and normalize text");
    text_cfg.attach(screen_text);
    text_io.attach(screen_text, false);
    screen_text->callback([&] {
        const auto cfg = text_cfg.resolve();
        text_io.run("screen_text", kCtcManifest, kTextManifest,
                    [&](const fs::path& in) {
                        return screen_text_manifest(ds::read_manifest(in), cfg);
                    });
    });

    // --- screen-speaker --------------------------------------------------
    ConfigOpts spk_cfg;
    StageIo spk_io;
    auto* screen_spk = app.add_subcommand(
        "screen-speaker",
        "VAD gate, compactness window filter, channel-id speaker grouping");
    spk_cfg.attach(screen_spk);
    spk_io.attach(screen_spk, false);
    screen_spk->callback([&] {
        const auto cfg = spk_cfg.resolve();
        spk_io.run("screen_speaker", kTextManifest, kPrescreened,
                   [&](const fs::path& in) {
                       return screen_speaker_manifest(ds::read_manifest(in), cfg);
                   });
    });

    // --- select ------------------------------------------------------------
    ConfigOpts sel_cfg;
    std::string sel_manifest, sel_out, sel_scores;
    auto* sel = app.add_subcommand("select", "apply one selection method");
    sel_cfg.attach(sel);
    sel->add_option("--manifest", sel_manifest, "input manifest")->required();
    sel->add_option("--out", sel_out, "output manifest")->required();
    sel->add_option("--speaker-scores", sel_scores,
                    "speaker pseudo MOS table (needed for ours-spk)");
    sel->callback([&] {
        const auto cfg = sel_cfg.resolve();
        const auto m = ds::read_manifest(sel_manifest);
        ds::SpeakerScoreTable table;
        const bool have_table = !sel_scores.empty();
        if (have_table) table = ds::read_score_table(sel_scores);
        const auto chosen =
            ds::select(m, cfg.selection(), have_table ? &table : nullptr);
        ds::write_manifest(chosen, sel_out);
        std::cout << "selected " << chosen.records.size() << " of "
                  << m.records.size() << " records\n";
    });

    // --- loop ----------------------------------------------------------------
    ConfigOpts loop_cfg;
    std::string loop_manifest, loop_run_dir, loop_reference;
    bool loop_force = false;
    auto* loop = app.add_subcommand(
        "loop", "evaluation-in-the-loop selection (score, regress, select, retrain)");
    loop_cfg.attach(loop);
    loop->add_option("--manifest", loop_manifest,
                     "pre-screened manifest (default: run dir's pre-screen output)");
    loop->add_option("--run-dir", loop_run_dir, "run directory")->required();
    loop->add_option("--reference-scores", loop_reference,
                     "reference table; when given, a report is written");
    loop->add_flag("--force", loop_force, "redo completed stages");
    loop->callback([&] {
        const auto cfg = loop_cfg.resolve();
        ds::LoopConfig lc;
        lc.selection = cfg.selection();
        lc.run_dir = loop_run_dir;
        lc.iterations = cfg.iterations;
        lc.workers = cfg.workers;
        lc.force = loop_force;
        lc.input_manifest = loop_manifest.empty()
                                ? fs::path(loop_run_dir) / kPrescreened
                                : fs::path(loop_manifest);
        const auto result = ds::loop_orchestrate(lc);
        std::cout << "selected " << result.selected.records.size()
                  << " records; final manifest at " << result.final_manifest << "\n";
        if (!loop_reference.empty()) {
            ds::ReportInputs inputs = ds::gather_report_inputs({loop_run_dir});
            inputs.reference_scores = loop_reference;
            if (!cfg.embedding_dir.empty()) inputs.embedding_dir = cfg.embedding_dir;
            ds::write_report(inputs, fs::path(loop_run_dir) / "report");
            std::cout << "report written to "
                      << (fs::path(loop_run_dir) / "report" / "report.txt") << "\n";
        }
    });

    // --- metrics ----------------------------------------------------------
    ConfigOpts met_cfg;
    std::vector<std::string> met_runs;
    std::string met_reference, met_actual, met_out;
    auto* met = app.add_subcommand("metrics",
                                   "corpus-quality report across method runs");
    met_cfg.attach(met);
    met->add_option("--run-dir", met_runs, "completed loop run directory (repeatable)")
        ->required();
    met->add_option("--reference-scores", met_reference,
                    "reference speaker score table (hq threshold source)")
        ->required();
    met->add_option("--actual-scores", met_actual,
                    "actual MOS table for the correlation column");
    met->add_option("--out", met_out, "report directory (default: first run dir)");
    met->callback([&] {
        const auto cfg = met_cfg.resolve();
        std::vector<fs::path> dirs(met_runs.begin(), met_runs.end());
        ds::ReportInputs inputs = ds::gather_report_inputs(dirs);
        inputs.reference_scores = met_reference;
        if (!met_actual.empty()) inputs.actual_scores = met_actual;
        if (!cfg.embedding_dir.empty()) inputs.embedding_dir = cfg.embedding_dir;
        const fs::path out =
            met_out.empty() ? dirs.front() / "report" : fs::path(met_out);
        ds::write_report(inputs, out);
        std::cout << "report written to " << (out / "report.txt") << "\n";
    });

    // --- mock-scorer ----------------------------------------------------
    std::string mock_manifest, mock_sentences, mock_out, mock_tag = ds::kTrainingTag;
    std::uint64_t mock_seed = 0;
    double mock_sigma = 0.1;
    auto* mock = app.add_subcommand(
        "mock-scorer",
        "deterministic scorer over planted qualities (scorer-contract CLI)");
    mock->add_option("--manifest", mock_manifest, "manifest to score")->required();
    mock->add_option("--sentences", mock_sentences, "sentence set id")->required();
    mock->add_option("--out", mock_out, "output score table")->required();
    mock->add_option("--tag", mock_tag, "selection tag marking the training set");
    mock->add_option("--seed", mock_seed, "noise seed");
    mock->add_option("--sigma", mock_sigma, "noise sigma");
    mock->callback([&] {
        const auto m = ds::read_manifest(mock_manifest);
        const auto table =
            ds::mock_speaker_scorer(m, mock_tag, mock_seed, mock_sigma, mock_sentences);
        ds::write_score_table(table, mock_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ds::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ds::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
