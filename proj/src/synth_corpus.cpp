#include "darkselect/synth_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "darkselect/ctc_align.hpp"
#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/matrix_io.hpp"
#include "darkselect/prng.hpp"
#include "darkselect/speaker_screen.hpp"

namespace darkselect {

namespace {

constexpr int kVocabLetters = 10;  // 'a'..'j' plus the blank at index 0

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string speaker_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ch%04zu", i);
    return buf;
}

std::string vtt_time(double s) {
    const int ms = int(std::lround(s * 1000.0));
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%02d:%02d:%02d.%03d", ms / 3600000,
                  (ms / 60000) % 60, (ms / 1000) % 60, ms % 1000);
    return buf;
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
    if (spec.n_speakers < 1) throw ValidationError("n_speakers must be >= 1");
    if (spec.utts_min < 2 || spec.utts_max < spec.utts_min)
        throw ValidationError("bad utts_per_speaker range");
    for (double f : {spec.mixed_fraction, spec.tts_like_group_fraction,
                     spec.multi_speaker_group_fraction, spec.nonspeech_group_fraction,
                     spec.bad_alignment_fraction})
        if (f < 0.0 || f > 1.0) throw ValidationError("fractions must be in [0,1]");
    if (spec.embedding_dim < 2) throw ValidationError("embedding_dim must be >= 2");
    if (spec.feature_dim < 1) throw ValidationError("feature_dim must be >= 1");
    if (spec.feature_frames_min < 1 || spec.feature_frames_max < spec.feature_frames_min)
        throw ValidationError("bad feature frame range");
}

CorpusManifest generate_synthetic_corpus(const SyntheticSpec& spec,
                                         const std::filesystem::path& out_dir) {
    validate_spec(spec);
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "embeddings");
    fs::create_directories(out_dir / "features");
    if (spec.with_posteriors) fs::create_directories(out_dir / "posteriors");
    if (spec.with_subtitles) fs::create_directories(out_dir / "subtitles");

    {
        std::ofstream vocab(out_dir / "vocab.txt", std::ios::binary | std::ios::trunc);
        vocab << "<blank>\n";
        for (int i = 0; i < kVocabLetters; ++i) vocab << char('a' + i) << '\n';
    }

    CorpusManifest manifest;
    struct GroupPlan {
        std::string group_id;
        std::vector<std::size_t> record_indices;
        bool tts_like = false;
        bool multi_speaker = false;
        bool nonspeech = false;
    };
    std::vector<GroupPlan> groups;

    for (std::size_t s = 0; s < spec.n_speakers; ++s) {
        const std::string channel = speaker_name(s);
        Prng rng = keyed_prng(spec.seed, "speaker:" + channel);
        const bool mixed = rng.uniform() < spec.mixed_fraction;
        const double base = rng.uniform(spec.pure_base_lo, spec.pure_base_hi);
        const std::size_t n_utts =
            spec.utts_min + rng.below(spec.utts_max - spec.utts_min + 1);
        const std::size_t n_groups = n_utts >= 6 && rng.uniform() < 0.5 ? 2 : 1;
        const bool clean_recordings =
            mixed && rng.uniform() < spec.clean_mixed_fraction;

        std::size_t utt = 0;
        for (std::size_t g = 0; g < n_groups; ++g) {
            GroupPlan plan;
            plan.group_id = channel + "-v" + char('a' + g);
            Prng grng = keyed_prng(spec.seed, "group:" + plan.group_id);
            plan.tts_like = grng.uniform() < spec.tts_like_group_fraction;
            plan.multi_speaker =
                !plan.tts_like && grng.uniform() < spec.multi_speaker_group_fraction;
            plan.nonspeech = grng.uniform() < spec.nonspeech_group_fraction;
            const double group_speech_fraction =
                plan.nonspeech ? grng.uniform(0.05, 0.2) : grng.uniform(0.85, 1.0);

            const std::size_t group_utts =
                g + 1 == n_groups ? n_utts - utt : n_utts / n_groups;
            double t = 0.0;
            for (std::size_t k = 0; k < group_utts; ++k, ++utt) {
                char ubuf[16];
                std::snprintf(ubuf, sizeof(ubuf), "-u%03zu", utt);
                UtteranceRecord r;
                r.utterance_id = plan.group_id + ubuf;
                r.group_id = plan.group_id;
                r.channel_id = channel;
                Prng urng = keyed_prng(spec.seed, "utt:" + r.utterance_id);

                double q;
                if (mixed)
                    q = utt % 2 == 0 ? urng.uniform(spec.mixed_good_lo, spec.mixed_good_hi)
                                     : urng.uniform(spec.mixed_bad_lo, spec.mixed_bad_hi);
                else
                    q = clamp01(base + spec.pure_jitter * urng.gaussian());
                r.planted_quality = q;

                const std::size_t words = 3 + urng.below(6);
                for (std::size_t w = 0; w < words; ++w) {
                    if (w) r.text += ' ';
                    const std::size_t len = 2 + urng.below(4);
                    for (std::size_t c = 0; c < len; ++c)
                        r.text += char('a' + int(urng.below(kVocabLetters)));
                }

                const std::size_t tokens = r.text.size() - (words - 1);
                r.start_s = t + urng.uniform(0.2, 0.8);
                r.end_s = r.start_s + 0.4 + 0.1 * double(tokens);
                t = r.end_s;

                const double acoustic_view =
                    clean_recordings ? spec.clean_recording_level : q;
                r.acoustic_scores["naturalness"] = 1.0 + 4.0 * clamp01(
                    acoustic_view + spec.acoustic_noise * urng.gaussian());
                r.acoustic_scores["noisiness"] = 1.0 + 4.0 * clamp01(
                    acoustic_view + spec.acoustic_noise * urng.gaussian());
                r.speech_fraction = group_speech_fraction;
                r.feature_path = (out_dir / "features" / (r.utterance_id + ".mtx")).string();

                plan.record_indices.push_back(manifest.records.size());
                manifest.records.push_back(std::move(r));
            }
            groups.push_back(std::move(plan));
        }
    }

    // Feature matrices: first dimension tracks the planted quality; the rest
    // is structured noise the regressor should learn to ignore.
    for (const auto& r : manifest.records) {
        Prng frng = keyed_prng(spec.seed, "feat:" + r.utterance_id);
        const std::size_t frames =
            spec.feature_frames_min +
            frng.below(spec.feature_frames_max - spec.feature_frames_min + 1);
        Eigen::VectorXd offsets(spec.feature_dim);
        for (int j = 0; j < spec.feature_dim; ++j) offsets(j) = 0.3 * frng.gaussian();
        MatrixF feats(frames, spec.feature_dim);
        for (std::size_t f = 0; f < frames; ++f) {
            feats(f, 0) = float(*r.planted_quality +
                                spec.feature_quality_jitter * frng.gaussian());
            for (int j = 1; j < spec.feature_dim; ++j)
                feats(f, j) = float(offsets(j) + 0.5 * frng.gaussian());
        }
        write_matrix(feats, r.feature_path);
    }

    // Embeddings: one cluster per speaker; anomalous groups plant the
    // TTS-like and multi-speaker failure modes the compactness window rejects.
    for (const auto& plan : groups) {
        const auto& first = manifest.records[plan.record_indices.front()];
        Prng crng = keyed_prng(spec.seed, "cluster:" + first.channel_id);
        Eigen::VectorXd center(spec.embedding_dim);
        for (int j = 0; j < spec.embedding_dim; ++j)
            center(j) = spec.cluster_center_scale * crng.gaussian();
        Eigen::VectorXd alt_center(spec.embedding_dim);
        Prng arng = keyed_prng(spec.seed, "altcluster:" + plan.group_id);
        for (int j = 0; j < spec.embedding_dim; ++j)
            alt_center(j) = spec.cluster_center_scale * arng.gaussian();

        EmbeddingSet set;
        set.dim = spec.embedding_dim;
        std::vector<std::string> order;
        for (std::size_t k = 0; k < plan.record_indices.size(); ++k) {
            const auto& r = manifest.records[plan.record_indices[k]];
            Prng erng = keyed_prng(spec.seed, "emb:" + r.utterance_id);
            const double spread = plan.tts_like ? 0.005 : spec.cluster_spread;
            const Eigen::VectorXd& c =
                plan.multi_speaker && k % 2 == 1 ? alt_center : center;
            Eigen::VectorXd v(spec.embedding_dim);
            for (int j = 0; j < spec.embedding_dim; ++j)
                v(j) = c(j) + spread * erng.gaussian();
            set.vectors[r.utterance_id] = v;
            order.push_back(r.utterance_id);
        }
        write_embeddings(set, order, out_dir / "embeddings" / (plan.group_id + ".mtx"));
    }

    // Toy posteriors: each utterance's tokens occupy its frame span with high
    // probability; gaps favor the blank. Records planted as badly aligned get
    // posteriors for shifted letters, which drives their score far below any
    // sane theta.
    if (spec.with_posteriors) {
        Vocabulary vocab;
        vocab.tokens.push_back("<blank>");
        for (int i = 0; i < kVocabLetters; ++i)
            vocab.tokens.push_back(std::string(1, char('a' + i)));

        for (const auto& plan : groups) {
            const double fd = 0.01;
            const auto& last = manifest.records[plan.record_indices.back()];
            const std::int64_t frames = std::int64_t((last.end_s + 0.3) / fd) + 1;
            const int V = kVocabLetters + 1;
            PosteriorGrid grid;
            grid.blank_index = 0;
            grid.frame_duration_s = fd;
            grid.samples_per_frame = 160;
            grid.logits.resize(frames, V);

            // background: confident blank everywhere
            Eigen::VectorXd bg(V);
            bg.setConstant((1.0 - 0.96) / (V - 1));
            bg(0) = 0.96;
            for (std::int64_t t = 0; t < frames; ++t)
                grid.logits.row(t) = bg.transpose();

            for (std::size_t idx : plan.record_indices) {
                const auto& r = manifest.records[idx];
                Prng prng = keyed_prng(spec.seed, "post:" + r.utterance_id);
                const bool bad = prng.uniform() < spec.bad_alignment_fraction;
                std::vector<int> toks = tokenize(vocab, r.text);
                if (bad)
                    for (int& tk : toks) tk = 1 + (tk % kVocabLetters);
                const std::int64_t f0 = std::int64_t(r.start_s / fd);
                const std::int64_t f1 =
                    std::min<std::int64_t>(std::int64_t(r.end_s / fd), frames);
                const std::int64_t span = std::max<std::int64_t>(f1 - f0, 1);
                for (std::int64_t t = f0; t < f1; ++t) {
                    const std::size_t k = std::min<std::size_t>(
                        toks.size() - 1, std::size_t((t - f0) * std::int64_t(toks.size()) / span));
                    Eigen::VectorXd row(V);
                    const double p_tok = 0.86 + 0.05 * prng.uniform();
                    const double p_blank = 0.6 * (1.0 - p_tok);
                    row.setConstant((1.0 - p_tok - p_blank) / (V - 2));
                    row(0) = p_blank;
                    row(toks[k]) = p_tok;
                    grid.logits.row(t) = row.transpose();
                }
            }
            grid.logits = grid.logits.array().log();
            write_posteriors(grid, out_dir / "posteriors" / (plan.group_id + ".mtx"));
        }
    }

    if (spec.with_subtitles) {
        for (const auto& plan : groups) {
            std::ofstream vtt(out_dir / "subtitles" / (plan.group_id + ".vtt"),
                              std::ios::binary | std::ios::trunc);
            vtt << "WEBVTT\n\n";
            for (std::size_t idx : plan.record_indices) {
                const auto& r = manifest.records[idx];
                vtt << vtt_time(r.start_s) << " --> " << vtt_time(r.end_s) << '\n'
                    << r.text << "\n\n";
            }
        }
    }

    manifest.append_stage("synthcorpus");
    manifest.metadata["seed"] = std::to_string(spec.seed);
    write_manifest(manifest, out_dir / "manifest.jsonl");
    return manifest;
}

}  // namespace darkselect
