#pragma once

#include <cstdint>
#include <filesystem>

#include "darkselect/record.hpp"

namespace darkselect {

// Desk-scale corpus with known ground truth: planted per-utterance quality,
// clustered speaker embeddings, features whose first dimension tracks the
// planted quality (so the ridge regressor can recover it), acoustic scores
// that are a noisy view of quality, and toy-vocabulary posteriors.
//
// Mixed-quality speakers alternate good (>= mixed_good_lo) and bad
// (<= mixed_bad_hi) utterances, the regime where utterance-wise selection
// beats speaker-wise selection.
struct SyntheticSpec {
    std::size_t n_speakers = 200;
    std::size_t utts_min = 8;
    std::size_t utts_max = 12;
    double mixed_fraction = 0.3;

    // pure speakers: quality = clamp01(base + jitter*N), base uniform
    double pure_base_lo = 0.15;
    double pure_base_hi = 0.95;
    double pure_jitter = 0.05;
    // mixed speakers: alternating draws from the two bands
    double mixed_good_lo = 0.9;
    double mixed_good_hi = 1.0;
    double mixed_bad_lo = 0.0;
    double mixed_bad_hi = 0.1;

    double acoustic_noise = 0.25;  // noise on the quality view behind acoustic scores
    // Fraction of mixed speakers whose recordings are uniformly clean: their
    // acoustic scores sit near clean_recording_level for good and bad
    // utterances alike, so acoustic screening admits training data that only
    // the evaluation loop can reject.
    double clean_mixed_fraction = 0.5;
    double clean_recording_level = 0.75;

    int embedding_dim = 16;
    double cluster_center_scale = 6.0;  // inter-speaker separation
    double cluster_spread = 0.57;       // intra-group spread, sized so the
                                        // 2-D reduction's det(cov) lands
                                        // inside the default [1,7] window

    int feature_dim = 6;
    std::size_t feature_frames_min = 20;
    std::size_t feature_frames_max = 40;
    double feature_quality_jitter = 0.05;

    // planted anomalies exercised by the pre-screening stages
    double tts_like_group_fraction = 0.02;      // near-zero embedding variance
    double multi_speaker_group_fraction = 0.02; // two clusters in one group
    double nonspeech_group_fraction = 0.02;     // low VAD speech fraction
    double bad_alignment_fraction = 0.05;       // posteriors favor wrong tokens

    bool with_posteriors = true;
    bool with_subtitles = true;

    std::uint64_t seed = 0;
};

void validate_spec(const SyntheticSpec& spec);

// Writes manifest.jsonl, vocab.txt, embeddings/, features/ and (optionally)
// posteriors/ and subtitles/ under out_dir. Deterministic: a fixed seed
// reproduces every file byte for byte. Returns the manifest.
CorpusManifest generate_synthetic_corpus(const SyntheticSpec& spec,
                                         const std::filesystem::path& out_dir);

}  // namespace darkselect
