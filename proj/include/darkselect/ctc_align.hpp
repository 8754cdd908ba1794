#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "darkselect/record.hpp"

namespace darkselect {

using MatrixD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Per-frame log-posteriors of an external acoustic model over a token
// vocabulary. Rows are natural-log posteriors and must stay log-normalized
// (sum of exp within 1e-3 of 1).
struct PosteriorGrid {
    MatrixD logits;             // T x V
    int blank_index = 0;
    double frame_duration_s = 0.01;
    std::int64_t samples_per_frame = 160;

    std::int64_t frames() const { return logits.rows(); }
    int vocab_size() const { return static_cast<int>(logits.cols()); }
};

void validate_grid(const PosteriorGrid& grid);

// Ground-truth token indices for one or more utterances, concatenated.
// utterance_breaks[i] is the exclusive end of utterance i within `tokens`;
// the final break equals tokens.size(). No token may be the blank.
struct TokenSeq {
    std::vector<int> tokens;
    std::vector<std::size_t> utterance_breaks;

    static TokenSeq single(std::vector<int> tokens);
    std::size_t utterance_count() const { return utterance_breaks.size(); }
};

void validate_seq(const TokenSeq& seq, const PosteriorGrid& grid);

struct ScoreParams {
    int window_frames = 30;   // L, about 1 s of audio at 10 ms frames
    double theta = -0.3;      // cleaning threshold on the confidence score
};

struct AlignedUtterance {
    std::size_t utterance_index = 0;
    std::int64_t onset_frame = 0;
    std::int64_t offset_frame = 0;              // inclusive
    std::vector<double> path_logprobs;          // one entry per frame in [onset, offset]
    double confidence = 0.0;
};

// Trellis over the flattened state machine: for each utterance a zero-cost
// skip state, then its tokens with interior blanks. Skip states make entry
// into every utterance free, so unrelated audio before any utterance costs
// nothing. Cell values are (log-prob, skip-frame count) compared
// lexicographically; the skip count settles exact ties in favor of keeping
// utterances extended rather than parked in skip states.
struct Trellis {
    struct State {
        enum Kind : std::uint8_t { kSkip, kToken, kBlank };
        Kind kind;
        std::int32_t utterance;  // kSkip: the utterance this skip precedes (K = trailing)
        std::int32_t vocab;      // token index for kToken, else unused
    };

    std::vector<State> states;
    std::int64_t frames = 0;
    // Row-major [frame][state]:
    std::vector<double> logprob;
    std::vector<std::int32_t> skip_frames;
    std::vector<std::int32_t> backpointer;  // predecessor state index, -1 at start
    std::size_t utterance_count = 0;
    std::vector<std::size_t> first_token_state;  // per utterance
    std::vector<std::size_t> last_token_state;

    double& lp(std::int64_t t, std::size_t s) { return logprob[t * states.size() + s]; }
    double lp(std::int64_t t, std::size_t s) const { return logprob[t * states.size() + s]; }
};

// Forward pass. Throws ValidationError if the sequence cannot be emitted
// within the grid's frames.
Trellis build_trellis(const PosteriorGrid& grid, const TokenSeq& seq);

// Recovers the best path and per-utterance timings. The end frame of the
// last utterance is the global argmax over frames (latest frame on ties);
// remaining ties prefer the predecessor closest in state order, which keeps
// an utterance extended backward when a stretch of frames is cost-free.
std::vector<AlignedUtterance> backtrack(const Trellis& trellis,
                                        const PosteriorGrid& grid,
                                        const ScoreParams& params = {});

// Minimum over all length-min(L, n) windows of the window mean of the
// aligned path's per-frame log-probs. Short utterances fall back to the
// full-utterance mean instead of being rejected outright.
double confidence_score(const std::vector<double>& path_logprobs,
                        const ScoreParams& params = {});

// CTC score for an existing [start_s, end_s] timing: slices the grid to that
// range and aligns the single utterance inside the slice. Returns -infinity
// when the tokens cannot be emitted within the slice.
double score_given_timings(const PosteriorGrid& grid,
                           const std::vector<int>& tokens, double start_s,
                           double end_s, const ScoreParams& params = {});

// One block of a long-audio partition, all fields in samples. The core
// region [start+left_overlap, end-right_overlap) is what stitching keeps.
struct PartitionBlock {
    std::int64_t start_sample = 0;
    std::int64_t end_sample = 0;
    std::int64_t left_overlap_samples = 0;
    std::int64_t right_overlap_samples = 0;

    std::int64_t core_start() const { return start_sample + left_overlap_samples; }
    std::int64_t core_end() const { return end_sample - right_overlap_samples; }
};

// Splits [0, total_samples) into blocks of max_block_frames core frames.
// A remainder of up to 25% of a block is folded into the last block instead
// of forming a short one. Cut points are multiples of samples_per_frame;
// interior blocks carry overlap context on both sides.
std::vector<PartitionBlock> partition_plan(std::int64_t total_samples,
                                           std::int64_t samples_per_frame,
                                           std::int64_t max_block_frames,
                                           std::int64_t overlap_frames);

struct BlockPosteriors {
    PosteriorGrid grid;
    std::int64_t left_overlap_frames = 0;
    std::int64_t right_overlap_frames = 0;
};

// Concatenates per-block posteriors, dropping the overlap frames, so the
// result has one row per core frame of the partition.
PosteriorGrid stitch_posteriors(const std::vector<BlockPosteriors>& blocks);

// Keeps records whose ctc_score is >= theta (inclusive). Every record must
// carry a score; -inf sentinel records only survive theta == -inf.
CorpusManifest filter_by_ctc(const CorpusManifest& manifest, double theta);

// Token vocabulary: one token per line, line number = index, line 0 is the
// blank token.
struct Vocabulary {
    std::vector<std::string> tokens;
    int blank_index = 0;
};

Vocabulary load_vocabulary(const std::filesystem::path& path);

// Greedy longest-match tokenization against the non-blank vocabulary.
// Whitespace with no matching token is skipped; any other unmatched input is
// an error.
std::vector<int> tokenize(const Vocabulary& vocab, const std::string& text);

// Posterior sidecar: single JSON line next to the MatrixFile carrying
// blank_index, frame_duration_s and samples_per_frame.
PosteriorGrid read_posteriors(const std::filesystem::path& matrix_path);
void write_posteriors(const PosteriorGrid& grid,
                      const std::filesystem::path& matrix_path);

}  // namespace darkselect
