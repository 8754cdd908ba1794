#include "darkselect/ctc_align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/matrix_io.hpp"

namespace darkselect {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void validate_grid(const PosteriorGrid& grid) {
    const auto T = grid.frames();
    const auto V = grid.vocab_size();
    if (T < 1) throw ValidationError("posterior grid needs at least one frame");
    if (V < 2) throw ValidationError("posterior grid needs at least two tokens");
    if (grid.blank_index < 0 || grid.blank_index >= V)
        throw ValidationError("blank_index out of range");
    if (!(grid.frame_duration_s > 0.0))
        throw ValidationError("frame_duration_s must be positive");
    if (grid.samples_per_frame < 1)
        throw ValidationError("samples_per_frame must be positive");
    for (std::int64_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (int v = 0; v < V; ++v) sum += std::exp(grid.logits(t, v));
        if (std::abs(sum - 1.0) > 1e-3)
            throw ValidationError("posterior row " + std::to_string(t) +
                                  " is not log-normalized (sum " +
                                  std::to_string(sum) + ")");
    }
}

TokenSeq TokenSeq::single(std::vector<int> tokens) {
    TokenSeq seq;
    seq.utterance_breaks = {tokens.size()};
    seq.tokens = std::move(tokens);
    return seq;
}

void validate_seq(const TokenSeq& seq, const PosteriorGrid& grid) {
    if (seq.tokens.empty()) throw ValidationError("empty token sequence");
    if (seq.utterance_breaks.empty() ||
        seq.utterance_breaks.back() != seq.tokens.size())
        throw ValidationError("utterance_breaks must end at tokens.size()");
    std::size_t prev = 0;
    for (std::size_t b : seq.utterance_breaks) {
        if (b <= prev)
            throw ValidationError(
                "utterance_breaks must be strictly increasing with non-empty "
                "utterances");
        prev = b;
    }
    for (int tok : seq.tokens) {
        if (tok == grid.blank_index)
            throw ValidationError("token sequence contains the blank token");
        if (tok < 0 || tok >= grid.vocab_size())
            throw ValidationError("token index " + std::to_string(tok) +
                                  " outside vocabulary");
    }
}

namespace {

struct StatePreds {
    bool from_prev1 = false;
    bool from_prev2 = false;
};

double emission(const Trellis::State& s, const PosteriorGrid& grid,
                std::int64_t t) {
    switch (s.kind) {
        case Trellis::State::kSkip: return 0.0;
        case Trellis::State::kToken: return grid.logits(t, s.vocab);
        case Trellis::State::kBlank: return grid.logits(t, grid.blank_index);
    }
    return kNegInf;
}

}  // namespace

Trellis build_trellis(const PosteriorGrid& grid, const TokenSeq& seq) {
    validate_grid(grid);
    validate_seq(seq, grid);

    Trellis tr;
    tr.frames = grid.frames();
    tr.utterance_count = seq.utterance_count();

    // Flattened state machine: Skip(u), Token(u,0), Blank(u,0), Token(u,1),
    // ..., Token(u,m-1) per utterance, then one trailing skip.
    std::vector<StatePreds> preds;
    std::size_t tok_begin = 0;
    for (std::size_t u = 0; u < tr.utterance_count; ++u) {
        const std::size_t tok_end = seq.utterance_breaks[u];
        tr.states.push_back({Trellis::State::kSkip, std::int32_t(u), 0});
        preds.push_back({u >= 1, false});  // from previous utterance's last token
        for (std::size_t j = tok_begin; j < tok_end; ++j) {
            const std::int32_t vocab = seq.tokens[j];
            if (j == tok_begin) {
                tr.first_token_state.push_back(tr.states.size());
                // Entry from the skip state, or directly from the previous
                // utterance's last token when the tokens differ.
                const bool direct =
                    u >= 1 && tr.states[tr.states.size() - 2].vocab != vocab;
                tr.states.push_back({Trellis::State::kToken, std::int32_t(u), vocab});
                preds.push_back({true, direct});
            } else {
                tr.states.push_back({Trellis::State::kBlank, std::int32_t(u), 0});
                preds.push_back({true, false});
                const bool skip_blank = tr.states[tr.states.size() - 2].vocab != vocab;
                tr.states.push_back({Trellis::State::kToken, std::int32_t(u), vocab});
                preds.push_back({true, skip_blank});
            }
        }
        tr.last_token_state.push_back(tr.states.size() - 1);
        tok_begin = tok_end;
    }
    tr.states.push_back(
        {Trellis::State::kSkip, std::int32_t(tr.utterance_count), 0});
    preds.push_back({true, false});

    const std::size_t S = tr.states.size();
    const std::int64_t T = tr.frames;
    tr.logprob.assign(std::size_t(T) * S, kNegInf);
    tr.skip_frames.assign(std::size_t(T) * S, 0);
    tr.backpointer.assign(std::size_t(T) * S, -1);

    // Frame 0: the leading skip state and the first utterance's first token.
    tr.logprob[0] = 0.0;
    tr.skip_frames[0] = 1;
    const std::size_t s00 = tr.first_token_state[0];
    tr.logprob[s00] = emission(tr.states[s00], grid, 0);

    for (std::int64_t t = 1; t < T; ++t) {
        const std::size_t row = std::size_t(t) * S;
        const std::size_t prev = row - S;
        for (std::size_t s = 0; s < S; ++s) {
            double best_lp = kNegInf;
            std::int32_t best_sk = 0;
            std::int32_t best_bp = -1;
            auto consider = [&](std::size_t p) {
                const double base = tr.logprob[prev + p];
                if (base == kNegInf) return;
                const std::int32_t sk = tr.skip_frames[prev + p];
                // Larger predecessor index wins exact ties because candidates
                // arrive in descending order and must improve to replace.
                if (base > best_lp || (base == best_lp && sk < best_sk)) {
                    best_lp = base;
                    best_sk = sk;
                    best_bp = std::int32_t(p);
                }
            };
            consider(s);
            if (preds[s].from_prev1) consider(s - 1);
            if (preds[s].from_prev2) consider(s - 2);
            if (best_bp < 0) continue;
            tr.logprob[row + s] = best_lp + emission(tr.states[s], grid, t);
            tr.skip_frames[row + s] =
                best_sk + (tr.states[s].kind == Trellis::State::kSkip ? 1 : 0);
            tr.backpointer[row + s] = best_bp;
        }
    }

    const std::size_t last_tok = tr.last_token_state.back();
    const std::size_t last_row = std::size_t(T - 1) * S;
    if (tr.logprob[last_row + last_tok] == kNegInf &&
        tr.logprob[last_row + S - 1] == kNegInf)
        throw ValidationError("token sequence cannot be emitted within " +
                              std::to_string(T) + " frames");
    return tr;
}

std::vector<AlignedUtterance> backtrack(const Trellis& tr,
                                        const PosteriorGrid& grid,
                                        const ScoreParams& params) {
    const std::size_t S = tr.states.size();
    const std::int64_t T = tr.frames;
    const std::size_t last_tok = tr.last_token_state.back();
    const std::size_t end_skip = S - 1;
    const std::size_t last_row = std::size_t(T - 1) * S;

    // Ending in the trailing skip state is exactly "the last token's most
    // probable timing is earlier"; preferring it on ties would shrink the
    // utterance, so the token end wins only when strictly worse is avoided.
    std::size_t end_state = end_skip;
    if (tr.logprob[last_row + last_tok] > tr.logprob[last_row + end_skip] ||
        (tr.logprob[last_row + last_tok] == tr.logprob[last_row + end_skip] &&
         tr.skip_frames[last_row + last_tok] < tr.skip_frames[last_row + end_skip]))
        end_state = last_tok;
    if (tr.logprob[last_row + end_state] == kNegInf)
        throw ValidationError("trellis has no complete path");

    std::vector<std::size_t> state_at(static_cast<std::size_t>(T));
    state_at[T - 1] = end_state;
    for (std::int64_t t = T - 1; t > 0; --t) {
        const std::int32_t bp = tr.backpointer[std::size_t(t) * S + state_at[t]];
        state_at[t - 1] = std::size_t(bp);
    }

    std::vector<AlignedUtterance> out;
    out.reserve(tr.utterance_count);
    for (std::size_t u = 0; u < tr.utterance_count; ++u) {
        const std::size_t lo = tr.first_token_state[u];
        const std::size_t hi = tr.last_token_state[u];
        std::int64_t onset = -1, offset = -1;
        for (std::int64_t t = 0; t < T; ++t) {
            if (state_at[t] >= lo && state_at[t] <= hi) {
                if (onset < 0) onset = t;
                offset = t;
            }
        }
        if (onset < 0)
            throw ValidationError("path skipped utterance " + std::to_string(u));
        AlignedUtterance a;
        a.utterance_index = u;
        a.onset_frame = onset;
        a.offset_frame = offset;
        a.path_logprobs.reserve(std::size_t(offset - onset + 1));
        for (std::int64_t t = onset; t <= offset; ++t)
            a.path_logprobs.push_back(emission(tr.states[state_at[t]], grid, t));
        a.confidence = confidence_score(a.path_logprobs, params);
        out.push_back(std::move(a));
    }
    return out;
}

double confidence_score(const std::vector<double>& path_logprobs,
                        const ScoreParams& params) {
    if (path_logprobs.empty())
        throw ValidationError("confidence_score on empty path");
    if (params.window_frames < 1)
        throw ValidationError("window length must be >= 1");
    const std::size_t n = path_logprobs.size();
    const std::size_t w = std::min<std::size_t>(params.window_frames, n);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + w <= n; ++i) {
        double sum = 0.0;
        for (std::size_t j = i; j < i + w; ++j) sum += path_logprobs[j];
        worst = std::min(worst, sum / double(w));
    }
    return worst;
}

double score_given_timings(const PosteriorGrid& grid,
                           const std::vector<int>& tokens, double start_s,
                           double end_s, const ScoreParams& params) {
    validate_grid(grid);
    if (tokens.empty()) throw ValidationError("no tokens to score");
    const double fd = grid.frame_duration_s;
    std::int64_t f0 = std::int64_t(std::floor(start_s / fd + 1e-9));
    std::int64_t f1 = std::int64_t(std::ceil(end_s / fd - 1e-9));
    f0 = std::max<std::int64_t>(f0, 0);
    f1 = std::min<std::int64_t>(f1, grid.frames());
    if (f1 <= f0)
        throw ValidationError("timing slice [" + std::to_string(start_s) + ", " +
                              std::to_string(end_s) + "] covers no frames");

    PosteriorGrid slice;
    slice.logits = grid.logits.middleRows(f0, f1 - f0);
    slice.blank_index = grid.blank_index;
    slice.frame_duration_s = grid.frame_duration_s;
    slice.samples_per_frame = grid.samples_per_frame;

    try {
        const Trellis tr = build_trellis(slice, TokenSeq::single(tokens));
        return backtrack(tr, slice, params).front().confidence;
    } catch (const ValidationError&) {
        return kNegInf;  // unemittable within the slice: recorded as rejected
    }
}

std::vector<PartitionBlock> partition_plan(std::int64_t total_samples,
                                           std::int64_t samples_per_frame,
                                           std::int64_t max_block_frames,
                                           std::int64_t overlap_frames) {
    if (samples_per_frame < 1)
        throw ValidationError("samples_per_frame must be positive");
    if (total_samples < samples_per_frame)
        throw ValidationError("signal shorter than one posterior frame");
    if (overlap_frames < 0) throw ValidationError("overlap must be >= 0");
    if (max_block_frames <= 2 * overlap_frames)
        throw ValidationError("max_block_frames must exceed twice the overlap");

    const std::int64_t spf = samples_per_frame;
    const std::int64_t total_frames = total_samples / spf;

    std::int64_t n_blocks;
    if (total_frames <= max_block_frames) {
        n_blocks = 1;
    } else {
        const std::int64_t q = total_frames / max_block_frames;
        const std::int64_t r = total_frames % max_block_frames;
        // Fold a remainder of up to 25% into the final block.
        n_blocks = (r == 0 || 4 * r <= max_block_frames) ? q : q + 1;
    }

    std::vector<PartitionBlock> blocks;
    blocks.reserve(std::size_t(n_blocks));
    for (std::int64_t i = 0; i < n_blocks; ++i) {
        const std::int64_t core_start_f = i * max_block_frames;
        const std::int64_t core_end_f =
            (i == n_blocks - 1) ? total_frames : (i + 1) * max_block_frames;
        const std::int64_t left = std::min(overlap_frames, core_start_f);
        const std::int64_t right = std::min(overlap_frames, total_frames - core_end_f);
        PartitionBlock b;
        b.left_overlap_samples = left * spf;
        b.right_overlap_samples = right * spf;
        b.start_sample = core_start_f * spf - b.left_overlap_samples;
        // The final core absorbs the sub-frame tail so cores tile the input.
        const std::int64_t core_end_sample =
            (i == n_blocks - 1) ? total_samples : core_end_f * spf;
        b.end_sample = core_end_sample + b.right_overlap_samples;
        blocks.push_back(b);
    }
    return blocks;
}

PosteriorGrid stitch_posteriors(const std::vector<BlockPosteriors>& blocks) {
    if (blocks.empty()) throw ValidationError("no posterior blocks to stitch");
    const auto& head = blocks.front().grid;
    std::int64_t total = 0;
    for (const auto& b : blocks) {
        if (b.grid.vocab_size() != head.vocab_size() ||
            b.grid.blank_index != head.blank_index ||
            b.grid.frame_duration_s != head.frame_duration_s ||
            b.grid.samples_per_frame != head.samples_per_frame)
            throw ValidationError("posterior block shape/metadata mismatch");
        const std::int64_t core =
            b.grid.frames() - b.left_overlap_frames - b.right_overlap_frames;
        if (core < 1)
            throw ValidationError("posterior block smaller than its overlaps");
        total += core;
    }

    PosteriorGrid out;
    out.blank_index = head.blank_index;
    out.frame_duration_s = head.frame_duration_s;
    out.samples_per_frame = head.samples_per_frame;
    out.logits.resize(total, head.vocab_size());
    std::int64_t row = 0;
    for (const auto& b : blocks) {
        const std::int64_t core =
            b.grid.frames() - b.left_overlap_frames - b.right_overlap_frames;
        out.logits.middleRows(row, core) =
            b.grid.logits.middleRows(b.left_overlap_frames, core);
        row += core;
    }
    return out;
}

CorpusManifest filter_by_ctc(const CorpusManifest& manifest, double theta) {
    CorpusManifest out;
    out.metadata = manifest.metadata;
    for (const auto& r : manifest.records) {
        if (!r.ctc_score)
            throw ValidationError("record '" + r.utterance_id +
                                  "' has no ctc_score");
        if (*r.ctc_score >= theta) out.records.push_back(r);
    }
    out.append_stage("ctc_filter");
    out.metadata["ctc_filter_theta"] = format_g9(theta);
    out.metadata["ctc_filter_kept"] = std::to_string(out.records.size()) + "/" +
                                      std::to_string(manifest.records.size());
    return out;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary: " + path.string());
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) v.tokens.push_back(line);
    while (!v.tokens.empty() && v.tokens.back().empty()) v.tokens.pop_back();
    if (v.tokens.size() < 2)
        throw ValidationError("vocabulary needs the blank plus at least one token");
    for (std::size_t i = 1; i < v.tokens.size(); ++i) {
        if (v.tokens[i].empty())
            throw ValidationError("empty vocabulary token at line " +
                                  std::to_string(i));
        for (std::size_t j = 1; j < i; ++j)
            if (v.tokens[i] == v.tokens[j])
                throw ValidationError("duplicate vocabulary token '" +
                                      v.tokens[i] + "'");
    }
    return v;
}

std::vector<int> tokenize(const Vocabulary& vocab, const std::string& text) {
    std::vector<int> out;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t best_len = 0;
        int best_tok = -1;
        for (std::size_t t = 1; t < vocab.tokens.size(); ++t) {
            const std::string& tok = vocab.tokens[t];
            if (tok.size() > best_len && text.compare(i, tok.size(), tok) == 0) {
                best_len = tok.size();
                best_tok = int(t);
            }
        }
        if (best_tok >= 0) {
            out.push_back(best_tok);
            i += best_len;
            continue;
        }
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        throw ValidationError("untokenizable input at byte " + std::to_string(i) +
                              " of \"" + text + "\"");
    }
    if (out.empty())
        throw ValidationError("text \"" + text + "\" tokenizes to nothing");
    return out;
}

PosteriorGrid read_posteriors(const std::filesystem::path& matrix_path) {
    PosteriorGrid grid;
    grid.logits = read_matrix(matrix_path).cast<double>();

    const auto meta_path = matrix_path.string() + ".meta";
    std::ifstream in(meta_path);
    if (!in) throw IoError("cannot open posterior sidecar: " + meta_path);
    std::string line;
    std::getline(in, line);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad posterior sidecar " + meta_path + ": " + e.what());
    }
    grid.blank_index = j.at("blank_index").get<int>();
    grid.frame_duration_s = j.at("frame_duration_s").get<double>();
    grid.samples_per_frame = j.at("samples_per_frame").get<std::int64_t>();
    return grid;
}

void write_posteriors(const PosteriorGrid& grid,
                      const std::filesystem::path& matrix_path) {
    write_matrix(grid.logits.cast<float>(), matrix_path);
    const auto meta_path = matrix_path.string() + ".meta";
    std::ofstream out(meta_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create posterior sidecar: " + meta_path);
    out << "{\"blank_index\":" << grid.blank_index << ",\"frame_duration_s\":"
        << format_g9(grid.frame_duration_s)
        << ",\"samples_per_frame\":" << grid.samples_per_frame << "}\n";
}

}  // namespace darkselect
