#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "darkselect/record.hpp"

namespace darkselect {

// Fixed-dimension speaker embeddings keyed by utterance id.
struct EmbeddingSet {
    int dim = 0;
    std::map<std::string, Eigen::VectorXd> vectors;

    std::size_t size() const { return vectors.size(); }
};

void validate_embeddings(const EmbeddingSet& set);

struct CompactnessResult {
    std::string group_id;
    std::size_t n_utts = 0;
    double score = 0.0;  // det of the reduced-embedding covariance, >= 0
    std::string reducer_id;
};

struct VadResult {
    double speech_fraction = 0.0;  // in [0,1]
    std::vector<std::pair<double, double>> segments;  // (start_s, end_s)
};

// Energy VAD baseline: a frame is speech when its RMS exceeds
// energy_ratio_threshold times the whole-signal RMS. Trailing samples that
// do not fill a frame are ignored.
VadResult energy_vad(const std::vector<float>& samples, int sample_rate = 16000,
                     double frame_ms = 25.0, double energy_ratio_threshold = 0.5);

// Drops groups whose duration-weighted speech fraction is below
// min_speech_fraction and groups with fewer than min_group_utts utterances
// (too few for stable intra-group statistics). Records without a stored
// speech_fraction fall back to running the VAD on their audio_path.
CorpusManifest drop_nonspeech_and_short(const CorpusManifest& manifest,
                                        double min_speech_fraction,
                                        std::size_t min_group_utts);

// Dimensionality reduction ahead of the compactness statistic. Reducers:
//   "pca"             deterministic principal components, eigenvalue-ordered,
//                     sign fixed so each component's largest-magnitude
//                     coordinate is positive
//   "identity"        requires dim == target_dim
//   "external:<cmd>"  subprocess: <cmd> --in <mtx> --out <mtx> --dim <n>,
//                     preserving row order
EmbeddingSet reduce_embeddings(const EmbeddingSet& set, const std::string& reducer,
                               int target_dim = 2);

// det of the sample covariance (n-1 denominator) of the reduced vectors.
// Near zero for TTS-like voices, large for multi-speaker groups.
CompactnessResult compactness_score(const EmbeddingSet& reduced,
                                    const std::string& group_id = {},
                                    const std::string& reducer_id = {});

// Keeps groups with lo <= compactness <= hi (both ends inclusive): below
// rejects synthetic voices, above rejects contaminated multi-speaker groups.
CorpusManifest filter_groups_by_compactness(const CorpusManifest& manifest,
                                            double lo, double hi);

// Assigns speaker_id = channel_id: single-speaker groups sharing an uploader
// are one speaker.
CorpusManifest group_to_speakers(const CorpusManifest& manifest);

// Embedding files: one MatrixFile per group (rows follow manifest order)
// plus a ".ids" sidecar listing utterance ids, one per line.
EmbeddingSet read_embeddings(const std::filesystem::path& matrix_path);
void write_embeddings(const EmbeddingSet& set,
                      const std::vector<std::string>& row_order,
                      const std::filesystem::path& matrix_path);

}  // namespace darkselect
