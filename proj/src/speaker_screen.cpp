#include "darkselect/speaker_screen.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>

#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/matrix_io.hpp"
#include "darkselect/subprocess.hpp"
#include "darkselect/wav_io.hpp"

namespace darkselect {

void validate_embeddings(const EmbeddingSet& set) {
    if (set.dim < 1) throw ValidationError("embedding dim must be >= 1");
    for (const auto& [id, v] : set.vectors) {
        if (v.size() != set.dim)
            throw ValidationError("embedding '" + id + "' has dim " +
                                  std::to_string(v.size()) + ", expected " +
                                  std::to_string(set.dim));
        if (!v.allFinite())
            throw ValidationError("embedding '" + id + "' has non-finite values");
    }
}

VadResult energy_vad(const std::vector<float>& samples, int sample_rate,
                     double frame_ms, double energy_ratio_threshold) {
    if (samples.empty()) throw ValidationError("energy_vad on empty signal");
    if (sample_rate < 1 || frame_ms <= 0.0)
        throw ValidationError("bad VAD parameters");

    const std::size_t frame_len =
        std::max<std::size_t>(1, std::size_t(sample_rate * frame_ms / 1000.0));
    const std::size_t n_frames = samples.size() / frame_len;

    double total_energy = 0.0;
    for (float s : samples) total_energy += double(s) * double(s);
    const double global_rms = std::sqrt(total_energy / double(samples.size()));
    const double gate = energy_ratio_threshold * global_rms;

    VadResult result;
    if (n_frames == 0) return result;  // shorter than one frame: no speech frames

    std::size_t speech = 0;
    std::int64_t seg_start = -1;
    const double frame_s = double(frame_len) / sample_rate;
    for (std::size_t f = 0; f < n_frames; ++f) {
        double e = 0.0;
        for (std::size_t i = f * frame_len; i < (f + 1) * frame_len; ++i)
            e += double(samples[i]) * double(samples[i]);
        const double rms = std::sqrt(e / double(frame_len));
        const bool is_speech = rms > gate;
        if (is_speech) {
            ++speech;
            if (seg_start < 0) seg_start = std::int64_t(f);
        } else if (seg_start >= 0) {
            result.segments.emplace_back(seg_start * frame_s, f * frame_s);
            seg_start = -1;
        }
    }
    if (seg_start >= 0)
        result.segments.emplace_back(seg_start * frame_s, n_frames * frame_s);
    result.speech_fraction = double(speech) / double(n_frames);
    return result;
}

CorpusManifest drop_nonspeech_and_short(const CorpusManifest& manifest,
                                        double min_speech_fraction,
                                        std::size_t min_group_utts) {
    CorpusManifest out;
    out.metadata = manifest.metadata;

    std::map<std::string, bool> keep;
    for (const auto& [gid, records] : group_records(manifest)) {
        if (records.size() < min_group_utts) {
            keep[gid] = false;
            continue;
        }
        double speech_s = 0.0, total_s = 0.0;
        for (const auto* r : records) {
            double frac;
            if (r->speech_fraction) {
                frac = *r->speech_fraction;
            } else if (!r->audio_path.empty()) {
                const auto audio = read_wav(r->audio_path);
                frac = energy_vad(audio.samples, audio.sample_rate).speech_fraction;
            } else {
                throw ValidationError("record '" + r->utterance_id +
                                      "' has neither speech_fraction nor audio_path");
            }
            speech_s += frac * r->duration_s();
            total_s += r->duration_s();
        }
        keep[gid] = total_s > 0.0 && speech_s / total_s >= min_speech_fraction;
    }

    for (const auto& r : manifest.records)
        if (keep[r.group_id]) out.records.push_back(r);
    out.append_stage("speech_gate");
    return out;
}

namespace {

// Rows in key order (std::map is ordered, so this is deterministic).
Eigen::MatrixXd stack_vectors(const EmbeddingSet& set) {
    Eigen::MatrixXd X(set.size(), set.dim);
    Eigen::Index row = 0;
    for (const auto& [id, v] : set.vectors) X.row(row++) = v.transpose();
    return X;
}

EmbeddingSet from_matrix(const EmbeddingSet& like, const Eigen::MatrixXd& X) {
    EmbeddingSet out;
    out.dim = int(X.cols());
    Eigen::Index row = 0;
    for (const auto& [id, v] : like.vectors) out.vectors[id] = X.row(row++);
    return out;
}

}  // namespace

EmbeddingSet reduce_embeddings(const EmbeddingSet& set, const std::string& reducer,
                               int target_dim) {
    validate_embeddings(set);
    if (target_dim < 1) throw ValidationError("target_dim must be >= 1");

    if (reducer == "identity") {
        if (set.dim != target_dim)
            throw ValidationError("identity reducer needs dim == target_dim");
        return set;
    }

    if (reducer == "pca") {
        const std::size_t n = set.size();
        if (n < std::size_t(target_dim) + 1)
            throw ValidationError("pca needs at least target_dim+1 vectors, got " +
                                  std::to_string(n));
        if (set.dim < target_dim)
            throw ValidationError("pca cannot raise dimensionality");

        Eigen::MatrixXd X = stack_vectors(set);
        const Eigen::RowVectorXd mean = X.colwise().mean();
        X.rowwise() -= mean;
        const Eigen::MatrixXd cov = X.transpose() * X / double(n - 1);
        if (cov.trace() <= 0.0)
            throw ValidationError(
                "degenerate embeddings: zero variance (all vectors identical)");

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success)
            throw ValidationError("eigendecomposition failed");

        // Eigen returns ascending eigenvalues; take the top components in
        // descending order and pin each sign.
        Eigen::MatrixXd W(set.dim, target_dim);
        for (int k = 0; k < target_dim; ++k) {
            Eigen::VectorXd comp = eig.eigenvectors().col(set.dim - 1 - k);
            Eigen::Index imax = 0;
            comp.cwiseAbs().maxCoeff(&imax);
            if (comp(imax) < 0.0) comp = -comp;
            W.col(k) = comp;
        }
        return from_matrix(set, X * W);
    }

    if (reducer.rfind("external:", 0) == 0) {
        const std::string cmd = reducer.substr(9);
        if (cmd.empty()) throw ValidationError("empty external reducer command");
        TempDir tmp("reduce");
        const auto in_path = tmp.path() / "in.mtx";
        const auto out_path = tmp.path() / "out.mtx";
        std::vector<std::string> order;
        order.reserve(set.size());
        for (const auto& [id, v] : set.vectors) order.push_back(id);
        write_embeddings(set, order, in_path);
        run_command(cmd + " --in " + shell_quote(in_path.string()) + " --out " +
                    shell_quote(out_path.string()) + " --dim " +
                    std::to_string(target_dim));
        const MatrixF reduced = read_matrix(out_path);
        if (std::size_t(reduced.rows()) != set.size() || reduced.cols() != target_dim)
            throw ValidationError("external reducer returned wrong shape");
        return from_matrix(set, reduced.cast<double>());
    }

    throw ValidationError("unknown reducer '" + reducer + "'");
}

CompactnessResult compactness_score(const EmbeddingSet& reduced,
                                    const std::string& group_id,
                                    const std::string& reducer_id) {
    validate_embeddings(reduced);
    const std::size_t n = reduced.size();
    if (n < 2)
        throw ValidationError("compactness needs at least 2 vectors, got " +
                              std::to_string(n));

    Eigen::MatrixXd X = stack_vectors(reduced);
    const Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    const Eigen::MatrixXd cov = X.transpose() * X / double(n - 1);

    CompactnessResult result;
    result.group_id = group_id;
    result.n_utts = n;
    result.reducer_id = reducer_id;
    // det of a PSD matrix; rounding can leave a tiny negative.
    result.score = std::max(cov.determinant(), 0.0);
    return result;
}

CorpusManifest filter_groups_by_compactness(const CorpusManifest& manifest,
                                            double lo, double hi) {
    if (lo > hi) throw ValidationError("compactness window is inverted");
    std::map<std::string, double> group_score;
    for (const auto& r : manifest.records) {
        if (!r.compactness)
            throw ValidationError("record '" + r.utterance_id +
                                  "' has no compactness score");
        auto [it, fresh] = group_score.emplace(r.group_id, *r.compactness);
        if (!fresh && it->second != *r.compactness)
            throw ValidationError("group '" + r.group_id +
                                  "' has inconsistent compactness scores");
    }

    CorpusManifest out;
    out.metadata = manifest.metadata;
    for (const auto& r : manifest.records) {
        const double s = group_score[r.group_id];
        if (s >= lo && s <= hi) out.records.push_back(r);
    }
    out.append_stage("compactness_filter");
    out.metadata["compactness_window"] = format_g9(lo) + "," + format_g9(hi);
    return out;
}

CorpusManifest group_to_speakers(const CorpusManifest& manifest) {
    CorpusManifest out;
    out.metadata = manifest.metadata;
    out.records = manifest.records;
    for (auto& r : out.records) {
        if (r.channel_id.empty())
            throw ValidationError("record '" + r.utterance_id +
                                  "' has no channel_id");
        r.speaker_id = r.channel_id;
    }
    out.append_stage("speaker_grouping");
    return out;
}

EmbeddingSet read_embeddings(const std::filesystem::path& matrix_path) {
    const MatrixF m = read_matrix(matrix_path);
    const auto ids_path = matrix_path.string() + ".ids";
    std::ifstream in(ids_path);
    if (!in) throw IoError("cannot open embedding id sidecar: " + ids_path);
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ids.push_back(line);
    if (ids.size() != std::size_t(m.rows()))
        throw ValidationError("embedding id sidecar has " +
                              std::to_string(ids.size()) + " ids for " +
                              std::to_string(m.rows()) + " rows: " + ids_path);

    EmbeddingSet set;
    set.dim = int(m.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (set.vectors.count(ids[i]))
            throw ValidationError("duplicate embedding id '" + ids[i] + "'");
        set.vectors[ids[i]] = m.row(Eigen::Index(i)).cast<double>();
    }
    return set;
}

void write_embeddings(const EmbeddingSet& set,
                      const std::vector<std::string>& row_order,
                      const std::filesystem::path& matrix_path) {
    validate_embeddings(set);
    if (row_order.size() != set.size())
        throw ValidationError("row order size does not match embedding set");
    MatrixF m(row_order.size(), set.dim);
    for (std::size_t i = 0; i < row_order.size(); ++i) {
        auto it = set.vectors.find(row_order[i]);
        if (it == set.vectors.end())
            throw ValidationError("row order names unknown id '" + row_order[i] + "'");
        m.row(Eigen::Index(i)) = it->second.transpose().cast<float>();
    }
    write_matrix(m, matrix_path);
    const auto ids_path = matrix_path.string() + ".ids";
    std::ofstream out(ids_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create embedding id sidecar: " + ids_path);
    for (const auto& id : row_order) out << id << '\n';
}

}  // namespace darkselect
