#include "darkselect/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "darkselect/error.hpp"
#include "darkselect/manifest_io.hpp"
#include "darkselect/matrix_io.hpp"
#include "darkselect/prng.hpp"
#include "darkselect/subprocess.hpp"
#include "darkselect/wav_io.hpp"

namespace darkselect {

namespace {

void validate_score_value(const std::string& speaker, double v) {
    if (!std::isfinite(v) || v < 1.0 || v > 5.0)
        throw ValidationError("pseudo MOS for speaker '" + speaker +
                              "' must be in [1,5], got " + std::to_string(v));
}

std::string format_g17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

SpeakerScoreTable read_score_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open score table: " + path.string());
    SpeakerScoreTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected speaker<TAB>score");
        const std::string speaker = line.substr(0, tab);
        char* end = nullptr;
        const double score = std::strtod(line.c_str() + tab + 1, &end);
        if (end == line.c_str() + tab + 1)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": unparseable score");
        validate_score_value(speaker, score);
        if (!table.scores.emplace(speaker, score).second)
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": duplicate speaker '" + speaker + "'");
    }
    return table;
}

void write_score_table(const SpeakerScoreTable& table,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create score table: " + path.string());
    for (const auto& [speaker, score] : table.scores)
        out << speaker << '\t' << format_g9(score) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

double RegressorModel::predict(const Eigen::VectorXd& pooled) const {
    if (pooled.size() != weights.size())
        throw ValidationError("feature dim " + std::to_string(pooled.size()) +
                              " does not match model dim " +
                              std::to_string(weights.size()));
    double y = bias;
    for (Eigen::Index j = 0; j < weights.size(); ++j)
        if (feature_std(j) > 0.0)
            y += weights(j) * (pooled(j) - feature_mean(j)) / feature_std(j);
    return y;
}

void write_regressor(const RegressorModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create regressor file: " + path.string());
    auto array = [](const Eigen::VectorXd& v) {
        std::string s = "[";
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += format_g17(v(i));
        }
        return s + "]";
    };
    // %.17g keeps doubles exact across a write/read cycle, so resumed runs
    // predict identically.
    out << "{\"kind\":\"" << model.kind << "\",\"lambda\":" << format_g17(model.lambda)
        << ",\"bias\":" << format_g17(model.bias)
        << ",\"weights\":" << array(model.weights)
        << ",\"feature_mean\":" << array(model.feature_mean)
        << ",\"feature_std\":" << array(model.feature_std) << "}\n";
}

RegressorModel read_regressor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open regressor file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad regressor file " + path.string() + ": " + e.what());
    }
    RegressorModel m;
    m.kind = j.at("kind").get<std::string>();
    m.lambda = j.at("lambda").get<double>();
    m.bias = j.at("bias").get<double>();
    auto vec = [&](const char* key) {
        const auto& arr = j.at(key);
        Eigen::VectorXd v(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
        return v;
    };
    m.weights = vec("weights");
    m.feature_mean = vec("feature_mean");
    m.feature_std = vec("feature_std");
    if (m.feature_mean.size() != m.weights.size() ||
        m.feature_std.size() != m.weights.size())
        throw ValidationError("inconsistent regressor vector sizes");
    return m;
}

SelectionMethod parse_method(const std::string& name) {
    if (name == "unselected") return SelectionMethod::kUnselected;
    if (name == "acoustic-quality") return SelectionMethod::kAcousticQuality;
    if (name == "ours-utt") return SelectionMethod::kOursUtt;
    if (name == "ours-spk") return SelectionMethod::kOursSpk;
    throw ValidationError("unknown selection method '" + name + "'");
}

std::string method_name(SelectionMethod m) {
    switch (m) {
        case SelectionMethod::kUnselected: return "unselected";
        case SelectionMethod::kAcousticQuality: return "acoustic-quality";
        case SelectionMethod::kOursUtt: return "ours-utt";
        case SelectionMethod::kOursSpk: return "ours-spk";
    }
    throw ValidationError("bad selection method value");
}

void validate_selection_config(const SelectionConfig& config) {
    if (config.compact_lo > config.compact_hi)
        throw ValidationError("compactness window is inverted");
    if (config.target_size && *config.target_size < 1)
        throw ValidationError("target_size must be >= 1");
    if (config.ridge_lambda <= 0.0)
        throw ValidationError("ridge lambda must be > 0");
    if (config.feature_source != "matrix" && config.feature_source != "builtin")
        throw ValidationError("unknown feature_source '" + config.feature_source + "'");
}

SpeakerScoreTable run_scorer(const std::string& command,
                             const CorpusManifest& manifest,
                             const std::string& sentence_set_id) {
    if (command.empty()) throw ValidationError("no scorer command configured");
    const auto speakers = speaker_ids(manifest);
    if (speakers.empty())
        throw ValidationError("manifest has no speakers to score");

    TempDir tmp("scorer");
    const auto manifest_path = tmp.path() / "manifest.jsonl";
    const auto out_path = tmp.path() / "scores.tsv";
    write_manifest(manifest, manifest_path);
    run_command(command + " --manifest " + shell_quote(manifest_path.string()) +
                " --sentences " + shell_quote(sentence_set_id) + " --out " +
                shell_quote(out_path.string()));

    SpeakerScoreTable table = read_score_table(out_path);
    table.sentence_set_id = sentence_set_id;
    table.scorer_id = command;
    for (const auto& s : speakers)
        if (!table.scores.count(s))
            throw ValidationError("scorer omitted speaker '" + s + "'");
    if (table.scores.size() != speakers.size())
        for (const auto& [s, v] : table.scores)
            if (std::find(speakers.begin(), speakers.end(), s) == speakers.end())
                throw ValidationError("scorer returned unknown speaker '" + s + "'");
    return table;
}

SpeakerScoreTable mock_speaker_scorer(const CorpusManifest& manifest,
                                      const std::string& selected_tag,
                                      std::uint64_t seed, double noise_sigma,
                                      const std::string& sentence_set_id) {
    std::map<std::string, std::pair<double, std::size_t>> tagged, all;
    for (const auto& r : manifest.records) {
        if (r.speaker_id.empty())
            throw ValidationError("record '" + r.utterance_id + "' has no speaker_id");
        if (!r.planted_quality)
            throw ValidationError("record '" + r.utterance_id +
                                  "' has no planted_quality");
        auto& a = all[r.speaker_id];
        a.first += *r.planted_quality;
        a.second += 1;
        if (r.has_tag(selected_tag)) {
            auto& t = tagged[r.speaker_id];
            t.first += *r.planted_quality;
            t.second += 1;
        }
    }

    SpeakerScoreTable table;
    table.sentence_set_id = sentence_set_id;
    table.scorer_id = "mock";
    for (const auto& [speaker, full] : all) {
        const auto it = tagged.find(speaker);
        const auto& basis = it != tagged.end() ? it->second : full;
        const double mean_q = basis.first / double(basis.second);
        Prng rng = keyed_prng(seed, speaker);
        const double mos =
            std::clamp(1.0 + 4.0 * mean_q + noise_sigma * rng.gaussian(), 1.0, 5.0);
        table.scores[speaker] = mos;
    }
    return table;
}

Eigen::VectorXd pool_features(const Eigen::MatrixXd& frames) {
    if (frames.rows() < 1) throw ValidationError("pool_features on empty matrix");
    const Eigen::Index d = frames.cols();
    Eigen::VectorXd pooled(2 * d);
    const Eigen::VectorXd mean = frames.colwise().mean();
    pooled.head(d) = mean;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var =
            (frames.col(j).array() - mean(j)).square().sum() / double(frames.rows());
        pooled(d + j) = std::sqrt(var);
    }
    return pooled;
}

RegressorModel train_regressor(const std::vector<Eigen::VectorXd>& pooled_features,
                               const std::vector<std::string>& row_speakers,
                               const SpeakerScoreTable& targets, double lambda) {
    if (lambda <= 0.0) throw ValidationError("ridge lambda must be > 0");
    const std::size_t n = pooled_features.size();
    if (n < 2) throw ValidationError("regressor needs at least 2 training rows");
    if (row_speakers.size() != n)
        throw ValidationError("row speaker list does not match feature rows");
    const Eigen::Index d = pooled_features[0].size();

    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (pooled_features[i].size() != d)
            throw ValidationError("inconsistent pooled feature dims");
        X.row(Eigen::Index(i)) = pooled_features[i].transpose();
        const auto it = targets.scores.find(row_speakers[i]);
        if (it == targets.scores.end())
            throw ValidationError("no pseudo MOS target for speaker '" +
                                  row_speakers[i] + "'");
        y(Eigen::Index(i)) = it->second;
    }

    RegressorModel model;
    model.lambda = lambda;
    model.feature_mean = X.colwise().mean();
    model.feature_std.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var =
            (X.col(j).array() - model.feature_mean(j)).square().sum() / double(n);
        model.feature_std(j) = std::sqrt(var);
    }

    Eigen::MatrixXd Xs(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (model.feature_std(j) > 0.0)
            Xs.col(j) = (X.col(j).array() - model.feature_mean(j)) / model.feature_std(j);
        else
            Xs.col(j).setZero();
    }

    model.bias = y.mean();
    const Eigen::VectorXd yc = y.array() - model.bias;
    const Eigen::MatrixXd A =
        Xs.transpose() * Xs + lambda * Eigen::MatrixXd::Identity(d, d);
    model.weights = A.ldlt().solve(Xs.transpose() * yc);
    if (!model.weights.allFinite())
        throw ValidationError("ridge solve produced non-finite weights");
    return model;
}

namespace {

std::size_t resolve_workers(std::size_t requested) {
    std::size_t w = requested;
    if (w == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        w = std::min<std::size_t>(hw ? hw : 1, 4);
    }
    if (const char* env = std::getenv("DARKSELECT_WORKERS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) w = std::min<std::size_t>(w, std::size_t(cap));
    }
    return std::max<std::size_t>(w, 1);
}

}  // namespace

Eigen::VectorXd pooled_features_for_record(const UtteranceRecord& r,
                                           const std::string& feature_source) {
    if (feature_source == "matrix") {
        if (r.feature_path.empty())
            throw ValidationError("record '" + r.utterance_id +
                                  "' has no feature_path");
        return pool_features(read_matrix(r.feature_path).cast<double>());
    }
    if (feature_source != "builtin")
        throw ValidationError("unknown feature_source '" + feature_source + "'");
    if (r.audio_path.empty())
        throw ValidationError("record '" + r.utterance_id + "' has no audio_path");
    const auto audio = read_wav(r.audio_path);
    return pool_features(builtin_features(audio.samples, audio.sample_rate));
}

CorpusManifest predict_utterance_scores(const RegressorModel& model,
                                        const CorpusManifest& manifest,
                                        const std::string& feature_source,
                                        std::size_t workers) {
    CorpusManifest out = manifest;
    const std::size_t n = out.records.size();
    const std::size_t n_workers = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));

    std::vector<double> scores(n);
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;

    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                scores[i] = model.predict(
                    pooled_features_for_record(out.records[i], feature_source));
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (n_workers <= 1 || n < 2) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t i = 0; i < n; ++i) out.records[i].utt_score = scores[i];
    out.append_stage("utt_scoring");
    return out;
}

Eigen::MatrixXd builtin_features(const std::vector<float>& samples,
                                 int sample_rate) {
    if (samples.empty()) throw ValidationError("builtin_features on empty signal");
    const std::size_t frame_len =
        std::max<std::size_t>(1, std::size_t(sample_rate) * 25 / 1000);
    const std::size_t n_frames = std::max<std::size_t>(samples.size() / frame_len, 1);

    Eigen::MatrixXd feats(n_frames, 4);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t lo = f * frame_len;
        const std::size_t hi = std::min(samples.size(), lo + frame_len);
        double energy = 0.0, lag1 = 0.0, absdiff = 0.0;
        int crossings = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = samples[i];
            energy += x * x;
            if (i > lo) {
                const double px = samples[i - 1];
                lag1 += x * px;
                absdiff += std::abs(x - px);
                if ((x >= 0) != (px >= 0)) ++crossings;
            }
        }
        const double len = double(hi - lo);
        feats(f, 0) = std::log(energy / len + 1e-10);
        feats(f, 1) = crossings / std::max(len - 1, 1.0);
        feats(f, 2) = lag1 / (energy + 1e-10);
        feats(f, 3) = absdiff / std::max(len - 1, 1.0);
    }
    return feats;
}

double threshold_for_budget(const std::vector<double>& scores,
                            std::size_t target_size) {
    if (scores.empty()) throw ValidationError("threshold_for_budget on empty scores");
    if (target_size < 1 || target_size > scores.size())
        throw ValidationError("target_size " + std::to_string(target_size) +
                              " outside [1, " + std::to_string(scores.size()) + "]");
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (target_size - 1), sorted.end(),
                     std::greater<double>());
    return sorted[target_size - 1];
}

namespace {

CorpusManifest subset_tagged(const CorpusManifest& manifest,
                             const std::vector<bool>& keep, const std::string& tag) {
    CorpusManifest out;
    out.metadata = manifest.metadata;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        if (!keep[i]) continue;
        out.records.push_back(manifest.records[i]);
        out.records.back().selected.insert(tag);
    }
    out.append_stage("select:" + tag);
    out.metadata["selection_method"] = tag;
    return out;
}

}  // namespace

CorpusManifest select(const CorpusManifest& manifest, const SelectionConfig& config,
                      const SpeakerScoreTable* speaker_scores) {
    validate_selection_config(config);
    const std::string tag = method_name(config.method);
    const std::size_t n = manifest.records.size();
    std::vector<bool> keep(n, false);

    switch (config.method) {
        case SelectionMethod::kUnselected: {
            keep.assign(n, true);
            break;
        }
        case SelectionMethod::kAcousticQuality: {
            for (std::size_t i = 0; i < n; ++i) {
                const auto& r = manifest.records[i];
                if (r.acoustic_scores.empty())
                    throw ValidationError("record '" + r.utterance_id +
                                          "' has no acoustic scores");
                bool ok = true;
                for (const auto& [name, v] : r.acoustic_scores)
                    if (!(v > config.acoustic_threshold)) ok = false;
                keep[i] = ok;
            }
            break;
        }
        case SelectionMethod::kOursUtt: {
            if (!config.target_size)
                throw ValidationError("ours-utt requires target_size");
            const std::size_t budget = *config.target_size;
            if (budget > n)
                throw ValidationError("target_size exceeds manifest size");
            std::vector<std::size_t> order(n);
            std::iota(order.begin(), order.end(), 0);
            for (const auto& r : manifest.records)
                if (!r.utt_score)
                    throw ValidationError("record '" + r.utterance_id +
                                          "' has no utt_score");
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double sa = *manifest.records[a].utt_score;
                const double sb = *manifest.records[b].utt_score;
                if (sa != sb) return sa > sb;
                return manifest.records[a].utterance_id <
                       manifest.records[b].utterance_id;
            });
            for (std::size_t k = 0; k < budget; ++k) keep[order[k]] = true;
            break;
        }
        case SelectionMethod::kOursSpk: {
            if (!config.target_size)
                throw ValidationError("ours-spk requires target_size");
            if (!speaker_scores)
                throw ValidationError("ours-spk requires a speaker score table");
            std::map<std::string, std::size_t> sizes;
            for (const auto& r : manifest.records) {
                if (r.speaker_id.empty())
                    throw ValidationError("record '" + r.utterance_id +
                                          "' has no speaker_id");
                sizes[r.speaker_id] += 1;
            }
            std::vector<std::pair<std::string, double>> ranked;
            for (const auto& [speaker, count] : sizes) {
                const auto it = speaker_scores->scores.find(speaker);
                if (it == speaker_scores->scores.end())
                    throw ValidationError("no pseudo MOS for speaker '" + speaker + "'");
                ranked.emplace_back(speaker, it->second);
            }
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
            });
            std::set<std::string> chosen;
            std::size_t total = 0;
            for (const auto& [speaker, mos] : ranked) {
                if (total + sizes[speaker] > *config.target_size) break;
                chosen.insert(speaker);
                total += sizes[speaker];
            }
            for (std::size_t i = 0; i < n; ++i)
                keep[i] = chosen.count(manifest.records[i].speaker_id) > 0;
            break;
        }
    }
    return subset_tagged(manifest, keep, tag);
}

}  // namespace darkselect
