#include "darkselect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "darkselect/error.hpp"
#include "darkselect/loop.hpp"
#include "darkselect/manifest_io.hpp"

namespace darkselect {

double hq_threshold(const SpeakerScoreTable& reference_scores) {
    if (reference_scores.scores.empty())
        throw ValidationError("reference score table is empty");
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& [speaker, score] : reference_scores.scores)
        lo = std::min(lo, score);
    return lo;
}

HqCounts count_hq(const SpeakerScoreTable& scores, double threshold,
                  const std::set<std::string>& seen_set) {
    for (const auto& s : seen_set)
        if (!scores.scores.count(s))
            throw ValidationError("seen speaker '" + s + "' is not scored");

    HqCounts counts;
    for (const auto& [speaker, score] : scores.scores) {
        HqRow& row = seen_set.count(speaker) ? counts.seen : counts.unseen;
        row.total += 1;
        if (score > threshold) row.hq_count += 1;
    }
    for (HqRow* row : {&counts.seen, &counts.unseen})
        row->ratio_pct =
            row->total ? 100.0 * double(row->hq_count) / double(row->total) : 0.0;
    return counts;
}

std::string format_hq_cell(const HqRow& row) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu / %zu (%.1f%%)", row.hq_count, row.total,
                  row.ratio_pct);
    return buf;
}

std::vector<std::size_t> cumulative_histogram(const std::vector<double>& scores,
                                              const std::vector<double>& grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] < grid[i - 1])
            throw ValidationError("histogram grid must be sorted ascending");
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> counts;
    counts.reserve(grid.size());
    for (double g : grid) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), g);
        counts.push_back(std::size_t(sorted.end() - it));
    }
    return counts;
}

DiversityResult mst_cost(const EmbeddingSet& points) {
    validate_embeddings(points);
    DiversityResult result;
    result.n_speakers = points.size();
    if (points.size() <= 1) return result;

    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> vecs;
    ids.reserve(points.size());
    for (const auto& [id, v] : points.vectors) {
        ids.push_back(id);
        vecs.push_back(v);
    }
    const std::size_t n = ids.size();
    auto dist = [&](std::size_t a, std::size_t b) {
        return (vecs[a] - vecs[b]).norm();
    };

    // Prim from the lexicographically first speaker (map order).
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    in_tree[0] = true;
    for (std::size_t v = 1; v < n; ++v) best[v] = dist(0, v);

    auto edge_key = [&](std::size_t a, std::size_t b) {
        return ids[a] < ids[b] ? std::pair(ids[a], ids[b]) : std::pair(ids[b], ids[a]);
    };

    for (std::size_t step = 1; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            if (pick == n || best[v] < best[pick] ||
                (best[v] == best[pick] &&
                 edge_key(from[v], v) < edge_key(from[pick], pick)))
                pick = v;
        }
        in_tree[pick] = true;
        const auto [a, b] = edge_key(from[pick], pick);
        result.edges.push_back({a, b, best[pick]});
        result.total_weight += best[pick];
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) continue;
            const double d = dist(pick, v);
            if (d < best[v] ||
                (d == best[v] && edge_key(pick, v) < edge_key(from[v], v))) {
                best[v] = d;
                from[v] = pick;
            }
        }
    }
    return result;
}

CorrelationResult pearson(const std::vector<double>& x,
                          const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ValidationError("pearson needs equal-length inputs");
    const std::size_t n = x.size();
    if (n < 2) throw ValidationError("pearson needs at least 2 points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("correlation undefined: zero variance input");

    CorrelationResult result;
    result.n_points = n;
    result.r = sxy / std::sqrt(sxx * syy);
    return result;
}

namespace {

int method_rank(const std::string& name) {
    if (name == "unselected") return 0;
    if (name == "acoustic-quality") return 1;
    if (name == "ours-utt") return 2;
    if (name == "ours-spk") return 3;
    return 4;
}

// Per-speaker mean embedding over the speakers' utterances, read from the
// per-group embedding files.
EmbeddingSet speaker_mean_embeddings(const CorpusManifest& manifest,
                                     const std::filesystem::path& embedding_dir) {
    std::map<std::string, EmbeddingSet> by_group;
    std::map<std::string, std::pair<Eigen::VectorXd, std::size_t>> sums;
    int dim = 0;
    for (const auto& r : manifest.records) {
        if (r.speaker_id.empty()) continue;
        auto it = by_group.find(r.group_id);
        if (it == by_group.end()) {
            const auto path = embedding_dir / (r.group_id + ".mtx");
            it = by_group.emplace(r.group_id, read_embeddings(path)).first;
        }
        const auto vit = it->second.vectors.find(r.utterance_id);
        if (vit == it->second.vectors.end())
            throw ValidationError("no embedding for utterance '" + r.utterance_id +
                                  "' in group '" + r.group_id + "'");
        if (dim != 0 && it->second.dim != dim)
            throw ValidationError("embedding files disagree on dimension (group '" +
                                  r.group_id + "')");
        dim = it->second.dim;
        auto [sit, fresh] = sums.emplace(
            r.speaker_id, std::pair(Eigen::VectorXd::Zero(dim).eval(), std::size_t(0)));
        sit->second.first += vit->second;
        sit->second.second += 1;
    }
    EmbeddingSet out;
    out.dim = dim;
    for (const auto& [speaker, acc] : sums)
        out.vectors[speaker] = acc.first / double(acc.second);
    return out;
}

}  // namespace

ReportInputs gather_report_inputs(const std::vector<std::filesystem::path>& run_dirs) {
    ReportInputs inputs;
    for (const auto& dir : run_dirs) {
        const auto config_path = dir / artifacts::kConfig;
        std::ifstream in(config_path);
        if (!in) throw IoError("missing artifact: " + config_path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("bad config echo " + config_path.string() + ": " +
                                  e.what());
        }
        MethodArtifacts m;
        m.method = j.at("method").get<std::string>();
        m.final_manifest = dir / artifacts::kFinal;
        m.final_scores = dir / artifacts::kFinalScores;
        inputs.methods.push_back(std::move(m));
    }
    std::sort(inputs.methods.begin(), inputs.methods.end(),
              [](const MethodArtifacts& a, const MethodArtifacts& b) {
                  if (method_rank(a.method) != method_rank(b.method))
                      return method_rank(a.method) < method_rank(b.method);
                  return a.method < b.method;
              });
    return inputs;
}

void write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir) {
    if (inputs.methods.empty()) throw ValidationError("no method runs to report");

    std::vector<std::string> missing;
    auto need = [&](const std::filesystem::path& p) {
        if (!p.empty() && !std::filesystem::exists(p)) missing.push_back(p.string());
    };
    for (const auto& m : inputs.methods) {
        need(m.final_manifest);
        need(m.final_scores);
    }
    need(inputs.reference_scores);
    need(inputs.actual_scores);
    if (!missing.empty()) {
        std::string msg = "missing report inputs:";
        for (const auto& name : missing) msg += " " + name;
        throw IoError(msg);
    }
    if (inputs.reference_scores.empty())
        throw ValidationError("report requires a reference score table");

    const double threshold = hq_threshold(read_score_table(inputs.reference_scores));
    std::vector<double> grid = inputs.histogram_grid;
    if (grid.empty())
        for (int i = 0; i <= 40; ++i) grid.push_back(1.0 + 0.1 * i);

    std::filesystem::create_directories(out_dir);
    std::ofstream report(out_dir / "report.txt", std::ios::binary | std::ios::trunc);
    std::ofstream hq_tsv(out_dir / "hq_counts.tsv", std::ios::binary | std::ios::trunc);
    std::ofstream div_tsv(out_dir / "diversity.tsv", std::ios::binary | std::ios::trunc);
    std::ofstream corr_tsv(out_dir / "correlation.tsv",
                           std::ios::binary | std::ios::trunc);
    std::ofstream hist_tsv(out_dir / "cumulative_hist.tsv",
                           std::ios::binary | std::ios::trunc);
    if (!report || !hq_tsv || !div_tsv || !corr_tsv || !hist_tsv)
        throw IoError("cannot create report files in " + out_dir.string());

    report << "corpus selection report\n";
    report << "high-quality threshold (reference minimum): " << format_g9(threshold)
           << "\n\n";
    hq_tsv << "method\tseen_hq\tseen_total\tseen_pct\tunseen_hq\tunseen_total\tunseen_pct\n";
    div_tsv << "method\tw\tn_hq_speakers\n";
    corr_tsv << "method\tr\tn_points\n";
    hist_tsv << "method";
    for (double g : grid) hist_tsv << '\t' << format_g9(g);
    hist_tsv << '\n';

    for (const auto& m : inputs.methods) {
        const CorpusManifest manifest = read_manifest(m.final_manifest);
        const SpeakerScoreTable scores = read_score_table(m.final_scores);

        std::set<std::string> seen;
        for (const auto& r : manifest.records)
            if (r.has_tag(m.method)) seen.insert(r.speaker_id);

        const HqCounts counts = count_hq(scores, threshold, seen);
        report << "== " << m.method << " ==\n";
        report << "  seen:   " << format_hq_cell(counts.seen) << "\n";
        report << "  unseen: " << format_hq_cell(counts.unseen) << "\n";

        char pct1[32], pct2[32];
        std::snprintf(pct1, sizeof(pct1), "%.1f", counts.seen.ratio_pct);
        std::snprintf(pct2, sizeof(pct2), "%.1f", counts.unseen.ratio_pct);
        hq_tsv << m.method << '\t' << counts.seen.hq_count << '\t' << counts.seen.total
               << '\t' << pct1 << '\t' << counts.unseen.hq_count << '\t'
               << counts.unseen.total << '\t' << pct2 << '\n';

        std::vector<double> all_scores;
        for (const auto& [speaker, score] : scores.scores)
            all_scores.push_back(score);
        const auto hist = cumulative_histogram(all_scores, grid);
        hist_tsv << m.method;
        for (std::size_t c : hist) hist_tsv << '\t' << c;
        hist_tsv << '\n';

        if (!inputs.embedding_dir.empty()) {
            EmbeddingSet means = speaker_mean_embeddings(manifest, inputs.embedding_dir);
            EmbeddingSet hq;
            hq.dim = means.dim;
            for (const auto& [speaker, v] : means.vectors) {
                const auto it = scores.scores.find(speaker);
                if (it != scores.scores.end() && it->second > threshold)
                    hq.vectors.emplace(speaker, v);
            }
            const DiversityResult div = mst_cost(hq);
            report << "  diversity w: " << format_g9(div.total_weight) << " over "
                   << div.n_speakers << " high-quality speakers\n";
            div_tsv << m.method << '\t' << format_g9(div.total_weight) << '\t'
                    << div.n_speakers << '\n';
        }

        // Correlation of pseudo MOS against actual MOS when a table is given,
        // else against planted speaker quality on synthetic corpora.
        std::vector<double> xs, ys;
        if (!inputs.actual_scores.empty()) {
            const SpeakerScoreTable actual = read_score_table(inputs.actual_scores);
            for (const auto& [speaker, score] : scores.scores) {
                const auto it = actual.scores.find(speaker);
                if (it != actual.scores.end()) {
                    xs.push_back(score);
                    ys.push_back(it->second);
                }
            }
        } else {
            std::map<std::string, std::pair<double, std::size_t>> planted;
            bool all_planted = true;
            for (const auto& r : manifest.records) {
                if (!r.planted_quality) {
                    all_planted = false;
                    break;
                }
                auto& acc = planted[r.speaker_id];
                acc.first += *r.planted_quality;
                acc.second += 1;
            }
            if (all_planted) {
                for (const auto& [speaker, acc] : planted) {
                    const auto it = scores.scores.find(speaker);
                    if (it != scores.scores.end()) {
                        xs.push_back(it->second);
                        ys.push_back(acc.first / double(acc.second));
                    }
                }
            }
        }
        if (xs.size() >= 2) {
            try {
                const CorrelationResult corr = pearson(xs, ys);
                char rbuf[32];
                std::snprintf(rbuf, sizeof(rbuf), "%.4f", corr.r);
                report << "  pseudo-vs-reference correlation r: " << rbuf << " (n="
                       << corr.n_points << ")\n";
                corr_tsv << m.method << '\t' << rbuf << '\t' << corr.n_points << '\n';
            } catch (const ValidationError&) {
                report << "  pseudo-vs-reference correlation r: undefined "
                          "(zero variance)\n";
                corr_tsv << m.method << "\tundefined\t" << xs.size() << '\n';
            }
        }
        report << '\n';
    }
}

}  // namespace darkselect
