#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "darkselect/selection.hpp"
#include "darkselect/speaker_screen.hpp"

namespace darkselect {

// Total Euclidean MST edge weight over speaker embeddings; higher means the
// high-quality speakers spread wider in speaker space.
struct DiversityResult {
    double total_weight = 0.0;  // w
    std::size_t n_speakers = 0;
    struct Edge {
        std::string speaker_a;  // lexicographically smaller endpoint
        std::string speaker_b;
        double distance = 0.0;
    };
    std::vector<Edge> edges;  // n_speakers - 1 edges (0 for n <= 1)
};

struct CorrelationResult {
    double r = 0.0;
    std::size_t n_points = 0;
};

// The floor of a reference (studio-quality) corpus: its minimum per-speaker
// pseudo MOS.
double hq_threshold(const SpeakerScoreTable& reference_scores);

struct HqRow {
    std::size_t hq_count = 0;
    std::size_t total = 0;
    double ratio_pct = 0.0;  // 100 * hq / total, 0 when total is 0
};

struct HqCounts {
    HqRow seen;
    HqRow unseen;
};

// High quality means strictly above the threshold. seen_set must be a subset
// of the scored speakers.
HqCounts count_hq(const SpeakerScoreTable& scores, double threshold,
                  const std::set<std::string>& seen_set);

// "count / total (pct%)" with a one-decimal percentage.
std::string format_hq_cell(const HqRow& row);

// counts[i] = how many scores are strictly greater than grid[i]; the grid
// must be sorted ascending, so counts are non-increasing.
std::vector<std::size_t> cumulative_histogram(const std::vector<double>& scores,
                                              const std::vector<double>& grid);

// Prim's algorithm over the dense pairwise distance matrix; ties broken by
// lexicographic speaker-id pair so results are reproducible.
DiversityResult mst_cost(const EmbeddingSet& points);

// Standard product-moment coefficient. Zero variance in either argument is
// undefined and raises rather than silently returning 0.
CorrelationResult pearson(const std::vector<double>& x,
                          const std::vector<double>& y);

// Everything the report needs about one completed selection run.
struct MethodArtifacts {
    std::string method;
    std::filesystem::path final_manifest;   // tagged full manifest
    std::filesystem::path final_scores;     // per-speaker pseudo MOS table
};

struct ReportInputs {
    std::vector<MethodArtifacts> methods;
    std::filesystem::path reference_scores;        // hq threshold source
    std::filesystem::path embedding_dir;           // per-group MatrixFiles, may be empty
    std::filesystem::path actual_scores;           // optional, for correlation
    std::vector<double> histogram_grid;            // defaults to 1.0..5.0 step 0.1
};

// Renders report.txt plus machine-readable TSVs (hq_counts.tsv,
// diversity.tsv, correlation.tsv, cumulative_hist.tsv) into out_dir.
// Deterministic: equal inputs give byte-identical files.
void write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

// Collects artifacts from loop run directories (one method per directory).
ReportInputs gather_report_inputs(const std::vector<std::filesystem::path>& run_dirs);

}  // namespace darkselect
