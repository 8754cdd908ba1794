#pragma once

#include <filesystem>
#include <string>

#include "darkselect/record.hpp"

namespace darkselect {

// Manifest file format: UTF-8, one flat JSON object per line, keys emitted in
// a fixed canonical order and floats with 9 significant digits, so two writes
// of equal manifests are byte-identical and stage-to-stage diffs are
// reviewable. An optional first line {"manifest_meta":1, ...} carries the
// metadata map. Absent optional fields are omitted entirely.
//
// Flattening rules: acoustic scores appear as "score.<name>" keys; selection
// tags as one comma-separated sorted string under "selected"; a ctc_score of
// -infinity (unemittable slice) is the JSON string "-inf".

CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CorpusManifest& m, const std::filesystem::path& path);

// Single-record codecs, exposed for tests and tooling.
std::string record_to_line(const UtteranceRecord& r);
UtteranceRecord record_from_line(const std::string& line);

// Canonical float formatting used across all text artifacts ("%.9g").
std::string format_g9(double v);

}  // namespace darkselect
