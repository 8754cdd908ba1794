#include "darkselect/record.hpp"

#include <cmath>
#include <unordered_set>

#include "darkselect/error.hpp"

namespace darkselect {

void CorpusManifest::append_stage(const std::string& stage) {
    auto it = metadata.find("stages");
    if (it == metadata.end())
        metadata["stages"] = stage;
    else
        it->second += ">" + stage;
}

namespace {
std::string prefix(const std::string& where) {
    return where.empty() ? std::string() : where + ": ";
}
}  // namespace

void validate_record(const UtteranceRecord& r, const std::string& where) {
    const std::string at = prefix(where) + "record '" + r.utterance_id + "': ";
    if (r.utterance_id.empty())
        throw ValidationError(prefix(where) + "empty utterance_id");
    if (!(r.end_s > r.start_s))
        throw ValidationError(at + "end_s must be > start_s");
    if (r.start_s < 0.0 || !std::isfinite(r.start_s) || !std::isfinite(r.end_s))
        throw ValidationError(at + "timings must be finite and non-negative");
    if (r.ctc_score && *r.ctc_score > 0.0)
        throw ValidationError(at + "ctc_score must be <= 0");
    if (r.ctc_score && std::isnan(*r.ctc_score))
        throw ValidationError(at + "ctc_score is NaN");
    if (r.compactness && (!std::isfinite(*r.compactness) || *r.compactness < 0.0))
        throw ValidationError(at + "compactness must be finite and >= 0");
    if (r.speech_fraction &&
        (!std::isfinite(*r.speech_fraction) || *r.speech_fraction < 0.0 ||
         *r.speech_fraction > 1.0))
        throw ValidationError(at + "speech_fraction must be in [0,1]");
    for (const auto& [name, v] : r.acoustic_scores) {
        if (name.empty()) throw ValidationError(at + "empty acoustic score name");
        if (!std::isfinite(v) || v < 1.0 || v > 5.0)
            throw ValidationError(at + "acoustic score '" + name +
                                  "' must be in [1,5]");
    }
    if (r.planted_quality &&
        (!std::isfinite(*r.planted_quality) || *r.planted_quality < 0.0 ||
         *r.planted_quality > 1.0))
        throw ValidationError(at + "planted_quality must be in [0,1]");
    if (r.utt_score && !std::isfinite(*r.utt_score))
        throw ValidationError(at + "utt_score must be finite");
    if (!r.speaker_id.empty() && r.channel_id.empty())
        throw ValidationError(at + "speaker_id set without channel_id");
    for (const auto& tag : r.selected)
        if (tag.empty() || tag.find(',') != std::string::npos)
            throw ValidationError(at + "selection tags must be non-empty and comma-free");
}

void validate_manifest(const CorpusManifest& m) {
    std::unordered_set<std::string> ids;
    ids.reserve(m.records.size());
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        validate_record(m.records[i], "record " + std::to_string(i));
        if (!ids.insert(m.records[i].utterance_id).second)
            throw ValidationError("duplicate utterance_id '" +
                                  m.records[i].utterance_id + "'");
    }
}

std::vector<std::pair<std::string, std::vector<const UtteranceRecord*>>>
group_records(const CorpusManifest& m) {
    std::vector<std::pair<std::string, std::vector<const UtteranceRecord*>>> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : m.records) {
        auto [it, fresh] = index.emplace(r.group_id, out.size());
        if (fresh) out.emplace_back(r.group_id, std::vector<const UtteranceRecord*>{});
        out[it->second].second.push_back(&r);
    }
    return out;
}

std::vector<std::string> speaker_ids(const CorpusManifest& m) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& r : m.records)
        if (!r.speaker_id.empty() && seen.insert(r.speaker_id).second)
            out.push_back(r.speaker_id);
    return out;
}

}  // namespace darkselect
