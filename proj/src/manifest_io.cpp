#include "darkselect/manifest_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "darkselect/error.hpp"

namespace darkselect {

using nlohmann::json;

std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

namespace {

std::string quote(const std::string& s) { return json(s).dump(); }

void emit(std::string& out, const char* key, const std::string& value,
          bool& first) {
    if (!first) out += ',';
    first = false;
    out += '"';
    out += key;
    out += "\":";
    out += value;
}

double as_double(const json& v, const std::string& key) {
    if (!v.is_number())
        throw ValidationError("key '" + key + "' must be a number");
    return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
    if (!v.is_string())
        throw ValidationError("key '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

std::string record_to_line(const UtteranceRecord& r) {
    std::string out = "{";
    bool first = true;
    emit(out, "utterance_id", quote(r.utterance_id), first);
    emit(out, "group_id", quote(r.group_id), first);
    if (!r.channel_id.empty()) emit(out, "channel_id", quote(r.channel_id), first);
    if (!r.speaker_id.empty()) emit(out, "speaker_id", quote(r.speaker_id), first);
    emit(out, "text", quote(r.text), first);
    if (!r.audio_path.empty()) emit(out, "audio_path", quote(r.audio_path), first);
    emit(out, "start_s", format_g9(r.start_s), first);
    emit(out, "end_s", format_g9(r.end_s), first);
    if (r.ctc_score) {
        if (std::isinf(*r.ctc_score))
            emit(out, "ctc_score", "\"-inf\"", first);
        else
            emit(out, "ctc_score", format_g9(*r.ctc_score), first);
    }
    if (r.compactness) emit(out, "compactness", format_g9(*r.compactness), first);
    if (r.speech_fraction)
        emit(out, "speech_fraction", format_g9(*r.speech_fraction), first);
    for (const auto& [name, v] : r.acoustic_scores)
        emit(out, ("score." + name).c_str(), format_g9(v), first);
    if (r.planted_quality)
        emit(out, "planted_quality", format_g9(*r.planted_quality), first);
    if (!r.feature_path.empty())
        emit(out, "feature_path", quote(r.feature_path), first);
    if (r.utt_score) emit(out, "utt_score", format_g9(*r.utt_score), first);
    if (!r.selected.empty()) {
        std::string tags;
        for (const auto& t : r.selected) {
            if (!tags.empty()) tags += ',';
            tags += t;
        }
        emit(out, "selected", quote(tags), first);
    }
    out += '}';
    return out;
}

UtteranceRecord record_from_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("record line is not an object");

    UtteranceRecord r;
    for (const auto& [key, v] : j.items()) {
        if (key == "utterance_id") r.utterance_id = as_string(v, key);
        else if (key == "group_id") r.group_id = as_string(v, key);
        else if (key == "channel_id") r.channel_id = as_string(v, key);
        else if (key == "speaker_id") r.speaker_id = as_string(v, key);
        else if (key == "text") r.text = as_string(v, key);
        else if (key == "audio_path") r.audio_path = as_string(v, key);
        else if (key == "start_s") r.start_s = as_double(v, key);
        else if (key == "end_s") r.end_s = as_double(v, key);
        else if (key == "ctc_score") {
            if (v.is_string()) {
                if (v.get<std::string>() != "-inf")
                    throw ValidationError("ctc_score string must be \"-inf\"");
                r.ctc_score = -std::numeric_limits<double>::infinity();
            } else {
                r.ctc_score = as_double(v, key);
            }
        } else if (key == "compactness") r.compactness = as_double(v, key);
        else if (key == "speech_fraction") r.speech_fraction = as_double(v, key);
        else if (key.rfind("score.", 0) == 0) {
            const std::string name = key.substr(6);
            if (name.empty()) throw ValidationError("empty acoustic score name");
            r.acoustic_scores[name] = as_double(v, key);
        } else if (key == "planted_quality") r.planted_quality = as_double(v, key);
        else if (key == "feature_path") r.feature_path = as_string(v, key);
        else if (key == "utt_score") r.utt_score = as_double(v, key);
        else if (key == "selected") {
            std::stringstream ss(as_string(v, key));
            std::string tag;
            while (std::getline(ss, tag, ','))
                if (!tag.empty()) r.selected.insert(tag);
        } else {
            throw ValidationError("unknown key '" + key + "'");
        }
    }
    return r;
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());

    CorpusManifest m;
    std::string line;
    std::size_t lineno = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.filename().string() + ":" + std::to_string(lineno);
        if (first_content_line) {
            first_content_line = false;
            json j = json::value_t::discarded;
            try {
                j = json::parse(line);
            } catch (const json::exception&) {
                // fall through to record parsing, which reports the error
            }
            if (j.is_object() && j.contains("manifest_meta")) {
                for (const auto& [key, v] : j.items()) {
                    if (key == "manifest_meta") continue;
                    if (!v.is_string())
                        throw ValidationError(where + ": metadata values must be strings");
                    m.metadata[key] = v.get<std::string>();
                }
                continue;
            }
        }
        try {
            m.records.push_back(record_from_line(line));
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        try {
            validate_record(m.records.back());
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    validate_manifest(m);
    return m;
}

void write_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
    validate_manifest(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot create manifest: " + path.string());
    if (!m.metadata.empty()) {
        std::string hdr = "{\"manifest_meta\":1";
        for (const auto& [k, v] : m.metadata)
            hdr += "," + quote(k) + ":" + quote(v);
        hdr += "}";
        out << hdr << '\n';
    }
    for (const auto& r : m.records) out << record_to_line(r) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace darkselect
