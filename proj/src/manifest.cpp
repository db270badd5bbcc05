#include "engage/manifest.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "engage/common.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace engage {

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_double_17(double v) {
    char buf[48];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw ValidationError(context + ": malformed number '" + text + "'");
    return v;
}

namespace {

std::string feature_filename(const std::string& video_id, ModalityTag tag) {
    return video_id + "_" + modality_name(tag) + ".csv";
}

void write_feature_csv(const fs::path& path, const SegmentFeatures& feats, int dims) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "seg";
    for (int j = 0; j < dims; ++j) out << ",f" << j;
    out << "\n";
    for (size_t i = 0; i < feats.size(); ++i) {
        out << i;
        for (double v : feats[i]) out << "," << format_double(v);
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

SegmentFeatures read_feature_csv(const fs::path& path, ModalityTag tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing feature file '" + path.string() + "'");

    const int dims = modality_dims(tag);
    std::string where = path.filename().string();

    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(where + ": empty feature file");
    {
        std::ostringstream expect;
        expect << "seg";
        for (int j = 0; j < dims; ++j) expect << ",f" << j;
        std::string got = line;
        if (!got.empty() && got.back() == '\r') got.pop_back();
        if (got != expect.str()) {
            auto fields = split_csv_line(line);
            if (static_cast<int>(fields.size()) != dims + 1)
                throw ValidationError(where + ": header has " + std::to_string(fields.size() - 1) +
                                      " feature columns, expected " + std::to_string(dims) + " for " +
                                      modality_name(tag));
            throw ValidationError(where + ": malformed header '" + got + "'");
        }
    }

    SegmentFeatures feats;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        std::string row_ctx = where + " row " + std::to_string(row);
        if (static_cast<int>(fields.size()) != dims + 1)
            throw ValidationError(row_ctx + ": " + std::to_string(fields.size() - 1) +
                                  " values, expected " + std::to_string(dims) + " for " +
                                  modality_name(tag));
        double seg_index = parse_double(fields[0], row_ctx);
        if (seg_index != static_cast<double>(row))
            throw ValidationError(row_ctx + ": seg column is " + fields[0] + ", expected " +
                                  std::to_string(row));
        FeatureVector vec(static_cast<size_t>(dims));
        for (int j = 0; j < dims; ++j) vec[static_cast<size_t>(j)] = parse_double(fields[j + 1], row_ctx);
        feats.push_back(std::move(vec));
        ++row;
    }
    if (feats.empty()) throw ValidationError(where + ": no segment rows");
    return feats;
}

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::set<std::string>& required, const std::string& where) {
    for (const auto& [key, value] : obj.items())
        if (allowed.count(key) == 0)
            throw ValidationError(where + ": unknown field '" + key + "'");
    for (const auto& key : required)
        if (obj.count(key) == 0)
            throw ValidationError(where + ": missing field '" + key + "'");
}

} // namespace

fs::path write_manifest(const Dataset& dataset, const fs::path& dir) {
    dataset.validate();
    std::error_code ec;
    fs::create_directories(dir / "features", ec);
    if (ec) throw IoError("cannot create directory '" + (dir / "features").string() + "': " + ec.message());

    for (const auto& sample : dataset.samples)
        for (const auto& [tag, feats] : sample.segments)
            write_feature_csv(dir / "features" / feature_filename(sample.video_id, tag), feats,
                              modality_dims(tag));

    // Hand-rolled writer: fixed key order and number formatting keep
    // rewrites of the same dataset byte-identical.
    fs::path manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + manifest_path.string() + "' for writing");
    out << "{\n  \"videos\": [\n";
    for (size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& s = dataset.samples[i];
        out << "    {\"video_id\": \"" << s.video_id << "\", \"subject_id\": \"" << s.subject_id
            << "\", \"label\": " << format_double(s.label.value()) << ", \"features\": {";
        bool first = true;
        for (const auto& [tag, feats] : s.segments) {
            if (!first) out << ", ";
            first = false;
            out << "\"" << modality_name(tag) << "\": \"features/" << feature_filename(s.video_id, tag)
                << "\"";
        }
        out << "}}" << (i + 1 < dataset.samples.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
    if (!out) throw IoError("write failed for '" + manifest_path.string() + "'");
    return manifest_path;
}

Dataset read_manifest(const fs::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw IoError("missing manifest '" + manifest_path.string() + "'");

    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("manifest '" + manifest_path.string() + "': " + e.what());
    }
    if (!root.is_object()) throw ValidationError("manifest root must be an object");
    require_keys(root, {"videos"}, {"videos"}, "manifest");
    if (!root["videos"].is_array()) throw ValidationError("manifest: 'videos' must be an array");

    fs::path base = manifest_path.parent_path();
    Dataset ds;
    std::set<std::string> seen_ids;

    for (const auto& entry : root["videos"]) {
        if (!entry.is_object()) throw ValidationError("manifest: video entries must be objects");
        require_keys(entry, {"video_id", "subject_id", "label", "features"},
                     {"video_id", "subject_id", "label", "features"}, "manifest video entry");

        VideoSample sample;
        sample.video_id = entry["video_id"].get<std::string>();
        sample.subject_id = entry["subject_id"].get<std::string>();
        if (!entry["label"].is_number())
            throw ValidationError("video '" + sample.video_id + "': label must be a number");
        sample.label = EngagementLevel::from_value(entry["label"].get<double>());

        if (!seen_ids.insert(sample.video_id).second)
            throw ValidationError("duplicate video_id '" + sample.video_id + "' in manifest");

        const json& features = entry["features"];
        if (!features.is_object() || features.empty())
            throw ValidationError("video '" + sample.video_id + "': 'features' must be a non-empty object");
        for (const auto& [key, rel] : features.items()) {
            ModalityTag tag = parse_modality(key);
            if (!rel.is_string())
                throw ValidationError("video '" + sample.video_id + "': feature path for " + key +
                                      " must be a string");
            sample.segments[tag] = read_feature_csv(base / rel.get<std::string>(), tag);
        }
        ds.samples.push_back(std::move(sample));
    }

    ds.validate();
    return ds;
}

} // namespace engage
