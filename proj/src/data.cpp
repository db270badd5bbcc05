#include "engage/data.hpp"

#include <cmath>
#include <set>

#include "engage/common.hpp"

namespace engage {

EngagementLevel EngagementLevel::from_index(int index) {
    if (index < 0 || index > 3)
        throw ValidationError("engagement level index must be in 0..3, got " + std::to_string(index));
    return EngagementLevel(index);
}

EngagementLevel EngagementLevel::from_value(double value) {
    for (int i = 0; i < 4; ++i)
        if (value == kValues[static_cast<size_t>(i)]) return EngagementLevel(i);
    throw ValidationError("engagement label must be one of 0.0|0.33|0.66|1.0, got " +
                          std::to_string(value));
}

int modality_dims(ModalityTag tag) {
    switch (tag) {
        case ModalityTag::gaze: return 6;
        case ModalityTag::head: return 6;
        case ModalityTag::pose: return 28;
        case ModalityTag::c3d: return 768;
    }
    throw ValidationError("unknown modality tag");
}

const char* modality_name(ModalityTag tag) {
    switch (tag) {
        case ModalityTag::gaze: return "gaze";
        case ModalityTag::head: return "head";
        case ModalityTag::pose: return "pose";
        case ModalityTag::c3d: return "c3d";
    }
    throw ValidationError("unknown modality tag");
}

ModalityTag parse_modality(const std::string& name) {
    for (ModalityTag tag : kAllModalities)
        if (name == modality_name(tag)) return tag;
    throw ValidationError("unknown modality '" + name + "' (expected gaze|head|pose|c3d)");
}

int VideoSample::segment_count() const {
    if (segments.empty())
        throw ValidationError("video '" + video_id + "' has no modalities");
    int k = static_cast<int>(segments.begin()->second.size());
    for (const auto& [tag, feats] : segments)
        if (static_cast<int>(feats.size()) != k)
            throw ValidationError("video '" + video_id + "': modality " + modality_name(tag) +
                                  " has " + std::to_string(feats.size()) + " segments, expected " +
                                  std::to_string(k));
    return k;
}

const SegmentFeatures& VideoSample::features(ModalityTag tag) const {
    auto it = segments.find(tag);
    if (it == segments.end())
        throw ValidationError("video '" + video_id + "' lacks modality " + modality_name(tag));
    return it->second;
}

std::array<int, 4> Dataset::level_counts() const {
    std::array<int, 4> counts{0, 0, 0, 0};
    for (const auto& s : samples) counts[static_cast<size_t>(s.label.index())]++;
    return counts;
}

const VideoSample& Dataset::by_id(const std::string& video_id) const {
    for (const auto& s : samples)
        if (s.video_id == video_id) return s;
    throw ValidationError("no video with id '" + video_id + "'");
}

Dataset Dataset::subset(const std::vector<std::string>& video_ids) const {
    Dataset out;
    out.samples.reserve(video_ids.size());
    for (const auto& id : video_ids) out.samples.push_back(by_id(id));
    return out;
}

void Dataset::validate() const {
    std::set<std::string> seen;
    for (const auto& s : samples) {
        if (!seen.insert(s.video_id).second)
            throw ValidationError("duplicate video_id '" + s.video_id + "'");
        int k = s.segment_count();
        if (k < 1) throw ValidationError("video '" + s.video_id + "' has no segments");
        for (const auto& [tag, feats] : s.segments) {
            int dims = modality_dims(tag);
            for (size_t i = 0; i < feats.size(); ++i) {
                if (static_cast<int>(feats[i].size()) != dims)
                    throw ValidationError("video '" + s.video_id + "' modality " +
                                          modality_name(tag) + " segment " + std::to_string(i) +
                                          ": " + std::to_string(feats[i].size()) +
                                          " values, expected " + std::to_string(dims));
                for (double v : feats[i])
                    if (!std::isfinite(v))
                        throw ValidationError("video '" + s.video_id + "' modality " +
                                              modality_name(tag) + " segment " + std::to_string(i) +
                                              " contains a non-finite value");
            }
        }
    }
}

std::vector<std::vector<FeatureVector>> segment_frames(const std::vector<FeatureVector>& frames, int k) {
    int t = static_cast<int>(frames.size());
    if (k < 1 || k > t)
        throw ValidationError("invalid segmentation: k=" + std::to_string(k) + " with " +
                              std::to_string(t) + " frames (need 1 <= k <= frames)");
    int base = t / k;
    int extra = t % k; // first `extra` segments take one more frame
    std::vector<std::vector<FeatureVector>> out;
    out.reserve(static_cast<size_t>(k));
    int pos = 0;
    for (int i = 0; i < k; ++i) {
        int len = base + (i < extra ? 1 : 0);
        out.emplace_back(frames.begin() + pos, frames.begin() + pos + len);
        pos += len;
    }
    return out;
}

namespace {

FeatureVector component_variance(const std::vector<FeatureVector>& frames, const char* what) {
    if (frames.empty()) throw ValidationError(std::string(what) + ": empty segment");
    size_t dims = frames.front().size();
    for (const auto& f : frames)
        if (f.size() != dims)
            throw ValidationError(std::string(what) + ": ragged frame vectors in segment");

    // Two-pass: mean first, then squared deviations. Population (divide
    // by N) variance so single-frame segments are well defined.
    FeatureVector mean(dims, 0.0);
    for (const auto& f : frames)
        for (size_t j = 0; j < dims; ++j) mean[j] += f[j];
    for (size_t j = 0; j < dims; ++j) mean[j] /= static_cast<double>(frames.size());

    FeatureVector var(dims, 0.0);
    for (const auto& f : frames)
        for (size_t j = 0; j < dims; ++j) {
            double d = f[j] - mean[j];
            var[j] += d * d;
        }
    for (size_t j = 0; j < dims; ++j) var[j] /= static_cast<double>(frames.size());
    return var;
}

} // namespace

FeatureVector gaze_stat(const std::vector<FeatureVector>& frames_in_segment) {
    FeatureVector v = component_variance(frames_in_segment, "gaze_stat");
    if (v.size() != 6) throw ValidationError("gaze_stat: expected 6 channels per frame, got " +
                                             std::to_string(v.size()));
    return v;
}

FeatureVector head_stat(const std::vector<FeatureVector>& frames_in_segment) {
    FeatureVector v = component_variance(frames_in_segment, "head_stat");
    if (v.size() != 6) throw ValidationError("head_stat: expected 6 channels per frame, got " +
                                             std::to_string(v.size()));
    return v;
}

FeatureVector pose_stat(const std::vector<FeatureVector>& frames_in_segment) {
    FeatureVector v = component_variance(frames_in_segment, "pose_stat");
    if (v.size() != 28)
        throw ValidationError("pose_stat: expected 28 coordinates per frame (14 keypoints x 2), got " +
                              std::to_string(v.size()));
    for (double& x : v) x = std::sqrt(x);
    return v;
}

} // namespace engage
