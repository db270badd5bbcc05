#ifndef ENGAGE_DATA_HPP
#define ENGAGE_DATA_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

namespace engage {

// The four engagement intensity levels and their regression targets.
class EngagementLevel {
public:
    static constexpr std::array<double, 4> kValues{0.0, 0.33, 0.66, 1.0};
    static constexpr std::array<const char*, 4> kShortNames{"NE", "BE", "E", "SE"};

    EngagementLevel() = default;
    static EngagementLevel from_index(int index);
    // Exact match against one of the four constants; anything else throws.
    static EngagementLevel from_value(double value);

    int index() const { return index_; }
    double value() const { return kValues[static_cast<size_t>(index_)]; }

    friend bool operator==(EngagementLevel a, EngagementLevel b) { return a.index_ == b.index_; }

private:
    explicit EngagementLevel(int index) : index_(index) {}
    int index_ = 0;
};

enum class ModalityTag { gaze, head, pose, c3d };

constexpr std::array<ModalityTag, 4> kAllModalities{ModalityTag::gaze, ModalityTag::head,
                                                    ModalityTag::pose, ModalityTag::c3d};

// Fixed per-segment feature widths: gaze/head variance stats over 6
// channels, pose stds over 14 keypoints x 2 coordinates, C3D vectors
// consumed opaque at 768.
int modality_dims(ModalityTag tag);
const char* modality_name(ModalityTag tag);
ModalityTag parse_modality(const std::string& name);

using FeatureVector = std::vector<double>;
using SegmentFeatures = std::vector<FeatureVector>; // k vectors, one per segment

// One labeled video: per-modality sequence of k per-segment feature
// vectors. All modalities in a sample share the same k.
struct VideoSample {
    std::string video_id;
    std::string subject_id;
    EngagementLevel label;
    std::map<ModalityTag, SegmentFeatures> segments;

    int segment_count() const;
    bool has_modality(ModalityTag tag) const { return segments.count(tag) > 0; }
    // Throws if absent or inconsistent with the tag's dimension.
    const SegmentFeatures& features(ModalityTag tag) const;

    friend bool operator==(const VideoSample& a, const VideoSample& b) {
        return a.video_id == b.video_id && a.subject_id == b.subject_id && a.label == b.label &&
               a.segments == b.segments;
    }
};

struct Dataset {
    std::vector<VideoSample> samples;

    std::array<int, 4> level_counts() const;
    const VideoSample& by_id(const std::string& video_id) const;
    Dataset subset(const std::vector<std::string>& video_ids) const;
    // Duplicate ids rejected; every feature value must be finite.
    void validate() const;

    friend bool operator==(const Dataset& a, const Dataset& b) { return a.samples == b.samples; }
};

// Contiguous order-preserving partition into k runs whose lengths differ
// by at most one; when T = q*k + r, the first r runs get the extra frame.
std::vector<std::vector<FeatureVector>> segment_frames(const std::vector<FeatureVector>& frames, int k);

// Per-component population variance of the 6 gaze channels in a segment.
FeatureVector gaze_stat(const std::vector<FeatureVector>& frames_in_segment);
// Same contract over the 6 head-pose channels (3 translation + 3 orientation).
FeatureVector head_stat(const std::vector<FeatureVector>& frames_in_segment);
// Per-coordinate population standard deviation over 14 keypoints x {x,y}.
FeatureVector pose_stat(const std::vector<FeatureVector>& frames_in_segment);

} // namespace engage

#endif
