#include "engage/synth.hpp"

#include <cmath>
#include <cstdio>

#include "engage/common.hpp"
#include "engage/rng.hpp"

namespace engage {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

struct ChannelWave {
    double base, amp, freq, phase;
    double at(int t) const { return base + amp * std::sin(freq * t + phase); }
};

std::vector<FeatureVector> make_motion_frames(int frames, int channels, double amplitude,
                                              double noise_scale, double base_lo, double base_hi,
                                              double chan_amp_lo, double chan_amp_hi, Rng& rng) {
    std::vector<ChannelWave> waves(static_cast<size_t>(channels));
    for (auto& w : waves) {
        w.base = rng.uniform(base_lo, base_hi);
        w.amp = amplitude * rng.uniform(chan_amp_lo, chan_amp_hi);
        w.freq = rng.uniform(0.3, 1.5);
        w.phase = rng.uniform(0.0, kTwoPi);
    }
    std::vector<FeatureVector> out(static_cast<size_t>(frames), FeatureVector(channels));
    for (int t = 0; t < frames; ++t)
        for (int c = 0; c < channels; ++c)
            out[t][c] = waves[c].at(t) + noise_scale * rng.normal();
    return out;
}

std::string padded_id(const char* prefix, int index, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, index);
    return buf;
}

} // namespace

Dataset synth_generate(const SynthConfig& config, uint64_t seed) {
    if (config.n_subjects < 2)
        throw ValidationError("synth_generate: n_subjects must be >= 2, got " +
                              std::to_string(config.n_subjects));
    if (config.videos_per_subject < 1)
        throw ValidationError("synth_generate: videos_per_subject must be >= 1, got " +
                              std::to_string(config.videos_per_subject));
    if (config.k < 1)
        throw ValidationError("synth_generate: k must be >= 1, got " + std::to_string(config.k));
    if (config.noise_scale < 0.0)
        throw ValidationError("synth_generate: noise_scale must be >= 0, got " +
                              std::to_string(config.noise_scale));
    if (config.frame_rate_hint <= 0.0)
        throw ValidationError("synth_generate: frame_rate_hint must be > 0, got " +
                              std::to_string(config.frame_rate_hint));

    Rng rng(seed);

    const int c3d_dims = modality_dims(ModalityTag::c3d);
    std::array<FeatureVector, 4> c3d_proto;
    for (auto& proto : c3d_proto) {
        proto.resize(static_cast<size_t>(c3d_dims));
        for (double& v : proto) v = rng.uniform(-0.5, 0.5);
    }

    int subj_width = config.n_subjects > 99 ? 3 : 2;
    int vid_width = config.videos_per_subject > 99 ? 3 : 2;

    Dataset ds;
    ds.samples.reserve(static_cast<size_t>(config.n_subjects) * config.videos_per_subject);

    for (int s = 0; s < config.n_subjects; ++s) {
        std::string subject_id = padded_id("s", s, subj_width);
        double subject_factor = rng.uniform(0.9, 1.1);

        for (int v = 0; v < config.videos_per_subject; ++v) {
            VideoSample sample;
            sample.subject_id = subject_id;
            sample.video_id = subject_id + "_" + padded_id("v", v, vid_width);
            sample.label = EngagementLevel::from_index(static_cast<int>(rng.uniform_int(4)));

            // Motion shrinks as engagement grows; fully engaged means no motion.
            double amplitude = (1.0 - sample.label.value()) * subject_factor;

            double duration = rng.uniform(4.0, 8.0);
            int frames = static_cast<int>(std::llround(duration * config.frame_rate_hint));
            if (frames < config.k) frames = config.k;

            auto gaze_frames = make_motion_frames(frames, 6, amplitude, config.noise_scale,
                                                  -1.0, 1.0, 0.5, 1.0, rng);
            auto head_frames = make_motion_frames(frames, 6, amplitude, config.noise_scale,
                                                  -1.0, 1.0, 0.5, 1.0, rng);
            auto pose_frames = make_motion_frames(frames, 28, amplitude, config.noise_scale,
                                                  0.0, 4.0, 0.5, 1.5, rng);

            SegmentFeatures gaze_feats, head_feats, pose_feats, c3d_feats;
            for (auto& seg : segment_frames(gaze_frames, config.k)) gaze_feats.push_back(gaze_stat(seg));
            for (auto& seg : segment_frames(head_frames, config.k)) head_feats.push_back(head_stat(seg));
            for (auto& seg : segment_frames(pose_frames, config.k)) pose_feats.push_back(pose_stat(seg));

            const FeatureVector& proto = c3d_proto[static_cast<size_t>(sample.label.index())];
            double c3d_noise = config.noise_scale * (0.25 + amplitude);
            for (int seg = 0; seg < config.k; ++seg) {
                FeatureVector vec(proto);
                for (double& x : vec) x += c3d_noise * rng.normal();
                c3d_feats.push_back(std::move(vec));
            }

            sample.segments[ModalityTag::gaze] = std::move(gaze_feats);
            sample.segments[ModalityTag::head] = std::move(head_feats);
            sample.segments[ModalityTag::pose] = std::move(pose_feats);
            sample.segments[ModalityTag::c3d] = std::move(c3d_feats);
            ds.samples.push_back(std::move(sample));
        }
    }

    ds.validate();
    return ds;
}

} // namespace engage
