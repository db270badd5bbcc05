#ifndef ENGAGE_SYNTH_HPP
#define ENGAGE_SYNTH_HPP

#include <cstdint>

#include "engage/data.hpp"

namespace engage {

// Synthetic multimodal dataset standing in for real extractor output.
// Per-frame gaze/head/pose signals oscillate with motion amplitude
// proportional to (1 - label value) plus noise_scale jitter, so lower
// engagement means more motion; C3D vectors are a fixed per-level
// prototype plus amplitude-scaled noise.
struct SynthConfig {
    int n_subjects = 10;
    int videos_per_subject = 20;
    int k = 10;
    double frame_rate_hint = 5.0; // frames per second; lengths derive from frame counts
    double noise_scale = 0.1;
};

// Deterministic in (config, seed): same inputs reproduce the dataset
// byte for byte once written.
Dataset synth_generate(const SynthConfig& config, uint64_t seed);

} // namespace engage

#endif
