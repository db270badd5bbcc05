#ifndef ENGAGE_MODEL_HPP
#define ENGAGE_MODEL_HPP

#include <cstdint>
#include <vector>

#include "engage/data.hpp"
#include "engage/losses.hpp"
#include "engage/matrix.hpp"

namespace engage {

// Layer widths for one regression network. The LSTM input width comes
// from the modality; defaults follow the reference configuration
// (64 hidden states, head 512 and 128 wide).
struct ModelDims {
    int hidden = 64;
    int head1 = 512;
    int head2 = 128;
};

// How per-step scores become the video prediction: mean over steps
// (default), or the last step only.
enum class HeadMode { per_step, last_step };

const char* head_mode_name(HeadMode mode);
HeadMode parse_head_mode(const std::string& name);

// Gate weights W (hidden x input), recurrent U (hidden x hidden) and
// biases b (hidden x 1) for input/forget/output gates and the candidate.
struct LstmParams {
    int input_dim = 0;
    int hidden_dim = 0;
    Param w_i, w_f, w_o, w_g;
    Param u_i, u_f, u_o, u_g;
    Param b_i, b_f, b_o, b_g;
};

// Three affine layers H -> h1 -> h2 -> 1; relu on the hidden layers,
// linear output.
struct HeadParams {
    Param w1, b1;
    Param w2, b2;
    Param w3, b3;
};

struct RegressionModel {
    ModalityTag modality = ModalityTag::gaze;
    HeadMode head_mode = HeadMode::per_step;
    LstmParams lstm;
    HeadParams head;

    int input_dim() const { return lstm.input_dim; }
    int hidden_dim() const { return lstm.hidden_dim; }
    int head1_dim() const { return head.w1.value.rows(); }
    int head2_dim() const { return head.w2.value.rows(); }

    // Fixed enumeration order; biases carry decay = false.
    std::vector<ParamRef> params();
};

// Everything the backward pass needs, all post-activation, one row per
// step: gates, cell states, hidden states, head activations, per-step
// scores, and the video embedding (mean over steps of act2).
struct ForwardTrace {
    ModalityTag modality = ModalityTag::gaze;
    int input_dim = 0, hidden = 0, head1 = 0, head2 = 0, steps = 0;
    Matrix x;
    Matrix gate_i, gate_f, gate_o, gate_g;
    Matrix cell, cell_tanh, hidden_state;
    Matrix act1, act2;
    std::vector<double> scores;
    Embedding embedding;
};

// Xavier-uniform weights, zero biases except the forget-gate bias at 1.
RegressionModel init_model(ModalityTag modality, const ModelDims& dims, uint64_t seed,
                           HeadMode head_mode = HeadMode::per_step);

// Standard LSTM recurrence from zero initial state; head applied at
// every step. Dimension mismatches name the step and expected width.
ForwardTrace forward(const RegressionModel& model, const SegmentFeatures& segment_vectors);

double aggregate_scores(const std::vector<double>& scores, HeadMode mode);

// Multi-instance prediction: mean of per-step scores (or last step).
double predict_video(const RegressionModel& model, const VideoSample& sample);

// Backpropagation through time. Accumulates exact analytic gradients
// into the model's params; returns d loss / d input, one row per step.
// d_embedding may be empty (treated as zero).
Matrix backward(RegressionModel& model, const ForwardTrace& trace,
                const std::vector<double>& d_scores, const Embedding& d_embedding);

} // namespace engage

#endif
