#include "engage/model.hpp"

#include <cmath>
#include <string>

#include "engage/common.hpp"

namespace engage {

const char* head_mode_name(HeadMode mode) {
    return mode == HeadMode::per_step ? "per_step" : "last_step";
}

HeadMode parse_head_mode(const std::string& name) {
    if (name == "per_step") return HeadMode::per_step;
    if (name == "last_step") return HeadMode::last_step;
    throw ValidationError("unknown head mode '" + name + "' (expected per_step|last_step)");
}

std::vector<ParamRef> RegressionModel::params() {
    return {
        {"lstm.w_i", &lstm.w_i, true},  {"lstm.w_f", &lstm.w_f, true},
        {"lstm.w_o", &lstm.w_o, true},  {"lstm.w_g", &lstm.w_g, true},
        {"lstm.u_i", &lstm.u_i, true},  {"lstm.u_f", &lstm.u_f, true},
        {"lstm.u_o", &lstm.u_o, true},  {"lstm.u_g", &lstm.u_g, true},
        {"lstm.b_i", &lstm.b_i, false}, {"lstm.b_f", &lstm.b_f, false},
        {"lstm.b_o", &lstm.b_o, false}, {"lstm.b_g", &lstm.b_g, false},
        {"head.w1", &head.w1, true},    {"head.b1", &head.b1, false},
        {"head.w2", &head.w2, true},    {"head.b2", &head.b2, false},
        {"head.w3", &head.w3, true},    {"head.b3", &head.b3, false},
    };
}

namespace {

Matrix xavier(int rows, int cols, Rng& rng) {
    double s = std::sqrt(6.0 / (rows + cols));
    return random_uniform(rows, cols, -s, s, rng);
}

} // namespace

RegressionModel init_model(ModalityTag modality, const ModelDims& dims, uint64_t seed,
                           HeadMode head_mode) {
    if (dims.hidden < 1 || dims.head1 < 1 || dims.head2 < 1)
        throw ValidationError("model dims must be positive");

    const int d = modality_dims(modality);
    const int h = dims.hidden;
    Rng rng(seed);

    RegressionModel m;
    m.modality = modality;
    m.head_mode = head_mode;
    m.lstm.input_dim = d;
    m.lstm.hidden_dim = h;

    m.lstm.w_i = Param(xavier(h, d, rng));
    m.lstm.w_f = Param(xavier(h, d, rng));
    m.lstm.w_o = Param(xavier(h, d, rng));
    m.lstm.w_g = Param(xavier(h, d, rng));
    m.lstm.u_i = Param(xavier(h, h, rng));
    m.lstm.u_f = Param(xavier(h, h, rng));
    m.lstm.u_o = Param(xavier(h, h, rng));
    m.lstm.u_g = Param(xavier(h, h, rng));
    m.lstm.b_i = Param(h, 1);
    m.lstm.b_f = Param(h, 1);
    m.lstm.b_f.value.fill(1.0); // forget gate open at init
    m.lstm.b_o = Param(h, 1);
    m.lstm.b_g = Param(h, 1);

    m.head.w1 = Param(xavier(dims.head1, h, rng));
    m.head.b1 = Param(dims.head1, 1);
    m.head.w2 = Param(xavier(dims.head2, dims.head1, rng));
    m.head.b2 = Param(dims.head2, 1);
    m.head.w3 = Param(xavier(1, dims.head2, rng));
    m.head.b3 = Param(1, 1);
    return m;
}

ForwardTrace forward(const RegressionModel& model, const SegmentFeatures& segment_vectors) {
    const int k = static_cast<int>(segment_vectors.size());
    if (k < 1) throw ValidationError("forward: need at least one segment vector");
    const int d = model.input_dim();
    const int h = model.hidden_dim();
    const int h1 = model.head1_dim();
    const int h2 = model.head2_dim();

    ForwardTrace tr;
    tr.modality = model.modality;
    tr.input_dim = d;
    tr.hidden = h;
    tr.head1 = h1;
    tr.head2 = h2;
    tr.steps = k;

    tr.x = Matrix(k, d);
    for (int t = 0; t < k; ++t) {
        if (static_cast<int>(segment_vectors[static_cast<size_t>(t)].size()) != d)
            throw ValidationError("forward: step " + std::to_string(t) + " has dim " +
                                  std::to_string(segment_vectors[static_cast<size_t>(t)].size()) +
                                  ", expected " + std::to_string(d));
        for (int j = 0; j < d; ++j) tr.x.at(t, j) = segment_vectors[static_cast<size_t>(t)][static_cast<size_t>(j)];
    }

    // Input projections for all steps at once; recurrence stays sequential.
    Matrix proj_i = matmul_nt(tr.x, model.lstm.w_i.value);
    Matrix proj_f = matmul_nt(tr.x, model.lstm.w_f.value);
    Matrix proj_o = matmul_nt(tr.x, model.lstm.w_o.value);
    Matrix proj_g = matmul_nt(tr.x, model.lstm.w_g.value);

    tr.gate_i = Matrix(k, h);
    tr.gate_f = Matrix(k, h);
    tr.gate_o = Matrix(k, h);
    tr.gate_g = Matrix(k, h);
    tr.cell = Matrix(k, h);
    tr.cell_tanh = Matrix(k, h);
    tr.hidden_state = Matrix(k, h);

    std::vector<double> h_prev(static_cast<size_t>(h), 0.0);
    std::vector<double> c_prev(static_cast<size_t>(h), 0.0);

    const Matrix& u_i = model.lstm.u_i.value;
    const Matrix& u_f = model.lstm.u_f.value;
    const Matrix& u_o = model.lstm.u_o.value;
    const Matrix& u_g = model.lstm.u_g.value;

    for (int t = 0; t < k; ++t) {
        for (int j = 0; j < h; ++j) {
            double zi = proj_i.at(t, j) + dot(u_i.row(j), h_prev.data(), h) + model.lstm.b_i.value.at(j, 0);
            double zf = proj_f.at(t, j) + dot(u_f.row(j), h_prev.data(), h) + model.lstm.b_f.value.at(j, 0);
            double zo = proj_o.at(t, j) + dot(u_o.row(j), h_prev.data(), h) + model.lstm.b_o.value.at(j, 0);
            double zg = proj_g.at(t, j) + dot(u_g.row(j), h_prev.data(), h) + model.lstm.b_g.value.at(j, 0);

            double gi = sigmoid(zi);
            double gf = sigmoid(zf);
            double go = sigmoid(zo);
            double gg = std::tanh(zg);
            double c = gf * c_prev[static_cast<size_t>(j)] + gi * gg;
            double ct = std::tanh(c);

            tr.gate_i.at(t, j) = gi;
            tr.gate_f.at(t, j) = gf;
            tr.gate_o.at(t, j) = go;
            tr.gate_g.at(t, j) = gg;
            tr.cell.at(t, j) = c;
            tr.cell_tanh.at(t, j) = ct;
            tr.hidden_state.at(t, j) = go * ct;
        }
        for (int j = 0; j < h; ++j) {
            h_prev[static_cast<size_t>(j)] = tr.hidden_state.at(t, j);
            c_prev[static_cast<size_t>(j)] = tr.cell.at(t, j);
        }
    }

    // Head over all steps: relu(W1 h + b1), relu(W2 a1 + b2), linear W3 a2 + b3.
    tr.act1 = matmul_nt(tr.hidden_state, model.head.w1.value);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h1; ++j) {
            double z = tr.act1.at(t, j) + model.head.b1.value.at(j, 0);
            tr.act1.at(t, j) = z > 0.0 ? z : 0.0;
        }
    tr.act2 = matmul_nt(tr.act1, model.head.w2.value);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h2; ++j) {
            double z = tr.act2.at(t, j) + model.head.b2.value.at(j, 0);
            tr.act2.at(t, j) = z > 0.0 ? z : 0.0;
        }

    tr.scores.resize(static_cast<size_t>(k));
    for (int t = 0; t < k; ++t)
        tr.scores[static_cast<size_t>(t)] =
            dot(tr.act2.row(t), model.head.w3.value.row(0), h2) + model.head.b3.value.at(0, 0);

    tr.embedding.assign(static_cast<size_t>(h2), 0.0);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h2; ++j) tr.embedding[static_cast<size_t>(j)] += tr.act2.at(t, j);
    for (double& e : tr.embedding) e /= static_cast<double>(k);

    return tr;
}

double aggregate_scores(const std::vector<double>& scores, HeadMode mode) {
    if (scores.empty()) throw ValidationError("aggregate_scores: no scores");
    if (mode == HeadMode::last_step) return scores.back();
    double s = 0.0;
    for (double v : scores) s += v;
    return s / static_cast<double>(scores.size());
}

double predict_video(const RegressionModel& model, const VideoSample& sample) {
    ForwardTrace tr = forward(model, sample.features(model.modality));
    return aggregate_scores(tr.scores, model.head_mode);
}

namespace {

void check_trace(const RegressionModel& model, const ForwardTrace& tr) {
    if (tr.modality != model.modality || tr.input_dim != model.input_dim() ||
        tr.hidden != model.hidden_dim() || tr.head1 != model.head1_dim() ||
        tr.head2 != model.head2_dim())
        throw ValidationError("backward: trace does not match model (modality/dims differ)");
}

} // namespace

Matrix backward(RegressionModel& model, const ForwardTrace& tr,
                const std::vector<double>& d_scores, const Embedding& d_embedding) {
    check_trace(model, tr);
    const int k = tr.steps;
    const int h = tr.hidden;
    const int h1 = tr.head1;
    const int h2 = tr.head2;
    if (static_cast<int>(d_scores.size()) != k)
        throw ValidationError("backward: expected " + std::to_string(k) + " score gradients, got " +
                              std::to_string(d_scores.size()));
    if (!d_embedding.empty() && static_cast<int>(d_embedding.size()) != h2)
        throw ValidationError("backward: embedding gradient dim " +
                              std::to_string(d_embedding.size()) + ", expected " + std::to_string(h2));

    Matrix d_r(k, 1);
    for (int t = 0; t < k; ++t) d_r.at(t, 0) = d_scores[static_cast<size_t>(t)];

    // Head layer 3 (linear).
    matmul_tn_acc(model.head.w3.grad, d_r, tr.act2);
    for (int t = 0; t < k; ++t) model.head.b3.grad.at(0, 0) += d_r.at(t, 0);

    Matrix d_a2 = matmul(d_r, model.head.w3.value); // k x h2
    if (!d_embedding.empty()) {
        double inv_k = 1.0 / static_cast<double>(k);
        for (int t = 0; t < k; ++t)
            for (int j = 0; j < h2; ++j) d_a2.at(t, j) += d_embedding[static_cast<size_t>(j)] * inv_k;
    }

    // Head layer 2 (relu). Mask by post-activation > 0; kink subgradient 0.
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h2; ++j)
            if (tr.act2.at(t, j) <= 0.0) d_a2.at(t, j) = 0.0;
    matmul_tn_acc(model.head.w2.grad, d_a2, tr.act1);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h2; ++j) model.head.b2.grad.at(j, 0) += d_a2.at(t, j);
    Matrix d_a1 = matmul(d_a2, model.head.w2.value); // k x h1

    // Head layer 1 (relu).
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h1; ++j)
            if (tr.act1.at(t, j) <= 0.0) d_a1.at(t, j) = 0.0;
    matmul_tn_acc(model.head.w1.grad, d_a1, tr.hidden_state);
    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h1; ++j) model.head.b1.grad.at(j, 0) += d_a1.at(t, j);
    Matrix d_h_head = matmul(d_a1, model.head.w1.value); // k x h

    // BPTT. Pre-activation gate gradients per step, accumulated for the
    // batched weight updates below.
    Matrix da_i(k, h), da_f(k, h), da_o(k, h), da_g(k, h);
    std::vector<double> dh(static_cast<size_t>(h), 0.0), dc(static_cast<size_t>(h), 0.0);

    for (int t = k - 1; t >= 0; --t) {
        for (int j = 0; j < h; ++j) {
            double dht = d_h_head.at(t, j) + dh[static_cast<size_t>(j)];
            double o = tr.gate_o.at(t, j);
            double ct = tr.cell_tanh.at(t, j);
            double d_o = dht * ct;
            double dct = dht * o * (1.0 - ct * ct) + dc[static_cast<size_t>(j)];

            double gi = tr.gate_i.at(t, j);
            double gf = tr.gate_f.at(t, j);
            double gg = tr.gate_g.at(t, j);
            double c_prev = t > 0 ? tr.cell.at(t - 1, j) : 0.0;

            double d_i = dct * gg;
            double d_g = dct * gi;
            double d_f = dct * c_prev;
            dc[static_cast<size_t>(j)] = dct * gf;

            da_i.at(t, j) = d_i * gi * (1.0 - gi);
            da_f.at(t, j) = d_f * gf * (1.0 - gf);
            da_o.at(t, j) = d_o * o * (1.0 - o);
            da_g.at(t, j) = d_g * (1.0 - gg * gg);
        }
        // dh_{t-1} = sum over gates of U^T da.
        std::fill(dh.begin(), dh.end(), 0.0);
        if (t > 0) {
            for (int row = 0; row < h; ++row) {
                double vi = da_i.at(t, row), vf = da_f.at(t, row);
                double vo = da_o.at(t, row), vg = da_g.at(t, row);
                const double* ui = model.lstm.u_i.value.row(row);
                const double* uf = model.lstm.u_f.value.row(row);
                const double* uo = model.lstm.u_o.value.row(row);
                const double* ug = model.lstm.u_g.value.row(row);
                for (int j = 0; j < h; ++j)
                    dh[static_cast<size_t>(j)] += vi * ui[j] + vf * uf[j] + vo * uo[j] + vg * ug[j];
            }
        }
    }

    // Batched weight gradients: dW += da^T X, dU += da^T H_prev, db += colsum(da).
    matmul_tn_acc(model.lstm.w_i.grad, da_i, tr.x);
    matmul_tn_acc(model.lstm.w_f.grad, da_f, tr.x);
    matmul_tn_acc(model.lstm.w_o.grad, da_o, tr.x);
    matmul_tn_acc(model.lstm.w_g.grad, da_g, tr.x);

    Matrix h_prev_mat(k, h); // row t = h_{t-1}, row 0 stays zero
    for (int t = 1; t < k; ++t)
        for (int j = 0; j < h; ++j) h_prev_mat.at(t, j) = tr.hidden_state.at(t - 1, j);
    matmul_tn_acc(model.lstm.u_i.grad, da_i, h_prev_mat);
    matmul_tn_acc(model.lstm.u_f.grad, da_f, h_prev_mat);
    matmul_tn_acc(model.lstm.u_o.grad, da_o, h_prev_mat);
    matmul_tn_acc(model.lstm.u_g.grad, da_g, h_prev_mat);

    for (int t = 0; t < k; ++t)
        for (int j = 0; j < h; ++j) {
            model.lstm.b_i.grad.at(j, 0) += da_i.at(t, j);
            model.lstm.b_f.grad.at(j, 0) += da_f.at(t, j);
            model.lstm.b_o.grad.at(j, 0) += da_o.at(t, j);
            model.lstm.b_g.grad.at(j, 0) += da_g.at(t, j);
        }

    // d loss / d input, one row per step.
    Matrix d_x(k, tr.input_dim);
    matmul_acc(d_x, da_i, model.lstm.w_i.value);
    matmul_acc(d_x, da_f, model.lstm.w_f.value);
    matmul_acc(d_x, da_o, model.lstm.w_o.value);
    matmul_acc(d_x, da_g, model.lstm.w_g.value);
    return d_x;
}

} // namespace engage
