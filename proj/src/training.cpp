#include "engage/training.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "engage/common.hpp"
#include "engage/manifest.hpp"
#include "engage/rng.hpp"

namespace engage {

void OptimConfig::validate() const {
    if (lr0 < 0.0) throw ValidationError("lr0 must be >= 0");
    if (lr_decay <= 0.0) throw ValidationError("lr_decay must be positive");
    if (lr_step_epochs < 1) throw ValidationError("lr_step_epochs must be >= 1");
    if (epochs < 1) throw ValidationError("epochs must be >= 1, got " + std::to_string(epochs));
    if (momentum < 0.0 || momentum >= 1.0) throw ValidationError("momentum must be in [0, 1)");
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be >= 0");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

double lr_at(int epoch, const OptimConfig& config) {
    if (epoch < 0 || epoch >= config.epochs)
        throw ValidationError("epoch " + std::to_string(epoch) + " outside [0, " +
                              std::to_string(config.epochs) + ")");
    double lr = config.lr0;
    for (int i = 0; i < epoch / config.lr_step_epochs; ++i) lr *= config.lr_decay;
    return lr;
}

void sgd_step(Param& param, Matrix& velocity, double lr, double momentum, double weight_decay) {
    if (!param.value.same_shape(param.grad) || !param.value.same_shape(velocity))
        throw ValidationError("sgd_step: shape mismatch between value " + param.value.shape_str() +
                              ", grad " + param.grad.shape_str() + ", velocity " +
                              velocity.shape_str());
    double* w = param.value.data();
    const double* g = param.grad.data();
    double* v = velocity.data();
    for (size_t i = 0; i < param.value.size(); ++i) {
        v[i] = momentum * v[i] - lr * (g[i] + weight_decay * w[i]);
        w[i] += v[i];
    }
}

SgdMomentum::SgdMomentum(const std::vector<ParamRef>& params) {
    velocity_.reserve(params.size());
    for (const auto& p : params)
        velocity_.emplace_back(p.param->value.rows(), p.param->value.cols());
}

void SgdMomentum::step(const std::vector<ParamRef>& params, double lr, double momentum,
                       double weight_decay) {
    if (params.size() != velocity_.size())
        throw ValidationError("sgd: parameter list changed size");
    for (size_t i = 0; i < params.size(); ++i)
        sgd_step(*params[i].param, velocity_[i], lr, momentum,
                 params[i].decay ? weight_decay : 0.0);
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "epoch,lr,train_loss,train_mse,val_mse\n";
    for (const auto& e : epochs)
        out << e.epoch << "," << format_double(e.lr) << "," << format_double(e.train_loss) << ","
            << format_double(e.train_mse) << "," << format_double(e.val_mse) << "\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

double dataset_mse(const RegressionModel& model, const Dataset& ds) {
    double sum = 0.0;
    for (const auto& s : ds.samples) {
        double diff = predict_video(model, s) - s.label.value();
        sum += diff * diff;
    }
    return sum / static_cast<double>(ds.samples.size());
}

} // namespace

TrainResult train_modality(const Dataset& train, const Dataset& val, ModalityTag modality,
                           const TrainSetup& setup) {
    setup.optim.validate();
    if (train.samples.empty()) throw ValidationError("train dataset is empty");
    if (val.samples.empty()) throw ValidationError("validation dataset is empty");
    for (const Dataset* ds : {&train, &val})
        for (const auto& s : ds->samples)
            if (!s.has_modality(modality))
                throw ValidationError("video '" + s.video_id + "' lacks modality " +
                                      modality_name(modality));

    TrainResult res{init_model(modality, setup.dims, setup.optim.seed, setup.head_mode),
                    CenterBank(setup.dims.head2, setup.center_alpha),
                    {}};
    auto params = res.model.params();
    SgdMomentum optimizer(params);
    Rng shuffle_rng(setup.optim.seed, 0x9e3779b97f4a7c15ULL);

    std::vector<size_t> order(train.samples.size());
    std::iota(order.begin(), order.end(), size_t{0});

    const double lambda = setup.rank.lambda_crl;
    const int n_train = static_cast<int>(train.samples.size());

    for (int epoch = 0; epoch < setup.optim.epochs; ++epoch) {
        double lr = lr_at(epoch, setup.optim);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        double mse_sum = 0.0;

        for (int start = 0, batch_index = 0; start < n_train;
             start += setup.optim.batch_size, ++batch_index) {
            int batch = std::min(setup.optim.batch_size, n_train - start);

            std::vector<ForwardTrace> traces;
            traces.reserve(static_cast<size_t>(batch));
            std::vector<double> preds(static_cast<size_t>(batch));
            std::vector<double> labels(static_cast<size_t>(batch));
            std::vector<Embedding> embeddings(static_cast<size_t>(batch));
            std::vector<int> level_indices(static_cast<size_t>(batch));

            for (int b = 0; b < batch; ++b) {
                const VideoSample& s = train.samples[order[static_cast<size_t>(start + b)]];
                traces.push_back(forward(res.model, s.features(modality)));
                preds[static_cast<size_t>(b)] = aggregate_scores(traces.back().scores, setup.head_mode);
                labels[static_cast<size_t>(b)] = s.label.value();
                embeddings[static_cast<size_t>(b)] = traces.back().embedding;
                level_indices[static_cast<size_t>(b)] = s.label.index();
            }

            MseResult mse = mse_loss(preds, labels);
            CrlResult crl = crl_loss(embeddings, level_indices, res.bank, setup.rank.delta);
            double batch_loss = total_loss(mse.loss, crl.total, lambda);
            if (!std::isfinite(batch_loss))
                throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                                   " batch " + std::to_string(batch_index));

            zero_grads(params);
            for (int b = 0; b < batch; ++b) {
                const ForwardTrace& tr = traces[static_cast<size_t>(b)];
                std::vector<double> d_scores(tr.scores.size());
                double d_pred = mse.d_predictions[static_cast<size_t>(b)];
                if (setup.head_mode == HeadMode::per_step) {
                    double per = d_pred / static_cast<double>(tr.steps);
                    std::fill(d_scores.begin(), d_scores.end(), per);
                } else {
                    d_scores.back() = d_pred;
                }
                Embedding d_emb = crl.d_embeddings[static_cast<size_t>(b)];
                for (double& g : d_emb) g *= lambda;
                backward(res.model, tr, d_scores, d_emb);
            }

            optimizer.step(params, lr, setup.optim.momentum, setup.optim.weight_decay);
            update_centers(res.bank, embeddings, level_indices);

            loss_sum += batch_loss * batch;
            mse_sum += mse.loss * batch;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_sum / n_train;
        stats.train_mse = mse_sum / n_train;
        stats.val_mse = dataset_mse(res.model, val);
        if (!std::isfinite(stats.val_mse))
            throw NumericError("non-finite validation MSE at epoch " + std::to_string(epoch));
        res.history.epochs.push_back(stats);
        log_debug("epoch " + std::to_string(epoch) + " lr=" + format_double(lr) +
                  " train_loss=" + format_double(stats.train_loss) +
                  " val_mse=" + format_double(stats.val_mse));
    }

    return res;
}

} // namespace engage
