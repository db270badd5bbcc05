#ifndef ENGAGE_TRAINING_HPP
#define ENGAGE_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "engage/data.hpp"
#include "engage/losses.hpp"
#include "engage/model.hpp"

namespace engage {

// Optimizer schedule: lr starts at lr0 and is multiplied by lr_decay
// every lr_step_epochs epochs, for a fixed epoch budget.
struct OptimConfig {
    double lr0 = 0.01;
    double lr_decay = 0.1;
    int lr_step_epochs = 20;
    int epochs = 60;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 16; // videos per mini-batch
    uint64_t seed = 42;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0; // total objective, averaged over the epoch's videos
    double train_mse = 0.0;  // mse component alone
    double val_mse = 0.0;    // full validation pass with end-of-epoch weights
};

struct TrainHistory {
    std::vector<EpochStats> epochs;

    void write_csv(const std::filesystem::path& path) const;
};

// lr0 * lr_decay^floor(epoch / lr_step_epochs); epoch must lie in [0, epochs).
double lr_at(int epoch, const OptimConfig& config);

// Classical momentum with decoupled-from-biases weight decay:
//   v <- momentum * v - lr * (g + weight_decay * w);  w <- w + v
void sgd_step(Param& param, Matrix& velocity, double lr, double momentum, double weight_decay);

// Velocity bookkeeping across a fixed parameter list; weight decay is
// skipped for refs with decay == false (biases).
class SgdMomentum {
public:
    explicit SgdMomentum(const std::vector<ParamRef>& params);
    void step(const std::vector<ParamRef>& params, double lr, double momentum, double weight_decay);

private:
    std::vector<Matrix> velocity_;
};

struct TrainSetup {
    ModelDims dims;
    OptimConfig optim;
    RankConfig rank;
    double center_alpha = 0.5;
    HeadMode head_mode = HeadMode::per_step;
};

struct TrainResult {
    RegressionModel model;
    CenterBank bank;
    TrainHistory history;
};

// Mini-batch SGD over videos: per batch, forward every video, evaluate
// mse + lambda * crl, backprop, step, then update the center bank.
// Shuffling and init are deterministic in optim.seed; the final-epoch
// model is returned (no early stopping). A non-finite loss raises
// NumericError naming epoch and batch.
TrainResult train_modality(const Dataset& train, const Dataset& val, ModalityTag modality,
                           const TrainSetup& setup);

} // namespace engage

#endif
