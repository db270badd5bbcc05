#ifndef ENGAGE_CHECKPOINT_HPP
#define ENGAGE_CHECKPOINT_HPP

#include <filesystem>

#include "engage/losses.hpp"
#include "engage/model.hpp"

namespace engage {

struct Checkpoint {
    RegressionModel model;
    CenterBank bank;
};

// Single JSON file holding dims, modality, head mode, flat row-major
// weight arrays in params() order, and the center bank. Values are
// written with 17 significant digits so load(save(x)) is exact.
void save_checkpoint(RegressionModel& model, const CenterBank& bank,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace engage

#endif
