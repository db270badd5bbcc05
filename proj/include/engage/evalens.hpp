#ifndef ENGAGE_EVALENS_HPP
#define ENGAGE_EVALENS_HPP

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engage/data.hpp"

namespace engage {

struct Provenance {
    std::string modality;
    std::string split_name;
    std::string checkpoint;
};

struct PredictionSet {
    std::map<std::string, double> predictions; // video_id -> prediction
    Provenance provenance;
};

struct EvalReport {
    double overall_mse = 0.0;
    // NE, BE, E, SE; empty levels reported as absent.
    std::array<std::optional<double>, 4> per_level_mse;
    std::array<int, 4> level_counts{0, 0, 0, 0};
    double normalized_mse = 0.0;
    bool normalization_degenerate = false;
};

// Per-video weighted mean across sets; uniform when weights are absent.
// All sets must cover exactly the same ids; the error lists the
// symmetric difference.
PredictionSet ensemble(const std::vector<PredictionSet>& sets,
                       const std::vector<double>& weights = {});

// Overall, per-level and normalized MSE for every video in the dataset.
// Predictions may cover extra ids; missing ones are an error naming the
// video. quantize snaps predictions to the nearest level value first.
EvalReport evaluate(const PredictionSet& predictions, const Dataset& dataset,
                    bool quantize = false);

// Affine map sending the observed min to 0 and max to 1. Degenerate
// ranges (or fewer than 2 predictions) pass through unchanged, flagged
// via `warned`. This is the artifact's reading of "normalized MSE"; the
// metric name is conventional, the rescaling rule is ours.
std::map<std::string, double> normalize_predictions(const std::map<std::string, double>& predictions,
                                                    bool* warned = nullptr);

// MSE(uniform ensemble) <= mean member MSE + 1e-12; true by convexity,
// exposed as a self-test.
bool jensen_check(const std::vector<PredictionSet>& sets,
                  const std::map<std::string, double>& labels);

// CSV `video_id,prediction`, header row included, ids sorted.
void write_predictions(const PredictionSet& set, const std::filesystem::path& path);
PredictionSet read_predictions(const std::filesystem::path& path);

void write_report(const EvalReport& report, const std::filesystem::path& path);
std::string report_table(const EvalReport& report);

} // namespace engage

#endif
