#ifndef ENGAGE_SPLITS_HPP
#define ENGAGE_SPLITS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "engage/data.hpp"

namespace engage {

// Subject-disjoint train/validation partition; id lists kept sorted for
// diff-stable files.
struct SplitSpec {
    std::string name;
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
};

// Generates n_splits subject-disjoint partitions. Subjects are assigned
// greedily, largest first, each time favouring the engagement level most
// underrepresented on the training side, until the train side reaches
// ratio * total videos (within half the largest subject's video count).
// must_train_ids pins whole subjects to the training side first, which
// reproduces a fixed official-validation-into-train rule when supplied.
std::vector<SplitSpec> make_splits(const Dataset& dataset, int n_splits, double ratio,
                                   uint64_t seed,
                                   const std::vector<std::string>& must_train_ids = {});

// Sampling with replacement: |result| == |train_ids|, uniform draws,
// deterministic in seed. Order of the input does not matter.
std::vector<std::string> bootstrap_resample(const std::vector<std::string>& train_ids,
                                            uint64_t seed);

std::array<double, 4> empirical_level_distribution(const Dataset& dataset);
// Multiset variant: repeats count with multiplicity; labels come from the dataset.
std::array<double, 4> empirical_level_distribution(const Dataset& dataset,
                                                   const std::vector<std::string>& id_multiset);

// JSON format: {"name": ..., "train_ids": [...], "val_ids": [...]}.
void write_split(const SplitSpec& spec, const std::filesystem::path& path);
SplitSpec read_split(const std::filesystem::path& path);

} // namespace engage

#endif
