#include "engage/splits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "engage/common.hpp"
#include "engage/manifest.hpp"
#include "engage/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace engage {

namespace {

struct SubjectGroup {
    std::string subject_id;
    std::vector<std::string> video_ids;
    std::array<int, 4> level_counts{0, 0, 0, 0};
    int size() const { return static_cast<int>(video_ids.size()); }
};

std::vector<SubjectGroup> group_by_subject(const Dataset& dataset) {
    std::map<std::string, SubjectGroup> groups;
    for (const auto& s : dataset.samples) {
        SubjectGroup& g = groups[s.subject_id];
        g.subject_id = s.subject_id;
        g.video_ids.push_back(s.video_id);
        g.level_counts[static_cast<size_t>(s.label.index())]++;
    }
    std::vector<SubjectGroup> out;
    out.reserve(groups.size());
    for (auto& [id, g] : groups) out.push_back(std::move(g));
    return out;
}

// All achievable train sizes over whole subjects with both sides
// non-empty, for the closest-achievable error message.
int closest_achievable(const std::vector<SubjectGroup>& subjects, int target, int total) {
    std::vector<char> reachable(static_cast<size_t>(total + 1), 0);
    reachable[0] = 1;
    for (const auto& g : subjects)
        for (int t = total - g.size(); t >= 0; --t)
            if (reachable[static_cast<size_t>(t)]) reachable[static_cast<size_t>(t + g.size())] = 1;
    int best = -1;
    for (int t = 1; t < total; ++t)
        if (reachable[static_cast<size_t>(t)] &&
            (best < 0 || std::abs(t - target) < std::abs(best - target)))
            best = t;
    return best;
}

SplitSpec make_one_split(const Dataset& dataset, std::vector<SubjectGroup> subjects,
                         const std::string& name, double ratio, Rng& rng,
                         const std::set<std::string>& must_train_subjects) {
    const int total = static_cast<int>(dataset.samples.size());
    const int target = static_cast<int>(std::llround(ratio * total));

    // Seeded shuffle for tie-breaking, then largest subjects first.
    rng.shuffle(subjects);
    std::stable_sort(subjects.begin(), subjects.end(),
                     [](const SubjectGroup& a, const SubjectGroup& b) { return a.size() > b.size(); });

    int max_subject = 0;
    for (const auto& g : subjects) max_subject = std::max(max_subject, g.size());

    std::vector<SubjectGroup> remaining;
    std::vector<SubjectGroup> chosen;
    int train_size = 0;
    std::array<int, 4> train_levels{0, 0, 0, 0};

    auto take = [&](SubjectGroup g) {
        train_size += g.size();
        for (int l = 0; l < 4; ++l) train_levels[static_cast<size_t>(l)] += g.level_counts[static_cast<size_t>(l)];
        chosen.push_back(std::move(g));
    };

    for (auto& g : subjects) {
        if (must_train_subjects.count(g.subject_id))
            take(std::move(g));
        else
            remaining.push_back(std::move(g));
    }

    while (train_size < target && remaining.size() > 1) {
        // Level currently most underrepresented against a uniform target.
        int want_level = 0;
        double worst_gap = -1.0;
        for (int l = 0; l < 4; ++l) {
            double p = train_size > 0
                           ? static_cast<double>(train_levels[static_cast<size_t>(l)]) / train_size
                           : 0.0;
            double gap = 0.25 - p;
            if (gap > worst_gap) {
                worst_gap = gap;
                want_level = l;
            }
        }

        // Candidates may not overshoot the target by more than the
        // current undershoot, and may not empty the validation side.
        int pick = -1;
        int best_count = -1;
        for (size_t i = 0; i < remaining.size(); ++i) {
            int overshoot = train_size + remaining[i].size() - target;
            if (overshoot > target - train_size) continue;
            int count = remaining[i].level_counts[static_cast<size_t>(want_level)];
            if (count > best_count) {
                best_count = count;
                pick = static_cast<int>(i);
            }
        }
        if (pick < 0) break;
        take(std::move(remaining[static_cast<size_t>(pick)]));
        remaining.erase(remaining.begin() + pick);
    }

    // Legitimate greedy outcomes land within half the largest subject of
    // the target; a larger gap means the ratio is unachievable at subject
    // granularity. Pinned subjects can push past the target by request,
    // so the check is skipped for them.
    if (must_train_subjects.empty() &&
        std::abs(train_size - target) * 2 > max_subject) {
        std::vector<SubjectGroup> all = chosen;
        all.insert(all.end(), remaining.begin(), remaining.end());
        int best = closest_achievable(all, target, total);
        throw ValidationError(
            "ratio " + format_double(ratio) + " unachievable with subject granularity; closest "
            "achievable train fraction is " + std::to_string(best) + "/" + std::to_string(total) +
            " = " + format_double(static_cast<double>(best) / total));
    }

    SplitSpec spec;
    spec.name = name;
    for (const auto& g : chosen)
        spec.train_ids.insert(spec.train_ids.end(), g.video_ids.begin(), g.video_ids.end());
    for (const auto& g : remaining)
        spec.val_ids.insert(spec.val_ids.end(), g.video_ids.begin(), g.video_ids.end());
    std::sort(spec.train_ids.begin(), spec.train_ids.end());
    std::sort(spec.val_ids.begin(), spec.val_ids.end());
    return spec;
}

} // namespace

std::vector<SplitSpec> make_splits(const Dataset& dataset, int n_splits, double ratio,
                                   uint64_t seed, const std::vector<std::string>& must_train_ids) {
    if (n_splits < 1) throw ValidationError("n_splits must be >= 1");
    if (ratio <= 0.0 || ratio >= 1.0)
        throw ValidationError("ratio must lie strictly between 0 and 1, got " + format_double(ratio));
    dataset.validate();

    auto subjects = group_by_subject(dataset);
    if (subjects.size() < 2)
        throw ValidationError("need at least 2 subjects for a subject-disjoint split, got " +
                              std::to_string(subjects.size()));

    std::set<std::string> must_train_subjects;
    for (const auto& id : must_train_ids)
        must_train_subjects.insert(dataset.by_id(id).subject_id);

    std::vector<SplitSpec> specs;
    specs.reserve(static_cast<size_t>(n_splits));
    for (int i = 0; i < n_splits; ++i) {
        Rng rng(seed, 0x853c49e6748fea9bULL + static_cast<uint64_t>(i));
        specs.push_back(make_one_split(dataset, subjects, "split_" + std::to_string(i + 1), ratio,
                                       rng, must_train_subjects));
    }
    return specs;
}

std::vector<std::string> bootstrap_resample(const std::vector<std::string>& train_ids,
                                            uint64_t seed) {
    if (train_ids.empty()) throw ValidationError("bootstrap_resample: empty id set");
    std::vector<std::string> pool = train_ids;
    std::sort(pool.begin(), pool.end()); // draw from a canonical order
    Rng rng(seed);
    std::vector<std::string> out;
    out.reserve(pool.size());
    for (size_t i = 0; i < pool.size(); ++i)
        out.push_back(pool[rng.uniform_int(static_cast<uint32_t>(pool.size()))]);
    return out;
}

std::array<double, 4> empirical_level_distribution(const Dataset& dataset) {
    if (dataset.samples.empty()) throw ValidationError("empirical_level_distribution: empty dataset");
    std::array<double, 4> p{0, 0, 0, 0};
    for (const auto& s : dataset.samples) p[static_cast<size_t>(s.label.index())] += 1.0;
    for (double& v : p) v /= static_cast<double>(dataset.samples.size());
    return p;
}

std::array<double, 4> empirical_level_distribution(const Dataset& dataset,
                                                   const std::vector<std::string>& id_multiset) {
    if (id_multiset.empty()) throw ValidationError("empirical_level_distribution: empty multiset");
    std::array<double, 4> p{0, 0, 0, 0};
    for (const auto& id : id_multiset) p[static_cast<size_t>(dataset.by_id(id).label.index())] += 1.0;
    for (double& v : p) v /= static_cast<double>(id_multiset.size());
    return p;
}

void write_split(const SplitSpec& spec, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    auto write_ids = [&out](const std::vector<std::string>& ids) {
        out << "[";
        for (size_t i = 0; i < ids.size(); ++i) {
            if (i) out << ", ";
            out << "\"" << ids[i] << "\"";
        }
        out << "]";
    };
    out << "{\n  \"name\": \"" << spec.name << "\",\n  \"train_ids\": ";
    write_ids(spec.train_ids);
    out << ",\n  \"val_ids\": ";
    write_ids(spec.val_ids);
    out << "\n}\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SplitSpec read_split(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing split file '" + path.string() + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("split file '" + path.string() + "': " + e.what());
    }
    for (const auto& [key, v] : root.items())
        if (key != "name" && key != "train_ids" && key != "val_ids")
            throw ValidationError("split file: unknown field '" + key + "'");
    SplitSpec spec;
    spec.name = root.at("name").get<std::string>();
    spec.train_ids = root.at("train_ids").get<std::vector<std::string>>();
    spec.val_ids = root.at("val_ids").get<std::vector<std::string>>();

    std::set<std::string> train_set(spec.train_ids.begin(), spec.train_ids.end());
    for (const auto& id : spec.val_ids)
        if (train_set.count(id))
            throw ValidationError("split file: id '" + id + "' appears on both sides");
    std::sort(spec.train_ids.begin(), spec.train_ids.end());
    std::sort(spec.val_ids.begin(), spec.val_ids.end());
    return spec;
}

} // namespace engage
