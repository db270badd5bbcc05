#include "engage/evalens.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "engage/common.hpp"
#include "engage/manifest.hpp"

namespace fs = std::filesystem;

namespace engage {

PredictionSet ensemble(const std::vector<PredictionSet>& sets, const std::vector<double>& weights) {
    if (sets.empty()) throw ValidationError("ensemble: no prediction sets");
    if (!weights.empty()) {
        if (weights.size() != sets.size())
            throw ValidationError("ensemble: " + std::to_string(weights.size()) + " weights for " +
                                  std::to_string(sets.size()) + " sets");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw ValidationError("ensemble: weights must be non-negative");
            sum += w;
        }
        if (sum <= 0.0) throw ValidationError("ensemble: weights must not all be zero");
    }

    const auto& ref = sets.front().predictions;
    for (size_t i = 1; i < sets.size(); ++i) {
        const auto& other = sets[i].predictions;
        if (other == ref) continue;
        std::string missing, extra;
        for (const auto& [id, v] : ref)
            if (!other.count(id)) missing += (missing.empty() ? "" : ", ") + id;
        for (const auto& [id, v] : other)
            if (!ref.count(id)) extra += (extra.empty() ? "" : ", ") + id;
        if (!missing.empty() || !extra.empty())
            throw ValidationError("ensemble: prediction set " + std::to_string(i) +
                                  " does not cover the same videos; missing: [" + missing +
                                  "], extra: [" + extra + "]");
    }

    double total_weight = 0.0;
    std::vector<double> w(sets.size(), 1.0);
    if (!weights.empty()) w = weights;
    for (double v : w) total_weight += v;

    PredictionSet out;
    out.provenance.checkpoint = "ensemble(" + std::to_string(sets.size()) + " sets)";
    for (const auto& [id, v0] : ref) {
        double acc = 0.0;
        for (size_t i = 0; i < sets.size(); ++i) acc += w[i] * sets[i].predictions.at(id);
        out.predictions[id] = acc / total_weight;
    }
    return out;
}

namespace {

double quantize_to_level(double p) {
    double best = EngagementLevel::kValues[0];
    double best_dist = std::fabs(p - best);
    for (double v : EngagementLevel::kValues) {
        double d = std::fabs(p - v);
        if (d < best_dist) {
            best_dist = d;
            best = v;
        }
    }
    return best;
}

} // namespace

EvalReport evaluate(const PredictionSet& predictions, const Dataset& dataset, bool quantize) {
    if (dataset.samples.empty()) throw ValidationError("evaluate: empty dataset");

    std::map<std::string, double> preds;
    for (const auto& s : dataset.samples) {
        auto it = predictions.predictions.find(s.video_id);
        if (it == predictions.predictions.end())
            throw ValidationError("evaluate: missing prediction for video '" + s.video_id + "'");
        preds[s.video_id] = quantize ? quantize_to_level(it->second) : it->second;
        if (!std::isfinite(preds[s.video_id]))
            throw NumericError("evaluate: non-finite prediction for video '" + s.video_id + "'");
    }

    EvalReport report;
    std::array<double, 4> level_sums{0, 0, 0, 0};
    double overall_sum = 0.0;
    for (const auto& s : dataset.samples) {
        double diff = preds[s.video_id] - s.label.value();
        double sq = diff * diff;
        overall_sum += sq;
        level_sums[static_cast<size_t>(s.label.index())] += sq;
        report.level_counts[static_cast<size_t>(s.label.index())]++;
    }
    report.overall_mse = overall_sum / static_cast<double>(dataset.samples.size());
    for (int l = 0; l < 4; ++l)
        if (report.level_counts[static_cast<size_t>(l)] > 0)
            report.per_level_mse[static_cast<size_t>(l)] =
                level_sums[static_cast<size_t>(l)] / report.level_counts[static_cast<size_t>(l)];

    bool warned = false;
    auto normalized = normalize_predictions(preds, &warned);
    report.normalization_degenerate = warned;
    double norm_sum = 0.0;
    for (const auto& s : dataset.samples) {
        double diff = normalized.at(s.video_id) - s.label.value();
        norm_sum += diff * diff;
    }
    report.normalized_mse = norm_sum / static_cast<double>(dataset.samples.size());
    return report;
}

std::map<std::string, double> normalize_predictions(const std::map<std::string, double>& predictions,
                                                    bool* warned) {
    if (warned) *warned = false;
    if (predictions.size() < 2) {
        if (warned) *warned = true;
        return predictions;
    }
    double lo = predictions.begin()->second;
    double hi = lo;
    for (const auto& [id, v] : predictions) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-8) {
        if (warned) *warned = true;
        return predictions;
    }
    std::map<std::string, double> out;
    for (const auto& [id, v] : predictions) out[id] = (v - lo) / (hi - lo);
    return out;
}

bool jensen_check(const std::vector<PredictionSet>& sets,
                  const std::map<std::string, double>& labels) {
    PredictionSet ens = ensemble(sets);
    auto mse_of = [&labels](const PredictionSet& set) {
        double sum = 0.0;
        int n = 0;
        for (const auto& [id, label] : labels) {
            auto it = set.predictions.find(id);
            if (it == set.predictions.end())
                throw ValidationError("jensen_check: missing prediction for video '" + id + "'");
            double diff = it->second - label;
            sum += diff * diff;
            ++n;
        }
        if (n == 0) throw ValidationError("jensen_check: no labels");
        return sum / n;
    };
    double member_mean = 0.0;
    for (const auto& s : sets) member_mean += mse_of(s);
    member_mean /= static_cast<double>(sets.size());
    return mse_of(ens) <= member_mean + 1e-12;
}

void write_predictions(const PredictionSet& set, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "video_id,prediction\n";
    for (const auto& [id, v] : set.predictions) out << id << "," << format_double(v) << "\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PredictionSet read_predictions(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing prediction file '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty prediction file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "video_id,prediction")
        throw ValidationError(path.string() + ": malformed header '" + line + "'");

    PredictionSet set;
    set.provenance.checkpoint = path.string();
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto comma = line.find(',');
        std::string ctx = path.filename().string() + " row " + std::to_string(row);
        if (comma == std::string::npos || comma == 0)
            throw ValidationError(ctx + ": malformed line '" + line + "'");
        std::string id = line.substr(0, comma);
        double v = parse_double(line.substr(comma + 1), ctx);
        if (!set.predictions.emplace(id, v).second)
            throw ValidationError(ctx + ": duplicate video_id '" + id + "'");
        ++row;
    }
    if (set.predictions.empty()) throw ValidationError(path.string() + ": no prediction rows");
    return set;
}

void write_report(const EvalReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "{\n  \"overall_mse\": " << format_double(report.overall_mse) << ",\n";
    out << "  \"per_level_mse\": [";
    for (int l = 0; l < 4; ++l) {
        if (l) out << ", ";
        const auto& v = report.per_level_mse[static_cast<size_t>(l)];
        out << (v ? format_double(*v) : "null");
    }
    out << "],\n  \"level_counts\": [";
    for (int l = 0; l < 4; ++l) {
        if (l) out << ", ";
        out << report.level_counts[static_cast<size_t>(l)];
    }
    out << "],\n  \"normalized_mse\": " << format_double(report.normalized_mse) << ",\n";
    out << "  \"normalized_mse_definition\": \"observed-range min-max rescaling (artifact-defined, "
           "not a standard metric)\",\n";
    out << "  \"normalization_degenerate\": " << (report.normalization_degenerate ? "true" : "false")
        << "\n}\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string report_table(const EvalReport& report) {
    std::ostringstream out;
    out << "overall MSE:     " << format_double(report.overall_mse) << "\n";
    for (int l = 0; l < 4; ++l) {
        const auto& v = report.per_level_mse[static_cast<size_t>(l)];
        out << "  " << EngagementLevel::kShortNames[static_cast<size_t>(l)] << " (n="
            << report.level_counts[static_cast<size_t>(l)] << "):"
            << std::string(l == 2 ? 8 : 7, ' ') << (v ? format_double(*v) : "n/a") << "\n";
    }
    out << "normalized MSE:  " << format_double(report.normalized_mse)
        << "  (observed-range min-max rescaling, artifact-defined)\n";
    if (report.normalization_degenerate)
        out << "  note: degenerate prediction range, normalization was identity\n";
    return out.str();
}

} // namespace engage
