#include "engage/checkpoint.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

#include "engage/common.hpp"
#include "engage/manifest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace engage {

namespace {

constexpr const char* kFormat = "engage-checkpoint-v1";

void write_array(std::ofstream& out, const Matrix& m) {
    out << "[";
    for (size_t i = 0; i < m.size(); ++i) {
        if (i) out << ",";
        out << format_double_17(m.data()[i]);
    }
    out << "]";
}

void read_matrix(const json& arr, Matrix& m, const std::string& name) {
    if (!arr.is_array() || arr.size() != m.size())
        throw ValidationError("checkpoint: weight '" + name + "' has " +
                              std::to_string(arr.size()) + " values, expected " +
                              std::to_string(m.size()));
    for (size_t i = 0; i < m.size(); ++i) {
        if (!arr[i].is_number()) throw ValidationError("checkpoint: non-numeric value in '" + name + "'");
        m.data()[i] = arr[i].get<double>();
    }
    if (!m.all_finite()) throw ValidationError("checkpoint: non-finite value in '" + name + "'");
}

} // namespace

void save_checkpoint(RegressionModel& model, const CenterBank& bank, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");

    out << "{\n";
    out << "  \"format\": \"" << kFormat << "\",\n";
    out << "  \"modality\": \"" << modality_name(model.modality) << "\",\n";
    out << "  \"head_mode\": \"" << head_mode_name(model.head_mode) << "\",\n";
    out << "  \"dims\": {\"input\": " << model.input_dim() << ", \"hidden\": " << model.hidden_dim()
        << ", \"head1\": " << model.head1_dim() << ", \"head2\": " << model.head2_dim() << "},\n";
    out << "  \"weights\": {\n";
    auto params = model.params();
    for (size_t i = 0; i < params.size(); ++i) {
        out << "    \"" << params[i].name << "\": ";
        write_array(out, params[i].param->value);
        out << (i + 1 < params.size() ? ",\n" : "\n");
    }
    out << "  },\n";
    out << "  \"center_bank\": {\"update_rate\": " << format_double_17(bank.update_rate)
        << ", \"centers\": [";
    for (int level = 0; level < 4; ++level) {
        if (level) out << ",";
        out << "[";
        const Embedding& c = bank.centers[static_cast<size_t>(level)];
        for (size_t j = 0; j < c.size(); ++j) {
            if (j) out << ",";
            out << format_double_17(c[j]);
        }
        out << "]";
    }
    out << "]}\n}\n";
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing checkpoint '" + path.string() + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("checkpoint '" + path.string() + "': " + e.what());
    }

    const std::set<std::string> allowed{"format", "modality", "head_mode", "dims", "weights",
                                        "center_bank"};
    for (const auto& [key, v] : root.items())
        if (allowed.count(key) == 0)
            throw ValidationError("checkpoint: unknown field '" + key + "'");
    for (const auto& key : allowed)
        if (root.count(key) == 0) throw ValidationError("checkpoint: missing field '" + key + "'");

    if (root["format"].get<std::string>() != kFormat)
        throw ValidationError("checkpoint: unsupported format '" +
                              root["format"].get<std::string>() + "'");

    const json& dims = root["dims"];
    ModelDims md;
    md.hidden = dims.at("hidden").get<int>();
    md.head1 = dims.at("head1").get<int>();
    md.head2 = dims.at("head2").get<int>();
    ModalityTag modality = parse_modality(root["modality"].get<std::string>());
    if (dims.at("input").get<int>() != modality_dims(modality))
        throw ValidationError("checkpoint: input dim " + std::to_string(dims.at("input").get<int>()) +
                              " does not match modality " + modality_name(modality));

    Checkpoint ck{init_model(modality, md, 0, parse_head_mode(root["head_mode"].get<std::string>())),
                  CenterBank(md.head2)};

    const json& weights = root["weights"];
    auto params = ck.model.params();
    std::set<std::string> expected;
    for (const auto& p : params) expected.insert(p.name);
    for (const auto& [key, v] : weights.items())
        if (expected.count(key) == 0)
            throw ValidationError("checkpoint: unknown weight '" + key + "'");
    for (auto& p : params) {
        if (weights.count(p.name) == 0)
            throw ValidationError("checkpoint: missing weight '" + p.name + "'");
        read_matrix(weights[p.name], p.param->value, p.name);
        p.param->zero_grad();
    }

    const json& bank_json = root["center_bank"];
    for (const auto& [key, v] : bank_json.items())
        if (key != "update_rate" && key != "centers")
            throw ValidationError("checkpoint: unknown center_bank field '" + key + "'");
    ck.bank = CenterBank(md.head2, bank_json.at("update_rate").get<double>());
    const json& centers = bank_json.at("centers");
    if (!centers.is_array() || centers.size() != 4)
        throw ValidationError("checkpoint: center_bank.centers must hold 4 vectors");
    for (int level = 0; level < 4; ++level) {
        const json& c = centers[static_cast<size_t>(level)];
        if (!c.is_array() || static_cast<int>(c.size()) != md.head2)
            throw ValidationError("checkpoint: center " + std::to_string(level) + " has dim " +
                                  std::to_string(c.size()) + ", expected " + std::to_string(md.head2));
        for (int j = 0; j < md.head2; ++j)
            ck.bank.centers[static_cast<size_t>(level)][static_cast<size_t>(j)] =
                c[static_cast<size_t>(j)].get<double>();
    }
    return ck;
}

} // namespace engage
