#include "engage/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "engage/checkpoint.hpp"
#include "engage/common.hpp"
#include "engage/evalens.hpp"
#include "engage/manifest.hpp"
#include "engage/splits.hpp"
#include "engage/synth.hpp"
#include "engage/training.hpp"
#include "engage/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace engage {

namespace {

// Flat tunable set shared by every command. Defaults are applied for
// absent keys; a config file overrides defaults and explicit CLI flags
// override the file.
struct RunConfig {
    uint64_t seed = 42;
    int k = 10;
    int subjects = 10;
    int videos_per_subject = 20;
    double noise = 0.1;
    double frame_rate = 5.0;
    int hidden = 64;
    int head1 = 512;
    int head2 = 128;
    std::string head_mode = "per_step";
    double lr0 = 0.01;
    double lr_decay = 0.1;
    int lr_step_epochs = 20;
    int epochs = 60;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 16;
    double delta = 1.0;
    double lambda_crl = 0.01;
    double center_alpha = 0.5;
    double ratio = 147.0 / 195.0;
    int n_splits = 3;
};

void apply_config_file(RunConfig& cfg, const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing config file '" + path.string() + "'");
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config '" + path.string() + "': " + e.what());
    }
    if (!root.is_object()) throw ValidationError("config file must hold a flat JSON object");

    for (const auto& [key, v] : root.items()) {
        if (key == "seed") cfg.seed = v.get<uint64_t>();
        else if (key == "k") cfg.k = v.get<int>();
        else if (key == "subjects") cfg.subjects = v.get<int>();
        else if (key == "videos_per_subject") cfg.videos_per_subject = v.get<int>();
        else if (key == "noise") cfg.noise = v.get<double>();
        else if (key == "frame_rate") cfg.frame_rate = v.get<double>();
        else if (key == "hidden") cfg.hidden = v.get<int>();
        else if (key == "head1") cfg.head1 = v.get<int>();
        else if (key == "head2") cfg.head2 = v.get<int>();
        else if (key == "head_mode") cfg.head_mode = v.get<std::string>();
        else if (key == "lr0") cfg.lr0 = v.get<double>();
        else if (key == "lr_decay") cfg.lr_decay = v.get<double>();
        else if (key == "lr_step_epochs") cfg.lr_step_epochs = v.get<int>();
        else if (key == "epochs") cfg.epochs = v.get<int>();
        else if (key == "momentum") cfg.momentum = v.get<double>();
        else if (key == "weight_decay") cfg.weight_decay = v.get<double>();
        else if (key == "batch_size") cfg.batch_size = v.get<int>();
        else if (key == "delta") cfg.delta = v.get<double>();
        else if (key == "lambda_crl") cfg.lambda_crl = v.get<double>();
        else if (key == "center_alpha") cfg.center_alpha = v.get<double>();
        else if (key == "ratio") cfg.ratio = v.get<double>();
        else if (key == "n_splits") cfg.n_splits = v.get<int>();
        else throw ValidationError("config: unknown key '" + key + "'");
    }
}

void echo_config(const RunConfig& c) {
    log_info("config: batch_size=" + std::to_string(c.batch_size) +
             " center_alpha=" + format_double(c.center_alpha) + " delta=" + format_double(c.delta) +
             " epochs=" + std::to_string(c.epochs) + " frame_rate=" + format_double(c.frame_rate) +
             " head1=" + std::to_string(c.head1) + " head2=" + std::to_string(c.head2) +
             " head_mode=" + c.head_mode + " hidden=" + std::to_string(c.hidden) +
             " k=" + std::to_string(c.k) + " lambda_crl=" + format_double(c.lambda_crl) +
             " lr0=" + format_double(c.lr0) + " lr_decay=" + format_double(c.lr_decay) +
             " lr_step_epochs=" + std::to_string(c.lr_step_epochs) +
             " momentum=" + format_double(c.momentum) + " n_splits=" + std::to_string(c.n_splits) +
             " noise=" + format_double(c.noise) + " ratio=" + format_double(c.ratio) +
             " seed=" + std::to_string(c.seed) + " subjects=" + std::to_string(c.subjects) +
             " videos_per_subject=" + std::to_string(c.videos_per_subject) +
             " weight_decay=" + format_double(c.weight_decay));
}

// Tracks which flags were supplied so precedence is defaults < config
// file < explicit flags.
class ConfigBinder {
public:
    explicit ConfigBinder(CLI::App& cmd) : cmd_(cmd) {
        cmd.add_option("--config", config_path_, "flat JSON config file (flags override it)");
    }

    template <typename T>
    void bind(const std::string& flag, T RunConfig::*member, const std::string& help) {
        CLI::Option* opt = cmd_.add_option(flag, staging_.*member, help);
        appliers_.emplace_back(opt, [member](RunConfig& dst, const RunConfig& src) {
            dst.*member = src.*member;
        });
    }

    RunConfig resolve() const {
        RunConfig cfg;
        if (!config_path_.empty()) apply_config_file(cfg, config_path_);
        for (const auto& [opt, apply] : appliers_)
            if (opt->count() > 0) apply(cfg, staging_);
        echo_config(cfg);
        return cfg;
    }

private:
    CLI::App& cmd_;
    std::string config_path_;
    RunConfig staging_;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> appliers_;
};

TrainSetup setup_from_config(const RunConfig& cfg) {
    TrainSetup setup;
    setup.dims = ModelDims{cfg.hidden, cfg.head1, cfg.head2};
    setup.optim.lr0 = cfg.lr0;
    setup.optim.lr_decay = cfg.lr_decay;
    setup.optim.lr_step_epochs = cfg.lr_step_epochs;
    setup.optim.epochs = cfg.epochs;
    setup.optim.momentum = cfg.momentum;
    setup.optim.weight_decay = cfg.weight_decay;
    setup.optim.batch_size = cfg.batch_size;
    setup.optim.seed = cfg.seed;
    setup.rank.delta = cfg.delta;
    setup.rank.lambda_crl = cfg.lambda_crl;
    setup.center_alpha = cfg.center_alpha;
    setup.head_mode = parse_head_mode(cfg.head_mode);
    return setup;
}

void print_level_counts(const Dataset& ds) {
    auto counts = ds.level_counts();
    log_info("videos: " + std::to_string(ds.samples.size()) + "  level counts: NE=" +
             std::to_string(counts[0]) + " BE=" + std::to_string(counts[1]) + " E=" +
             std::to_string(counts[2]) + " SE=" + std::to_string(counts[3]));
}

std::vector<std::string> side_ids(const SplitSpec& split, const std::string& side) {
    if (side == "train") return split.train_ids;
    if (side == "val") return split.val_ids;
    throw ValidationError("side must be train|val, got '" + side + "'");
}

int run_commands(const std::vector<std::string>& args) {
    CLI::App app{"engagement intensity regression pipeline"};
    app.require_subcommand(1);

    // --- synth ------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset on disk");
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    ConfigBinder synth_cfg(*synth);
    synth_cfg.bind("--seed", &RunConfig::seed, "generator seed");
    synth_cfg.bind("--subjects", &RunConfig::subjects, "number of subjects (>= 2)");
    synth_cfg.bind("--videos-per-subject", &RunConfig::videos_per_subject, "videos per subject");
    synth_cfg.bind("--k", &RunConfig::k, "segments per video");
    synth_cfg.bind("--noise", &RunConfig::noise, "noise scale");
    synth_cfg.bind("--frame-rate", &RunConfig::frame_rate, "frames per second hint");
    synth->callback([&] {
        RunConfig cfg = synth_cfg.resolve();
        SynthConfig sc{cfg.subjects, cfg.videos_per_subject, cfg.k, cfg.frame_rate, cfg.noise};
        Dataset ds = synth_generate(sc, cfg.seed);
        fs::path manifest = write_manifest(ds, synth_out);
        print_level_counts(ds);
        log_info("wrote " + manifest.string());
    });

    // --- split ------------------------------------------------------
    auto* split = app.add_subcommand("split", "generate subject-disjoint splits");
    std::string split_data, split_out, must_train_file;
    split->add_option("--data", split_data, "dataset directory (with manifest.json)")->required();
    split->add_option("--out", split_out, "output directory")->required();
    split->add_option("--must-train-file", must_train_file,
                      "file with one video_id per line pinned to the training side");
    ConfigBinder split_cfg(*split);
    split_cfg.bind("--n", &RunConfig::n_splits, "number of splits");
    split_cfg.bind("--ratio", &RunConfig::ratio, "train fraction (default 147/195)");
    split_cfg.bind("--seed", &RunConfig::seed, "split seed");
    split->callback([&] {
        RunConfig cfg = split_cfg.resolve();
        Dataset ds = read_manifest(fs::path(split_data) / "manifest.json");
        std::vector<std::string> must_train;
        if (!must_train_file.empty()) {
            std::ifstream in(must_train_file);
            if (!in) throw IoError("missing must-train file '" + must_train_file + "'");
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (!line.empty()) must_train.push_back(line);
            }
        }
        auto specs = make_splits(ds, cfg.n_splits, cfg.ratio, cfg.seed, must_train);
        std::error_code ec;
        fs::create_directories(split_out, ec);
        if (ec) throw IoError("cannot create directory '" + split_out + "': " + ec.message());
        for (const auto& spec : specs) {
            fs::path path = fs::path(split_out) / (spec.name + ".json");
            write_split(spec, path);
            log_info(spec.name + ": train=" + std::to_string(spec.train_ids.size()) +
                     " val=" + std::to_string(spec.val_ids.size()) + " -> " + path.string());
        }
    });

    // --- train ------------------------------------------------------
    auto* train = app.add_subcommand("train", "train one modality on one split");
    std::string train_data, train_split, train_modality_name, train_out;
    bool train_bootstrap = false;
    train->add_option("--data", train_data, "dataset directory")->required();
    train->add_option("--split", train_split, "split JSON file")->required();
    train->add_option("--modality", train_modality_name, "gaze|head|pose|c3d")->required();
    train->add_option("--out", train_out, "output directory")->required();
    train->add_flag("--bootstrap", train_bootstrap,
                    "resample the training ids with replacement before training");
    ConfigBinder train_cfg(*train);
    train_cfg.bind("--seed", &RunConfig::seed, "training seed");
    train_cfg.bind("--hidden", &RunConfig::hidden, "LSTM hidden width");
    train_cfg.bind("--head1", &RunConfig::head1, "first head layer width");
    train_cfg.bind("--head2", &RunConfig::head2, "second head layer width (embedding dim)");
    train_cfg.bind("--head-mode", &RunConfig::head_mode, "per_step|last_step");
    train_cfg.bind("--lr0", &RunConfig::lr0, "initial learning rate");
    train_cfg.bind("--lr-decay", &RunConfig::lr_decay, "decay factor");
    train_cfg.bind("--lr-step-epochs", &RunConfig::lr_step_epochs, "epochs per decay step");
    train_cfg.bind("--epochs", &RunConfig::epochs, "training epochs");
    train_cfg.bind("--momentum", &RunConfig::momentum, "momentum");
    train_cfg.bind("--weight-decay", &RunConfig::weight_decay, "weight decay");
    train_cfg.bind("--batch-size", &RunConfig::batch_size, "videos per mini-batch");
    train_cfg.bind("--delta", &RunConfig::delta, "rank loss margin");
    train_cfg.bind("--lambda-crl", &RunConfig::lambda_crl, "weight of the ranked-center loss");
    train_cfg.bind("--center-alpha", &RunConfig::center_alpha, "center update rate");
    train->callback([&] {
        RunConfig cfg = train_cfg.resolve();
        Dataset ds = read_manifest(fs::path(train_data) / "manifest.json");
        SplitSpec spec = read_split(train_split);
        ModalityTag modality = parse_modality(train_modality_name);

        std::vector<std::string> train_ids = spec.train_ids;
        if (train_bootstrap) train_ids = bootstrap_resample(train_ids, cfg.seed);
        Dataset train_ds = ds.subset(train_ids);
        Dataset val_ds = ds.subset(spec.val_ids);

        TrainResult result = train_modality(train_ds, val_ds, modality, setup_from_config(cfg));

        std::error_code ec;
        fs::create_directories(train_out, ec);
        if (ec) throw IoError("cannot create directory '" + train_out + "': " + ec.message());
        std::string stem = std::string(modality_name(modality)) + "_" + spec.name;
        fs::path ckpt_path = fs::path(train_out) / (stem + "_checkpoint.json");
        fs::path hist_path = fs::path(train_out) / (stem + "_history.csv");
        save_checkpoint(result.model, result.bank, ckpt_path);
        result.history.write_csv(hist_path);
        log_info("final val MSE: " + format_double(result.history.epochs.back().val_mse));
        log_info("wrote " + ckpt_path.string() + " and " + hist_path.string());
    });

    // --- predict ----------------------------------------------------
    auto* predict = app.add_subcommand("predict", "write per-video predictions from a checkpoint");
    std::string pred_ckpt, pred_data, pred_out, pred_split, pred_side = "val";
    predict->add_option("--checkpoint", pred_ckpt, "checkpoint JSON")->required();
    predict->add_option("--data", pred_data, "dataset directory")->required();
    predict->add_option("--out", pred_out, "output prediction CSV")->required();
    predict->add_option("--split", pred_split, "restrict to one side of this split file");
    predict->add_option("--side", pred_side, "train|val (with --split; default val)");
    predict->callback([&] {
        Checkpoint ck = load_checkpoint(pred_ckpt);
        Dataset ds = read_manifest(fs::path(pred_data) / "manifest.json");
        if (!pred_split.empty()) ds = ds.subset(side_ids(read_split(pred_split), pred_side));

        PredictionSet set;
        set.provenance.modality = modality_name(ck.model.modality);
        set.provenance.checkpoint = pred_ckpt;
        if (!pred_split.empty()) set.provenance.split_name = read_split(pred_split).name;
        for (const auto& sample : ds.samples)
            set.predictions[sample.video_id] = predict_video(ck.model, sample);
        write_predictions(set, pred_out);
        log_info("wrote " + std::to_string(set.predictions.size()) + " predictions to " + pred_out);
    });

    // --- ensemble ---------------------------------------------------
    auto* ens = app.add_subcommand("ensemble", "average two or more prediction CSVs");
    std::vector<std::string> ens_inputs;
    std::vector<double> ens_weights;
    std::string ens_out;
    ens->add_option("--inputs", ens_inputs, "prediction CSV files")->required()->expected(2, -1);
    ens->add_option("--weights", ens_weights, "optional per-input weights");
    ens->add_option("--out", ens_out, "output prediction CSV")->required();
    ens->callback([&] {
        std::vector<PredictionSet> sets;
        sets.reserve(ens_inputs.size());
        for (const auto& path : ens_inputs) sets.push_back(read_predictions(path));
        PredictionSet combined = ensemble(sets, ens_weights);
        write_predictions(combined, ens_out);
        log_info("ensembled " + std::to_string(sets.size()) + " sets into " + ens_out);
    });

    // --- eval -------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "score predictions against labels");
    std::string eval_pred, eval_data, eval_out, eval_split, eval_side = "val";
    bool eval_quantize = false;
    eval->add_option("--pred", eval_pred, "prediction CSV")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--out", eval_out, "output report JSON")->required();
    eval->add_option("--split", eval_split, "restrict to one side of this split file");
    eval->add_option("--side", eval_side, "train|val (with --split; default val)");
    eval->add_flag("--quantize", eval_quantize, "snap predictions to the nearest level first");
    eval->callback([&] {
        PredictionSet set = read_predictions(eval_pred);
        Dataset ds = read_manifest(fs::path(eval_data) / "manifest.json");
        if (!eval_split.empty()) ds = ds.subset(side_ids(read_split(eval_split), eval_side));
        EvalReport report = evaluate(set, ds, eval_quantize);
        write_report(report, eval_out);
        std::printf("%s", report_table(report).c_str());
    });

    // --- verify -----------------------------------------------------
    auto* verify_cmd = app.add_subcommand("verify", "run property suites");
    std::string suite = "all";
    verify_cmd->add_option("--suite", suite, "grad|loss-oracle|splits|jensen|all");
    bool verify_failed = false;
    verify_cmd->callback([&] {
        for (const auto& result : verify::run_suites(suite)) {
            for (const auto& prop : result.properties)
                std::printf("[%s] %s: %s%s%s\n", result.name.c_str(),
                            prop.passed ? "PASS" : "FAIL", prop.name.c_str(),
                            prop.detail.empty() ? "" : " - ", prop.detail.c_str());
            std::printf("suite %s: %s\n", result.name.c_str(), result.passed() ? "PASS" : "FAIL");
            if (!result.passed()) verify_failed = true;
        }
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return verify_failed ? 1 : 0;
}

} // namespace

int cli_run(const std::vector<std::string>& args) {
    try {
        return run_commands(args);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace engage
