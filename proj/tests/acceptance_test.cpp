// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Heavier criteria reuse one shared synthetic dataset and one split; the
// ten learnability trainings run on a small worker pool (each run is
// internally sequential and seeded, so results do not depend on the
// scheduling).

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "engage/checkpoint.hpp"
#include "engage/cli.hpp"
#include "engage/common.hpp"
#include "engage/evalens.hpp"
#include "engage/grad_check.hpp"
#include "engage/losses.hpp"
#include "engage/manifest.hpp"
#include "engage/model.hpp"
#include "engage/rng.hpp"
#include "engage/splits.hpp"
#include "engage/synth.hpp"
#include "engage/training.hpp"
#include "engage/verify.hpp"

using namespace engage;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

double now_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

void report(const char* id, bool passed, const std::string& detail, double elapsed) {
    std::printf("[%s] %s: %s (%.1fs)\n", passed ? "PASS" : "FAIL", id, detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

// --------------------------------------------------------------- C1
void criterion_gradients() {
    double t0 = now_s();
    verify::SuiteResult suite = verify::run_grad_suite();
    std::string worst;
    for (const auto& p : suite.properties)
        if (!p.passed) worst += p.name + "; ";
    double elapsed = now_s() - t0;
    bool in_time = elapsed < 10.0;
    report("C1 gradient-correctness",
           suite.passed() && in_time,
           suite.passed() ? "rel err < 1e-6 on 5 seeds (tiny model, mse + 0.01*crl, eps=1e-5)"
                          : "failed: " + worst,
           elapsed);
}

// --------------------------------------------------------------- C2
double oracle_l2(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

void oracle_rank(const std::array<Embedding, 4>& c, double delta, double& r1, double& r2) {
    double d1[3], d2[2], d3;
    for (int i = 0; i < 3; ++i) d1[i] = oracle_l2(c[i], c[i + 1]);
    for (int i = 0; i < 2; ++i) d2[i] = oracle_l2(c[i], c[i + 2]);
    d3 = oracle_l2(c[0], c[3]);
    r1 = r2 = 0.0;
    for (int i = 0; i <= 1; ++i)
        for (int j = 0; j <= 2; ++j) r1 += std::max(0.0, delta - (d2[i] - d1[j]));
    for (int j = 0; j <= 2; ++j) r2 += std::max(0.0, 2.0 * delta - (d3 - d1[j]));
}

void criterion_rank_oracle() {
    double t0 = now_s();
    Rng rng(2211);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        CenterBank bank(1 + static_cast<int>(rng.uniform_int(6)));
        for (auto& c : bank.centers)
            for (double& v : c) v = rng.uniform(-2.0, 2.0);
        double delta = rng.uniform(0.05, 2.5);
        RankLossResult got = rank_losses(bank, delta);
        double w1 = 0.0, w2 = 0.0;
        oracle_rank(bank.centers, delta, w1, w2);
        worst = std::max({worst, std::fabs(got.rank1 - w1), std::fabs(got.rank2 - w2)});
    }

    bool edge_ok = true;
    for (double delta : {0.5, 1.0, 2.0}) {
        CenterBank coincident(3);
        RankLossResult res = rank_losses(coincident, delta);
        if (res.rank1 != 6.0 * delta || res.rank2 != 6.0 * delta) edge_ok = false;
    }
    CenterBank line(1);
    for (int l = 0; l < 4; ++l) line.centers[static_cast<size_t>(l)][0] = l;
    RankLossResult collinear = rank_losses(line, 0.5);
    if (collinear.rank1 != 0.0 || collinear.rank2 != 0.0) edge_ok = false;

    double elapsed = now_s() - t0;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "1000 banks max |impl - oracle| = %.2e (<= 1e-12); coincident = (6d, 6d); "
                  "collinear = (0, 0)",
                  worst);
    report("C2 rank-loss-oracle", worst <= 1e-12 && edge_ok && elapsed < 5.0, buf, elapsed);
}

// --------------------------------------------------------------- C3
void criterion_mil_contract() {
    double t0 = now_s();
    Rng rng(37);
    bool ok = true;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        RegressionModel m = init_model(ModalityTag::pose, ModelDims{8, 6, 4}, seed);
        VideoSample sample;
        sample.video_id = "v";
        sample.subject_id = "s";
        sample.label = EngagementLevel::from_index(2);
        SegmentFeatures segs(5, FeatureVector(28));
        for (auto& s : segs)
            for (double& v : s) v = rng.uniform(-1.0, 1.0);
        sample.segments[ModalityTag::pose] = segs;

        ForwardTrace tr = forward(m, segs);
        double mean = 0.0;
        for (double r : tr.scores) mean += r;
        mean /= static_cast<double>(tr.scores.size());
        if (std::fabs(predict_video(m, sample) - mean) > 1e-12) ok = false;
    }

    MseResult hand = mse_loss({0.5, 0.5}, {0.33, 0.66});
    bool mse_ok = std::fabs(hand.loss - 0.02725) <= 1e-12;
    report("C3 eq1-mil-contract", ok && mse_ok,
           "predict_video = (1/k) sum r_t to 1e-12; mse(0.5,0.5 ; 0.33,0.66) = 0.02725",
           now_s() - t0);
}

// --------------------------------------------------------------- C4
void criterion_schedule() {
    double t0 = now_s();
    OptimConfig cfg; // lr0 0.01, x0.1 every 20 epochs, 60 epochs
    bool anchors = std::fabs(lr_at(0, cfg) - 0.01) <= 1e-12 &&
                   std::fabs(lr_at(20, cfg) - 0.001) <= 1e-12 &&
                   std::fabs(lr_at(40, cfg) - 0.0001) <= 1e-12;

    // tiny 60-epoch run; the history lr column must equal lr_at exactly
    Dataset toy = synth_generate(SynthConfig{2, 2, 3, 5.0, 0.1}, 808);
    TrainSetup setup;
    setup.dims = ModelDims{4, 4, 3};
    setup.optim.batch_size = 4;
    setup.optim.seed = 5;
    TrainResult res = train_modality(toy, toy, ModalityTag::gaze, setup);
    bool history_ok = res.history.epochs.size() == 60;
    for (int e = 0; e < 60 && history_ok; ++e)
        if (res.history.epochs[static_cast<size_t>(e)].lr != lr_at(e, setup.optim))
            history_ok = false;

    report("C4 schedule-exactness", anchors && history_ok,
           "lr_at(0/20/40) = 0.01/0.001/0.0001; 60-epoch history lr column matches lr_at exactly",
           now_s() - t0);
}

// --------------------------------------------------------------- C5 / C6
void criterion_from_suite(const char* id, verify::SuiteResult suite, double t0) {
    std::string detail;
    for (const auto& p : suite.properties) {
        if (!detail.empty()) detail += "; ";
        detail += p.name + (p.passed ? " ok" : " FAILED (" + p.detail + ")");
    }
    report(id, suite.passed(), detail, now_s() - t0);
}

// --------------------------------------------------------------- C7 / C9
struct TrainJob {
    ModalityTag modality;
    uint64_t seed;
    double val_mse = 0.0;
    CenterDistances final_distances;
    PredictionSet val_predictions;
};

void criterion_learnability_and_ablation() {
    double t0 = now_s();
    Dataset ds = synth_generate(SynthConfig{10, 20, 10, 5.0, 0.1}, 20250808);
    SplitSpec split = make_splits(ds, 1, 147.0 / 195.0, 1)[0];
    Dataset train = ds.subset(split.train_ids);
    Dataset val = ds.subset(split.val_ids);

    double mean_label = 0.0;
    for (const auto& s : train.samples) mean_label += s.label.value();
    mean_label /= static_cast<double>(train.samples.size());
    double baseline = 0.0;
    for (const auto& s : val.samples) {
        double d = s.label.value() - mean_label;
        baseline += d * d;
    }
    baseline /= static_cast<double>(val.samples.size());

    std::vector<TrainJob> jobs;
    for (ModalityTag modality : {ModalityTag::gaze, ModalityTag::pose})
        for (uint64_t seed = 1; seed <= 5; ++seed) jobs.push_back({modality, seed, 0.0, {}, {}});

    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            TrainJob& job = jobs[i];
            TrainSetup setup; // defaults: 60 epochs, lambda 0.01, delta 1, H 64/512/128
            setup.optim.seed = job.seed;
            TrainResult res = train_modality(train, val, job.modality, setup);
            job.val_mse = res.history.epochs.back().val_mse;
            job.final_distances = center_distances(res.bank);
            for (const auto& s : val.samples)
                job.val_predictions.predictions[s.video_id] = predict_video(res.model, s);
        }
    };
    unsigned n_workers = std::max(1u, std::min(2u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::map<std::string, double> labels;
    for (const auto& s : val.samples) labels[s.video_id] = s.label.value();

    int gaze_wins = 0, pose_wins = 0, ensemble_ok = 0, ordering_ok = 0;
    double worst_ratio = 0.0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        const TrainJob* gaze = nullptr;
        const TrainJob* pose = nullptr;
        for (const auto& j : jobs)
            if (j.seed == seed) (j.modality == ModalityTag::gaze ? gaze : pose) = &j;

        if (gaze->val_mse < 0.5 * baseline) ++gaze_wins;
        if (pose->val_mse < 0.5 * baseline) ++pose_wins;
        worst_ratio = std::max({worst_ratio, gaze->val_mse / baseline, pose->val_mse / baseline});

        PredictionSet ens = ensemble({gaze->val_predictions, pose->val_predictions});
        auto mse_of = [&labels](const PredictionSet& set) {
            double sum = 0.0;
            for (const auto& [id, y] : labels) {
                double d = set.predictions.at(id) - y;
                sum += d * d;
            }
            return sum / static_cast<double>(labels.size());
        };
        double worse = std::max(mse_of(gaze->val_predictions), mse_of(pose->val_predictions));
        if (mse_of(ens) <= worse + 1e-12) ++ensemble_ok;

        const CenterDistances& d = pose->final_distances;
        double m1 = (d.d1[0] + d.d1[1] + d.d1[2]) / 3.0;
        double m2 = (d.d2[0] + d.d2[1]) / 2.0;
        if (d.d3 > m2 && m2 > m1) ++ordering_ok;
    }

    double elapsed = now_s() - t0;
    {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "val MSE < 0.5 x mean-baseline (%.4f): gaze %d/5, pose %d/5 (worst ratio "
                      "%.2f); ensemble <= worse modality on %d/5 seeds",
                      baseline, gaze_wins, pose_wins, worst_ratio, ensemble_ok);
        report("C7 synthetic-learnability",
               gaze_wins >= 4 && pose_wins >= 4 && ensemble_ok == 5 && elapsed < 300.0, buf,
               elapsed);
    }
    {
        char buf[120];
        std::snprintf(buf, sizeof buf,
                      "final pose center banks ordered d3 > mean d2 > mean d1 on %d/5 seeds",
                      ordering_ok);
        report("C9 crl-ablation-direction", ordering_ok >= 4, buf, now_s() - t0);
    }
}

// --------------------------------------------------------------- C8
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("missing " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void criterion_determinism() {
    double t0 = now_s();
    fs::path tmp = fs::temp_directory_path() / "engage_acceptance_determinism";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    LogLevel saved = log_level();
    set_log_level(LogLevel::quiet);

    bool ok = true;
    std::string detail = "cmd_train twice with seed 77: checkpoint and history byte-identical";
    try {
        if (cli_run({"synth", "--out", (tmp / "data").string(), "--subjects", "5",
                     "--videos-per-subject", "4", "--k", "5", "--seed", "31"}) != 0)
            throw ValidationError("synth failed");
        if (cli_run({"split", "--data", (tmp / "data").string(), "--out", (tmp / "splits").string(),
                     "--n", "1", "--ratio", "0.6", "--seed", "8"}) != 0)
            throw ValidationError("split failed");

        std::ofstream cfg(tmp / "cfg.json");
        cfg << R"({"epochs": 3, "hidden": 8, "head1": 8, "head2": 4, "batch_size": 8})";
        cfg.close();

        for (const char* out : {"r1", "r2"})
            if (cli_run({"train", "--data", (tmp / "data").string(), "--split",
                         (tmp / "splits" / "split_1.json").string(), "--modality", "gaze", "--out",
                         (tmp / out).string(), "--config", (tmp / "cfg.json").string(), "--seed",
                         "77"}) != 0)
                throw ValidationError("train failed");

        ok = slurp(tmp / "r1" / "gaze_split_1_checkpoint.json") ==
                 slurp(tmp / "r2" / "gaze_split_1_checkpoint.json") &&
             slurp(tmp / "r1" / "gaze_split_1_history.csv") ==
                 slurp(tmp / "r2" / "gaze_split_1_history.csv");
        if (!ok) detail = "outputs differ between identical runs";
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("pipeline error: ") + e.what();
    }
    set_log_level(saved);
    fs::remove_all(tmp);
    report("C8 determinism", ok, detail, now_s() - t0);
}

} // namespace

int main() {
    std::printf("acceptance suite (primary criteria)\n");
    criterion_gradients();
    criterion_rank_oracle();
    criterion_mil_contract();
    criterion_schedule();
    {
        double t0 = now_s();
        criterion_from_suite("C5 split-properties", verify::run_splits_suite(), t0);
    }
    {
        double t0 = now_s();
        criterion_from_suite("C6 ensemble-jensen", verify::run_jensen_suite(), t0);
    }
    criterion_learnability_and_ablation();
    criterion_determinism();

    std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
