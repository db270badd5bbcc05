#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "engage/common.hpp"
#include "engage/manifest.hpp"
#include "engage/synth.hpp"
#include "engage/training.hpp"

using namespace engage;
namespace fs = std::filesystem;

namespace {

// Four-video toy dataset, one per level, single subject pair.
Dataset toy_dataset(uint64_t seed) {
    Dataset ds = synth_generate(SynthConfig{2, 2, 4, 5.0, 0.05}, seed);
    // force one label per level for a balanced toy problem
    for (int i = 0; i < 4; ++i) ds.samples[static_cast<size_t>(i)].label = EngagementLevel::from_index(i);
    return ds;
}

TrainSetup tiny_setup(int epochs, uint64_t seed) {
    TrainSetup setup;
    setup.dims = ModelDims{6, 6, 4};
    setup.optim.epochs = epochs;
    setup.optim.batch_size = 4;
    setup.optim.seed = seed;
    return setup;
}

} // namespace

TEST_CASE("lr_at follows the staircase schedule") {
    OptimConfig cfg;
    CHECK(lr_at(0, cfg) == 0.01);
    CHECK(lr_at(19, cfg) == 0.01);
    CHECK(lr_at(20, cfg) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(lr_at(39, cfg) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(lr_at(40, cfg) == doctest::Approx(0.0001).epsilon(1e-15));
    CHECK(lr_at(59, cfg) == doctest::Approx(0.0001).epsilon(1e-15));
    CHECK_THROWS_AS(lr_at(-1, cfg), ValidationError);
    CHECK_THROWS_AS(lr_at(60, cfg), ValidationError);
}

TEST_CASE("sgd_step degenerate and hand-computed cases") {
    SUBCASE("no momentum, no decay: plain gradient descent") {
        Param w(Matrix::from_rows({{1.0, -2.0}}));
        w.grad = Matrix::from_rows({{0.5, 0.25}});
        Matrix v(1, 2);
        sgd_step(w, v, 0.1, 0.0, 0.0);
        CHECK(w.value.at(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5));
        CHECK(w.value.at(0, 1) == doctest::Approx(-2.0 - 0.1 * 0.25));
    }

    SUBCASE("zero gradient and velocity: pure weight-decay shrinkage") {
        Param w(Matrix::from_rows({{4.0}}));
        Matrix v(1, 1);
        sgd_step(w, v, 0.1, 0.9, 0.01);
        CHECK(w.value.at(0, 0) == doctest::Approx(4.0 * (1.0 - 0.1 * 0.01)));
    }

    SUBCASE("two steps on a 1-D quadratic match a hand-rolled trajectory") {
        // f(w) = w^2, grad = 2w; lr 0.1, momentum 0.9, no decay.
        Param w(Matrix::from_rows({{1.0}}));
        Matrix v(1, 1);

        double hw = 1.0, hv = 0.0;
        for (int step = 0; step < 2; ++step) {
            w.grad.at(0, 0) = 2.0 * w.value.at(0, 0);
            sgd_step(w, v, 0.1, 0.9, 0.0);
            double hg = 2.0 * hw;
            hv = 0.9 * hv - 0.1 * hg;
            hw += hv;
            CHECK(w.value.at(0, 0) == doctest::Approx(hw).epsilon(1e-15));
        }
        // step 1: v=-0.2, w=0.8; step 2: v=0.9*(-0.2)-0.1*1.6=-0.34, w=0.46
        CHECK(w.value.at(0, 0) == doctest::Approx(0.46).epsilon(1e-12));
    }

    SUBCASE("shape mismatch rejected") {
        Param w(Matrix(2, 2));
        Matrix v(1, 2);
        CHECK_THROWS_AS(sgd_step(w, v, 0.1, 0.9, 0.0), ValidationError);
    }
}

TEST_CASE("train_modality validates inputs") {
    Dataset ds = toy_dataset(1);
    TrainSetup setup = tiny_setup(0, 1);
    CHECK_THROWS_WITH_AS(train_modality(ds, ds, ModalityTag::gaze, setup),
                         doctest::Contains("epochs"), ValidationError);

    setup = tiny_setup(1, 1);
    Dataset empty;
    CHECK_THROWS_AS(train_modality(empty, ds, ModalityTag::gaze, setup), ValidationError);
    CHECK_THROWS_AS(train_modality(ds, empty, ModalityTag::gaze, setup), ValidationError);

    Dataset no_pose = ds;
    for (auto& s : no_pose.samples) s.segments.erase(ModalityTag::pose);
    CHECK_THROWS_WITH_AS(train_modality(no_pose, ds, ModalityTag::pose, setup),
                         doctest::Contains("pose"), ValidationError);
}

TEST_CASE("lr=0 leaves parameters untouched for any number of epochs") {
    Dataset ds = toy_dataset(2);
    TrainSetup setup = tiny_setup(3, 7);
    setup.optim.lr0 = 0.0;

    RegressionModel reference = init_model(ModalityTag::gaze, setup.dims, setup.optim.seed);
    TrainResult res = train_modality(ds, ds, ModalityTag::gaze, setup);

    auto got = res.model.params();
    auto want = reference.params();
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(got[i].param->value == want[i].param->value);
}

TEST_CASE("training loss decreases over the first epochs on the toy dataset") {
    int passing_seeds = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Dataset ds = toy_dataset(seed);
        TrainSetup setup = tiny_setup(5, seed);
        setup.rank.lambda_crl = 0.0;
        TrainResult res = train_modality(ds, ds, ModalityTag::gaze, setup);
        bool monotone = true;
        for (size_t e = 1; e < res.history.epochs.size(); ++e)
            if (res.history.epochs[e].train_loss > res.history.epochs[e - 1].train_loss)
                monotone = false;
        if (monotone) ++passing_seeds;
    }
    CHECK(passing_seeds >= 4); // momentum overshoot tolerance
}

TEST_CASE("history lr column equals lr_at exactly and has one row per epoch") {
    Dataset ds = toy_dataset(3);
    TrainSetup setup = tiny_setup(45, 11);
    setup.optim.lr_step_epochs = 20;
    TrainResult res = train_modality(ds, ds, ModalityTag::gaze, setup);
    REQUIRE(res.history.epochs.size() == 45);
    for (int e = 0; e < 45; ++e) {
        CHECK(res.history.epochs[static_cast<size_t>(e)].lr == lr_at(e, setup.optim));
        CHECK(res.history.epochs[static_cast<size_t>(e)].epoch == e);
    }
}

TEST_CASE("weight decay skips biases") {
    // zero gradients by pinning lambda and using identical predictions:
    // easiest construction is a direct optimizer-level check.
    RegressionModel m = init_model(ModalityTag::gaze, ModelDims{3, 3, 2}, 5);
    m.head.b3.value.fill(2.0);
    auto params = m.params();
    zero_grads(params);
    SgdMomentum opt(params);
    Matrix w1_before = m.head.w1.value;
    opt.step(params, 0.1, 0.0, 0.5);

    // bias untouched, weights shrunk by (1 - lr*wd)
    CHECK(m.head.b3.value.at(0, 0) == 2.0);
    for (size_t i = 0; i < m.head.w1.value.size(); ++i)
        CHECK(m.head.w1.value.data()[i] ==
              doctest::Approx(w1_before.data()[i] * (1.0 - 0.1 * 0.5)).epsilon(1e-15));
}

TEST_CASE("same seed twice gives identical history, different seed differs") {
    Dataset ds = toy_dataset(4);
    TrainSetup setup = tiny_setup(4, 9);
    TrainResult a = train_modality(ds, ds, ModalityTag::gaze, setup);
    TrainResult b = train_modality(ds, ds, ModalityTag::gaze, setup);
    REQUIRE(a.history.epochs.size() == b.history.epochs.size());
    for (size_t e = 0; e < a.history.epochs.size(); ++e) {
        CHECK(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
        CHECK(a.history.epochs[e].val_mse == b.history.epochs[e].val_mse);
    }

    setup.optim.seed = 10;
    TrainResult c = train_modality(ds, ds, ModalityTag::gaze, setup);
    CHECK(a.history.epochs.back().train_loss != c.history.epochs.back().train_loss);
}

TEST_CASE("non-finite loss aborts with epoch and batch diagnostics") {
    Dataset ds = toy_dataset(6);
    TrainSetup setup = tiny_setup(50, 2);
    setup.optim.lr0 = 1e18; // guaranteed blow-up
    setup.optim.lr_step_epochs = 1000;
    try {
        train_modality(ds, ds, ModalityTag::gaze, setup);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        std::string msg = e.what();
        CHECK(msg.find("epoch") != std::string::npos);
    }
}

TEST_CASE("history CSV layout") {
    Dataset ds = toy_dataset(8);
    TrainSetup setup = tiny_setup(2, 3);
    TrainResult res = train_modality(ds, ds, ModalityTag::gaze, setup);

    fs::path path = fs::temp_directory_path() /
                    ("engage_hist_" + std::to_string(::getpid()) + ".csv");
    res.history.write_csv(path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,lr,train_loss,train_mse,val_mse");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    fs::remove(path);
}

TEST_CASE("mse-only training beats the predict-the-mean baseline on synthetic data") {
    // 200 videos, noise 0.1, lambda = 0: the MSE path alone must learn.
    Dataset ds = synth_generate(SynthConfig{10, 20, 10, 5.0, 0.1}, 515);
    Dataset train, val;
    for (size_t i = 0; i < ds.samples.size(); ++i)
        // subject-blocked split: first 8 subjects train, last 2 validate
        (ds.samples[i].subject_id < "s08" ? train : val).samples.push_back(ds.samples[i]);
    REQUIRE(!val.samples.empty());

    double mean = 0.0;
    for (const auto& s : train.samples) mean += s.label.value();
    mean /= static_cast<double>(train.samples.size());
    double baseline = 0.0;
    for (const auto& s : val.samples) {
        double d = s.label.value() - mean;
        baseline += d * d;
    }
    baseline /= static_cast<double>(val.samples.size());

    TrainSetup setup; // paper defaults: 60 epochs, lr 0.01 decayed, H=64
    setup.rank.lambda_crl = 0.0;
    setup.optim.seed = 2024;
    TrainResult res = train_modality(train, val, ModalityTag::gaze, setup);
    CHECK(res.history.epochs.back().val_mse < 0.5 * baseline);
}
