#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hyformer/losses.hpp"
#include "hyformer/rand.hpp"

using namespace hyformer;
using nn::make_const;
using nn::make_leaf;
using nn::RandomSource;
using nn::Tensor;
using nn::Var;

TEST_CASE("dice loss fixtures") {
    Var ones = make_const(Tensor({2, 2}, 1.0));
    CHECK(loss::dice_loss(ones, Tensor({2, 2}, 1.0), 1.0)->value[0] == doctest::Approx(0.0));

    Var zeros = make_const(Tensor({2, 2}, 0.0));
    CHECK(loss::dice_loss(zeros, Tensor({2, 2}, 0.0), 1.0)->value[0] == doctest::Approx(0.0));

    // p=[1,1,0,0], g=[1,0,1,0], eps=1: 1 - (2*1+1)/(2+2+1) = 0.4
    Var p = make_const(Tensor::from({4}, {1, 1, 0, 0}));
    Tensor g = Tensor::from({4}, {1, 0, 1, 0});
    CHECK(loss::dice_loss(p, g, 1.0)->value[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("dice loss range and gradient") {
    RandomSource rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor pv({13});
        Tensor gv({13});
        for (int i = 0; i < 13; ++i) {
            pv[i] = rng.uniform();
            gv[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
        }
        double v = loss::dice_loss(make_const(pv), gv, 1.0)->value[0];
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
    Var z = make_leaf(Tensor::from({6}, {0.1, -0.3, 0.8, 1.2, -0.9, 0.4}), true);
    Tensor g = Tensor::from({6}, {1, 0, 1, 0, 1, 1});
    auto fwd = [&]() { return loss::dice_loss(nn::sigmoid(z), g, 1.0); };
    std::vector<std::pair<Var, std::int64_t>> probes;
    for (int i = 0; i < 6; ++i) probes.emplace_back(z, i);
    CHECK(gradcheck::check_grads(fwd, probes).max_rel_error < 1e-7);
}

TEST_CASE("bce loss fixtures") {
    Var half = make_const(Tensor({3, 3}, 0.5));
    Tensor g({3, 3}, 1.0);
    g[0] = 0.0;
    CHECK(loss::bce_loss(half, g)->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Tensor exact = Tensor::from({4}, {1, 0, 1, 1});
    CHECK(loss::bce_loss(make_const(exact), exact)->value[0] < 1e-5);

    Var p9 = make_const(Tensor::from({1}, {0.9}));
    CHECK(loss::bce_loss(p9, Tensor({1}, 1.0))->value[0] == doctest::Approx(-std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("segmentation loss = dice + bce, with gradient") {
    // perfect prediction -> near zero
    Tensor g = Tensor::from({1, 1, 2, 2}, {1, 0, 0, 1});
    CHECK(loss::segmentation_loss(make_const(g), g, {})->value[0] < 1e-5);

    // additivity against separately computed components
    RandomSource rng(5);
    Tensor pv({1, 1, 4, 4});
    Tensor gv({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) {
        pv[i] = rng.uniform(0.05, 0.95);
        gv[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    }
    double dice = loss::dice_loss(make_const(pv), gv, 1.0)->value[0];
    double bce = loss::bce_loss(make_const(pv), gv)->value[0];
    CHECK(loss::segmentation_loss(make_const(pv), gv, {})->value[0] == doctest::Approx(dice + bce).epsilon(1e-12));

    Var z = make_leaf(Tensor({1, 1, 4, 4}, 0.2), true);
    for (int i = 0; i < 16; ++i) z->value[i] = rng.normal(0, 0.7);
    auto fwd = [&]() { return loss::segmentation_loss(nn::sigmoid(z), gv, {}); };
    std::vector<std::pair<Var, std::int64_t>> probes;
    for (int i = 0; i < 16; ++i) probes.emplace_back(z, i);
    CHECK(gradcheck::check_grads(fwd, probes).max_rel_error < 1e-6);
}

TEST_CASE("batched segmentation loss averages per-sample dice") {
    RandomSource rng(9);
    Tensor pv({2, 1, 3, 3});
    Tensor gv({2, 1, 3, 3});
    for (int i = 0; i < 18; ++i) {
        pv[i] = rng.uniform(0.1, 0.9);
        gv[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    Tensor p0 = Tensor::from({1, 1, 3, 3}, std::vector<double>(pv.vec().begin(), pv.vec().begin() + 9));
    Tensor g0 = Tensor::from({1, 1, 3, 3}, std::vector<double>(gv.vec().begin(), gv.vec().begin() + 9));
    Tensor p1 = Tensor::from({1, 1, 3, 3}, std::vector<double>(pv.vec().begin() + 9, pv.vec().end()));
    Tensor g1 = Tensor::from({1, 1, 3, 3}, std::vector<double>(gv.vec().begin() + 9, gv.vec().end()));
    double d0 = loss::dice_loss(make_const(p0), g0, 1.0)->value[0];
    double d1 = loss::dice_loss(make_const(p1), g1, 1.0)->value[0];
    double b = loss::bce_loss(make_const(pv), gv)->value[0];
    CHECK(loss::segmentation_loss(make_const(pv), gv, {})->value[0] ==
          doctest::Approx((d0 + d1) / 2.0 + b).epsilon(1e-12));
}

TEST_CASE("class weights from counts") {
    auto w = loss::class_weights_from_counts({133, 437, 210});
    CHECK(w[0] == doctest::Approx(780.0 / (3 * 133.0)).epsilon(1e-12));
    CHECK(w[0] == doctest::Approx(1.9549).epsilon(1e-4));
    CHECK(w[1] == doctest::Approx(0.5950).epsilon(1e-4));
    CHECK(w[2] == doctest::Approx(1.2381).epsilon(1e-4));

    auto balanced = loss::class_weights_from_counts({50, 50, 50});
    for (double v : balanced) CHECK(v == doctest::Approx(1.0));

    auto small = loss::class_weights_from_counts({1, 1, 2});
    CHECK(small[0] == doctest::Approx(4.0 / 3.0));
    CHECK(small[1] == doctest::Approx(4.0 / 3.0));
    CHECK(small[2] == doctest::Approx(2.0 / 3.0));

    CHECK_THROWS(loss::class_weights_from_counts({0, 1, 1}));
}

TEST_CASE("weighted cross-entropy fixtures") {
    Tensor probs = Tensor::from({1, 3}, {0.5, 0.3, 0.2});
    Tensor onehot = loss::one_hot({0}, 3);
    CHECK(loss::weighted_ce_loss(make_const(probs), onehot, {1, 1, 1})->value[0] ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(loss::weighted_ce_loss(make_const(probs), onehot, {2, 1, 1})->value[0] ==
          doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    Tensor perfect = Tensor::from({2, 3}, {1, 0, 0, 0, 0, 1});
    CHECK(loss::weighted_ce_loss(make_const(perfect), loss::one_hot({0, 2}, 3), {1, 1, 1})->value[0] < 1e-5);

    CHECK_THROWS(loss::one_hot({3}, 3));
    CHECK_THROWS(loss::one_hot({-1}, 3));
}

TEST_CASE("uniform weights reduce to unweighted cross-entropy exactly") {
    RandomSource rng(17);
    Tensor probs({5, 3});
    std::vector<int> labels;
    for (int i = 0; i < 5; ++i) {
        double a = rng.uniform(0.05, 1.0), b = rng.uniform(0.05, 1.0), c = rng.uniform(0.05, 1.0);
        double s = a + b + c;
        probs.at2(i, 0) = a / s;
        probs.at2(i, 1) = b / s;
        probs.at2(i, 2) = c / s;
        labels.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    Tensor onehot = loss::one_hot(labels, 3);
    double weighted = loss::weighted_ce_loss(make_const(probs), onehot, {1.0, 1.0, 1.0})->value[0];
    double unweighted = 0.0;
    for (int i = 0; i < 5; ++i) unweighted += -std::log(probs.at2(i, labels[static_cast<std::size_t>(i)]));
    unweighted /= 5.0;
    CHECK(std::abs(weighted - unweighted) < 1e-12);
}

TEST_CASE("total loss combination and homogeneity") {
    RandomSource rng(23);
    Tensor seg_p({2, 1, 4, 4});
    Tensor seg_g({2, 1, 4, 4});
    for (int i = 0; i < 32; ++i) {
        seg_p[i] = rng.uniform(0.1, 0.9);
        seg_g[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    }
    Tensor cls_p = Tensor::from({2, 3}, {0.7, 0.2, 0.1, 0.1, 0.6, 0.3});
    Tensor onehot = loss::one_hot({0, 1}, 3);

    loss::LossConfig cfg;  // lambda_seg 1.0, lambda_cls 0.5
    loss::LossBreakdown bd;
    double total = loss::total_loss(make_const(seg_p), seg_g, make_const(cls_p), onehot, cfg, &bd)->value[0];
    CHECK(total == doctest::Approx(1.0 * bd.seg + 0.5 * bd.cls).epsilon(1e-12));
    CHECK(bd.total == doctest::Approx(total));
    CHECK(bd.seg == doctest::Approx(bd.dice + bd.bce).epsilon(1e-9));

    loss::LossConfig pure_seg = cfg;
    pure_seg.lambda_cls = 0.0;
    double seg_only = loss::total_loss(make_const(seg_p), seg_g, make_const(cls_p), onehot, pure_seg)->value[0];
    CHECK(seg_only == doctest::Approx(bd.seg).epsilon(1e-12));

    loss::LossConfig doubled = cfg;
    doubled.lambda_seg = 2.0;
    doubled.lambda_cls = 1.0;
    double twice = loss::total_loss(make_const(seg_p), seg_g, make_const(cls_p), onehot, doubled)->value[0];
    CHECK(twice == doctest::Approx(2.0 * total).epsilon(1e-12));
}

TEST_CASE("all losses are non-negative on random inputs") {
    RandomSource rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        Tensor p({1, 1, 5, 5});
        Tensor g({1, 1, 5, 5});
        for (int i = 0; i < 25; ++i) {
            p[i] = rng.uniform();
            g[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
        CHECK(loss::dice_loss(make_const(p), g, 1.0)->value[0] >= 0.0);
        CHECK(loss::bce_loss(make_const(p), g)->value[0] >= 0.0);
        CHECK(loss::segmentation_loss(make_const(p), g, {})->value[0] >= 0.0);
    }
}

TEST_CASE("total loss gradient matches finite differences") {
    RandomSource rng(37);
    Var seg_z = make_leaf(Tensor({1, 1, 4, 4}), true);
    Var cls_z = make_leaf(Tensor({1, 3}), true);
    for (int i = 0; i < 16; ++i) seg_z->value[i] = rng.normal(0, 0.5);
    for (int i = 0; i < 3; ++i) cls_z->value[i] = rng.normal(0, 0.5);
    Tensor g({1, 1, 4, 4});
    for (int i = 0; i < 16; ++i) g[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    Tensor onehot = loss::one_hot({1}, 3);
    loss::LossConfig cfg;
    cfg.class_weights = {1.9, 0.6, 1.2};
    auto fwd = [&]() {
        return loss::total_loss(nn::sigmoid(seg_z), g, nn::softmax_lastdim(cls_z), onehot, cfg);
    };
    std::vector<std::pair<Var, std::int64_t>> probes;
    for (int i = 0; i < 16; ++i) probes.emplace_back(seg_z, i);
    for (int i = 0; i < 3; ++i) probes.emplace_back(cls_z, i);
    CHECK(gradcheck::check_grads(fwd, probes).max_rel_error < 1e-3);
}

TEST_CASE("loss config validation") {
    loss::LossConfig bad;
    bad.dice_smooth = 0.0;
    CHECK_THROWS(bad.validate());
    bad = {};
    bad.lambda_seg = -1.0;
    CHECK_THROWS(bad.validate());
    bad = {};
    bad.class_weights = {1.0, 0.0, 1.0};
    CHECK_THROWS(bad.validate());
}
