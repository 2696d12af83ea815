// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one [PASS]/[FAIL] line per criterion. Exit code 0 only when all
// criteria hold.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "hyformer/ensemble.hpp"
#include "hyformer/interpret.hpp"
#include "hyformer/losses.hpp"
#include "hyformer/metrics.hpp"
#include "hyformer/stats.hpp"
#include "hyformer/train.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using namespace hyformer;
using nn::make_const;
using nn::make_leaf;
using nn::RandomSource;
using nn::Tensor;
using nn::Var;

namespace {

struct Checker {
    std::vector<std::string> failures;
    void expect(bool cond, const std::string& what) {
        if (!cond) failures.push_back(what);
    }
    void expect_near(double got, double want, double tol, const std::string& what) {
        if (!(std::abs(got - want) <= tol)) {
            std::ostringstream os;
            os << what << ": got " << got << ", want " << want << " +/- " << tol;
            failures.push_back(os.str());
        }
    }
};

ModelConfig tiny_config(int input = 32) {
    ModelConfig cfg;
    cfg.input_size = input;
    cfg.cnn.stage_channels = {8, 12, 16, 24};
    cfg.swin.stage_channels = {8, 16, 32, 64};
    cfg.swin.heads = {1, 2, 4, 8};
    cfg.fusion_channels = {8, 12, 16, 24};
    cfg.decoder_channels = {16, 12, 8};
    cfg.final_channels = {8, 8};
    cfg.cls_hidden = 24;
    return cfg;
}

data::PreprocessConfig preprocess_at(int size) {
    data::PreprocessConfig pcfg;
    pcfg.target_size = size;
    return pcfg;
}

train::TrainConfig train_config(int epochs, double lr, std::uint64_t seed, int batch = 4) {
    train::TrainConfig tcfg;
    tcfg.epochs = epochs;
    tcfg.patience = epochs;
    tcfg.lr_init = lr;
    tcfg.weight_decay = 0.0;
    tcfg.grad_clip_norm = 5.0;
    tcfg.batch_size = batch;
    tcfg.seed = seed;
    return tcfg;
}

// ---- criteria ----

void shape_range_suite(Checker& c) {
    ModelConfig cfg;  // toy defaults: cnn (16,32,64,128), swin embed 24
    HyFormerNet model(cfg, 42);
    RandomSource rng(1);
    for (int size : {64, 128, 224}) {
        Tensor image({1, 3, size, size});
        for (std::int64_t i = 0; i < image.numel(); ++i) image[i] = rng.uniform();
        ModelOutput out = model.forward(image);
        c.expect(out.seg_probs->value.shape() == std::vector<int>{1, 1, size, size},
                 "seg map at input resolution for size " + std::to_string(size));
        c.expect(out.seg_probs->value.min() >= 0.0 && out.seg_probs->value.max() <= 1.0,
                 "seg probabilities within [0,1] for size " + std::to_string(size));
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += out.class_probs->value.at2(0, k);
        c.expect(std::abs(sum - 1.0) < 1e-5, "class probabilities on the 3-simplex for size " + std::to_string(size));
        c.expect(out.class_probs->value.min() >= 0.0, "class probabilities non-negative");
    }
}

void gradient_check(Checker& c) {
    HyFormerNet model(tiny_config(32), 7);
    RandomSource rng(3);
    Tensor image({2, 3, 32, 32});
    for (std::int64_t i = 0; i < image.numel(); ++i) image[i] = rng.uniform();
    Tensor masks({2, 1, 32, 32});
    for (std::int64_t i = 0; i < masks.numel(); ++i) masks[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
    Tensor onehot = loss::one_hot({1, 2}, 3);
    loss::LossConfig lcfg;  // lambda_seg 1.0, lambda_cls 0.5

    auto params = model.params().param_vars();
    auto forward = [&]() {
        ModelOutput out = model.forward(make_const(image), /*training=*/true);
        return loss::total_loss(out.seg_probs, masks, out.class_probs, onehot, lcfg);
    };
    Var loss_node = forward();
    nn::zero_grad(params);
    nn::backward(loss_node);

    // 20+ probes spread over every parameter tensor in a fixed pattern
    std::vector<std::pair<Var, std::int64_t>> probes;
    RandomSource pick(11);
    while (probes.size() < 24) {
        const auto& [name, v] = model.params().params[pick.uniform_int(model.params().params.size())];
        probes.emplace_back(v, static_cast<std::int64_t>(pick.uniform_int(static_cast<std::uint64_t>(v->value.numel()))));
    }
    double worst = 0.0;
    for (auto& [leaf, idx] : probes) {
        double analytic = leaf->grad.empty() ? 0.0 : leaf->grad[idx];
        // small step: the training-mode loss surface has ReLU kinks whose
        // O(step) truncation error dominates at coarser steps; double
        // precision keeps cancellation noise orders below the tolerance
        const double step = 1e-6;
        double saved = leaf->value[idx];
        leaf->value[idx] = saved + step;
        double up = forward()->value[0];
        leaf->value[idx] = saved - step;
        double down = forward()->value[0];
        leaf->value[idx] = saved;
        double numeric = (up - down) / (2.0 * step);
        double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, rel);
    }
    std::ostringstream os;
    os << "max relative gradient error " << worst << " over " << probes.size() << " parameters";
    c.expect(worst < 1e-3, os.str());
}

void metric_oracles(Checker& c) {
    RandomSource rng(41);
    bool all_exact = true, identity_ok = true;
    for (int trial = 0; trial < 500; ++trial) {
        Tensor p({8, 8}), g({8, 8});
        for (int i = 0; i < 64; ++i) {
            p[i] = rng.uniform() < rng.uniform() ? 1.0 : 0.0;
            g[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        }
        std::set<int> sp, sg;
        for (int i = 0; i < 64; ++i) {
            if (p[i] == 1.0) sp.insert(i);
            if (g[i] == 1.0) sg.insert(i);
        }
        std::vector<int> inter;
        std::set_intersection(sp.begin(), sp.end(), sg.begin(), sg.end(), std::back_inserter(inter));
        double dice_oracle = sp.empty() && sg.empty()
                                 ? 1.0
                                 : 2.0 * static_cast<double>(inter.size()) / static_cast<double>(sp.size() + sg.size());
        double uni = static_cast<double>(sp.size() + sg.size() - inter.size());
        double iou_oracle = uni == 0.0 ? 1.0 : static_cast<double>(inter.size()) / uni;
        double d = metrics::dice_score(p, g), i = metrics::iou_score(p, g);
        all_exact = all_exact && d == dice_oracle && i == iou_oracle;
        identity_ok = identity_ok && std::abs(d - 2.0 * i / (1.0 + i)) < 1e-12;
    }
    c.expect(all_exact, "dice/iou equal brute-force set counting on 500 random 8x8 pairs");
    c.expect(identity_ok, "Dice = 2*IoU/(1+IoU) to 1e-12");

    auto [mean, stddev] = stats::aggregate_seed_stats({0.681, 0.821, 0.783});
    // the published aggregate truncates the exact mean 0.761667; one unit of
    // the printed precision is the attainable tolerance for the mean
    c.expect_near(mean, 0.761, 1e-3, "per-seed fixture mean vs published aggregate");
    c.expect_near(stddev, 0.072, 5e-4, "per-seed fixture std vs published aggregate");
}

void loss_fixtures(Checker& c) {
    Var p = make_const(Tensor::from({4}, {1, 1, 0, 0}));
    Tensor g = Tensor::from({4}, {1, 0, 1, 0});
    c.expect(loss::dice_loss(p, g, 1.0)->value[0] == 0.4, "dice_loss(P=[1,1,0,0], G=[1,0,1,0], eps=1) == 0.4");

    Var empty = make_const(Tensor({3, 3}));
    c.expect(loss::dice_loss(empty, Tensor({3, 3}), 1.0)->value[0] == 0.0, "both-empty dice_loss == 0");

    RandomSource rng(17);
    Tensor probs({6, 3});
    std::vector<int> labels;
    for (int i = 0; i < 6; ++i) {
        double a = rng.uniform(0.05, 1.0), b = rng.uniform(0.05, 1.0), d = rng.uniform(0.05, 1.0);
        double s = a + b + d;
        probs.at2(i, 0) = a / s;
        probs.at2(i, 1) = b / s;
        probs.at2(i, 2) = d / s;
        labels.push_back(static_cast<int>(rng.uniform_int(3)));
    }
    Tensor onehot = loss::one_hot(labels, 3);
    double weighted = loss::weighted_ce_loss(make_const(probs), onehot, {1, 1, 1})->value[0];
    double unweighted = 0.0;
    for (int i = 0; i < 6; ++i) unweighted += -std::log(probs.at2(i, labels[static_cast<std::size_t>(i)]));
    unweighted /= 6.0;
    c.expect(std::abs(weighted - unweighted) < 1e-12, "uniform-weight CE equals unweighted CE to 1e-12");
}

void otsu_and_opening(Checker& c) {
    RandomSource rng(19);
    bool otsu_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int bins = 48;
        Tensor map({10, 10});
        for (int i = 0; i < 100; ++i) map[i] = trial % 2 ? rng.uniform() : rng.uniform() * rng.uniform();
        auto res = interpret::otsu_threshold(map, bins);
        double lo = map.min(), hi = map.max();
        std::vector<std::int64_t> hist(bins, 0);
        for (int i = 0; i < 100; ++i)
            hist[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((map[i] - lo) / (hi - lo) * bins)))]++;
        double best = -1.0;
        int best_k = 1;
        for (int k = 1; k < bins; ++k) {
            double w0 = 0, w1 = 0, mu0 = 0, mu1 = 0;
            for (int b = 0; b < bins; ++b) {
                double value = lo + (b + 0.5) * (hi - lo) / bins;
                (b < k ? w0 : w1) += static_cast<double>(hist[static_cast<std::size_t>(b)]);
                (b < k ? mu0 : mu1) += value * static_cast<double>(hist[static_cast<std::size_t>(b)]);
            }
            if (w0 == 0 || w1 == 0) continue;
            double between = w0 * w1 * (mu0 / w0 - mu1 / w1) * (mu0 / w0 - mu1 / w1);
            if (between > best + 1e-12) {
                best = between;
                best_k = k;
            }
        }
        otsu_ok = otsu_ok && res.bin_index == best_k;
    }
    c.expect(otsu_ok, "otsu threshold equals exhaustive inter-class-variance argmax (100 maps, exact bins)");

    bool open_ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor m({9, 9});
        for (int i = 0; i < 81; ++i) m[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
        Tensor once = interpret::morphological_open(m);
        Tensor twice = interpret::morphological_open(once);
        for (int i = 0; i < 81; ++i) open_ok = open_ok && once[i] == twice[i] && once[i] <= m[i];
    }
    c.expect(open_ok, "opening is idempotent and anti-extensive on 100 random masks");
}

void grad_cam_fixtures(Checker& c) {
    Tensor features({2, 2, 2}, 1.0);
    auto zero = interpret::grad_cam_from_features(features, Tensor({2, 2, 2}), 4, 4);
    c.expect(zero.heatmap.max() == 0.0, "zero gradients give a zero heatmap");

    Tensor a = Tensor::from({2, 2, 2}, {1, 0, 0, 0, 0, 0, 0, 1});
    Tensor g = Tensor::from({2, 2, 2}, {1, 1, 1, 1, -1, -1, -1, -1});
    auto res = interpret::grad_cam_from_features(a, g, 2, 2);
    c.expect(res.heatmap.at2(0, 0) == 1.0 && res.heatmap.at2(0, 1) == 0.0 && res.heatmap.at2(1, 0) == 0.0 &&
                 res.heatmap.at2(1, 1) == 0.0,
             "hand fixture yields ReLU(A1 - A2)");

    RandomSource rng(23);
    bool nonneg = true;
    for (int trial = 0; trial < 100; ++trial) {
        Tensor f({3, 5, 5}), gr({3, 5, 5});
        for (std::int64_t i = 0; i < f.numel(); ++i) {
            f[i] = rng.normal(0, 1);
            gr[i] = rng.normal(0, 1);
        }
        nonneg = nonneg && interpret::grad_cam_from_features(f, gr, 10, 10).heatmap.min() >= 0.0;
    }
    c.expect(nonneg, "heatmap non-negative on 100 random inputs");
}

void ensemble_contract(Checker& c) {
    ModelConfig cfg = tiny_config(32);
    HyFormerNet m1(cfg, 5), m2(cfg, 5), m3(cfg, 5);
    RandomSource rng(29);
    Tensor images({2, 3, 32, 32});
    for (std::int64_t i = 0; i < images.numel(); ++i) images[i] = rng.uniform();
    ModelOutput single = m1.forward(images);
    auto out = ensemble::ensemble_predict({&m1, &m2, &m3}, images);
    bool bit_exact = true;
    for (std::int64_t i = 0; i < single.seg_probs->value.numel(); ++i)
        bit_exact = bit_exact && out.seg_probs[i] == single.seg_probs->value[i];
    for (std::int64_t i = 0; i < single.class_probs->value.numel(); ++i)
        bit_exact = bit_exact && out.class_probs[i] == single.class_probs->value[i];
    c.expect(bit_exact, "K identical members reproduce the single model bit-exactly");

    HyFormerNet d1(cfg, 6), d2(cfg, 7), d3(cfg, 8);
    auto mixed = ensemble::ensemble_predict({&d1, &d2, &d3}, images);
    for (int n = 0; n < 2; ++n) {
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += mixed.class_probs.at2(n, k);
        c.expect(std::abs(sum - 1.0) < 1e-5, "averaged class probabilities stay on the simplex");
    }
    auto permuted = ensemble::ensemble_predict({&d3, &d1, &d2}, images);
    bool order_ok = true;
    for (int n = 0; n < 2; ++n)
        order_ok = order_ok && ensemble::argmax_class(mixed.class_probs, n, 3) ==
                                   ensemble::argmax_class(permuted.class_probs, n, 3);
    for (std::int64_t i = 0; i < mixed.seg_probs.numel(); ++i)
        order_ok = order_ok && std::abs(mixed.seg_probs[i] - permuted.seg_probs[i]) < 1e-12;
    c.expect(order_ok, "ensemble prediction is invariant to member ordering");
}

void statistics_criteria(Checker& c) {
    std::vector<double> diffs = {1, 2, 3, 4, 5}, zeros(5, 0.0);
    auto w = stats::wilcoxon_signed_rank(diffs, zeros);
    c.expect(w.exact && w.p_value == 0.0625, "exact Wilcoxon p for all-positive diffs {1..5} == 0.0625");

    std::vector<double> constant(15, 0.3);
    auto [lo, hi] = stats::bootstrap_ci(constant, 1000, 0.95, 3);
    c.expect(lo == hi && std::abs(lo - 0.3) < 1e-12, "bootstrap CI of constant data is degenerate");

    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        RandomSource rng(5000 + static_cast<std::uint64_t>(t));
        std::vector<double> data;
        for (int i = 0; i < 40; ++i) data.push_back(rng.normal(0.7, 0.1));
        auto [l, h] = stats::bootstrap_ci(data, 1000, 0.95, 900 + static_cast<std::uint64_t>(t));
        covered += l <= 0.7 && 0.7 <= h;
    }
    double coverage = 100.0 * covered / trials;
    std::ostringstream os;
    os << "bootstrap coverage " << coverage << "% within [90%, 99%]";
    c.expect(coverage >= 90.0 && coverage <= 99.0, os.str());

    c.expect_near(stats::cohens_d({2, 4}, {1, 3}), 0.7071, 1e-4, "cohens_d({2,4},{1,3})");
}

void split_fixtures(Checker& c) {
    data::DatasetManifest busi;
    {
        int idx = 0;
        const std::array<int, 3> counts{133, 437, 210};
        for (int cls = 0; cls < 3; ++cls)
            for (int i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i) {
                data::ImageRecord rec;
                rec.id = "b" + std::to_string(idx++);
                rec.label = static_cast<data::Label>(cls);
                busi.records.push_back(rec);
            }
    }
    auto split = data::stratified_split(busi, {0.8, 0.1, 0.1}, 42);
    c.expect(split.ids(data::Split::Train).size() == 624 && split.ids(data::Split::Val).size() == 78 &&
                 split.ids(data::Split::Test).size() == 78,
             "BUSI-sized manifest splits to (624, 78, 78)");

    data::DatasetManifest external;
    {
        int idx = 0;
        const std::array<int, 3> counts{419, 174, 90};
        for (int cls = 0; cls < 3; ++cls)
            for (int i = 0; i < counts[static_cast<std::size_t>(cls)]; ++i) {
                data::ImageRecord rec;
                rec.id = "e" + std::to_string(idx++);
                rec.label = static_cast<data::Label>(cls);
                external.records.push_back(rec);
            }
    }
    data::AdaptationSplitSpec spec;
    spec = data::make_adaptation_splits(external, spec, 9);
    c.expect(spec.splits.size() == 4 && spec.splits[0].train_ids.size() == 34 &&
                 spec.splits[1].train_ids.size() == 68 && spec.splits[2].train_ids.size() == 137 &&
                 spec.splits[3].train_ids.size() == 342,
             "683-record external manifest yields train sizes (34, 68, 137, 342)");
}

void training_smoke(Checker& c) {
    // overfit a single repeated batch
    auto ds = synth::make_dataset(32, {0, 2, 2}, 21);
    HyFormerNet model(tiny_config(32), 1);
    train::TrainConfig tcfg = train_config(200, 6e-3, 5);
    auto result = train::train(model, ds.manifest, *ds.view, tcfg, {}, preprocess_at(32),
                               data::AugmentationConfig::disabled());
    double dice = train::mean_dice_over(model, ds.manifest, *ds.view, ds.manifest.ids(data::Split::Train),
                                        preprocess_at(32), 4);
    std::ostringstream os;
    os << "overfit-one-batch training dice " << dice << " > 0.95 within 200 steps";
    c.expect(dice > 0.95, os.str());

    // early stopping halts after exactly `patience` non-improving epochs
    {
        auto ds2 = synth::make_dataset(32, {0, 2, 0}, 41);
        HyFormerNet m2(tiny_config(32), 3);
        train::TrainConfig scfg = train_config(40, 6e-3, 5);
        scfg.patience = 3;
        auto r2 = train::train(m2, ds2.manifest, *ds2.view, scfg, {}, preprocess_at(32),
                               data::AugmentationConfig::disabled());
        train::EarlyStopState replay;
        int expected_run = 0;
        bool replay_stopped = false;
        for (const auto& e : r2.history) {
            expected_run = e.epoch + 1;
            if (train::early_stopping_update(replay, e.val_dice, e.epoch, scfg.patience)) {
                replay_stopped = true;
                break;
            }
        }
        bool stopped_exactly =
            r2.epochs_run == expected_run &&
            (!replay_stopped || r2.early_stop.epochs_since_improvement == scfg.patience) &&
            r2.best.epoch == replay.best_epoch;
        c.expect(stopped_exactly, "early stopping halts after exactly `patience` non-improving epochs");
    }

    // determinism: identical seeds, identical histories
    {
        auto ds3 = synth::make_dataset(32, {1, 2, 1}, 31);
        data::AugmentationConfig acfg;  // stochastic augmentation active
        train::TrainConfig dcfg = train_config(3, 2e-3, 77);
        std::vector<train::EpochStats> h1, h2;
        {
            HyFormerNet m(tiny_config(32), 9);
            h1 = train::train(m, ds3.manifest, *ds3.view, dcfg, {}, preprocess_at(32), acfg).history;
        }
        {
            HyFormerNet m(tiny_config(32), 9);
            h2 = train::train(m, ds3.manifest, *ds3.view, dcfg, {}, preprocess_at(32), acfg).history;
        }
        bool identical = h1.size() == h2.size();
        for (std::size_t i = 0; identical && i < h1.size(); ++i)
            identical = h1[i].train_loss == h2[i].train_loss && h1[i].val_dice == h2[i].val_dice;
        c.expect(identical, "same-seed runs produce identical histories in deterministic mode");
    }
}

void adaptation_curve(Checker& c) {
    // source domain: bright lesions; target domain: inverted contrast
    auto source = synth::make_dataset(32, {8, 20, 20}, 61);
    HyFormerNet model(tiny_config(32), 11);
    train::TrainConfig tcfg = train_config(25, 4e-3, 5, 8);
    auto trained = train::train(model, source.manifest, *source.view, tcfg, {}, preprocess_at(32),
                                data::AugmentationConfig::disabled());

    auto target = synth::make_dataset(32, {10, 25, 25}, 62, data::Split::Unassigned, /*inverted=*/true, "tgt");
    data::AdaptationSplitSpec spec;
    spec.fractions = {0.05, 0.10, 0.20, 0.50};
    spec = data::make_adaptation_splits(target.manifest, spec, 13);

    std::vector<double> curve;
    {
        auto zero_shot = train::model_from_checkpoint(trained.best);
        std::vector<std::string> all_ids;
        for (const auto& r : target.manifest.records) all_ids.push_back(r.id);
        curve.push_back(train::mean_dice_over(*zero_shot, target.manifest, *target.view, all_ids,
                                              preprocess_at(32), 8));
    }
    for (const auto& fsplit : spec.splits) {
        HyFormerNet ft(tiny_config(32), 17);
        train::TrainConfig fcfg = train_config(15, 4e-3, 23, 4);
        train::fine_tune(trained.best, ft, target.manifest, *target.view, fsplit.train_ids, fcfg, {},
                         preprocess_at(32), data::AugmentationConfig::disabled());
        curve.push_back(
            train::mean_dice_over(ft, target.manifest, *target.view, fsplit.test_ids, preprocess_at(32), 8));
    }
    std::ostringstream os;
    os << "fine-tuning curve over {0,5,10,20,50}%:";
    for (double v : curve) os << " " << v;
    std::printf("       %s\n", os.str().c_str());
    bool monotone = true;
    for (std::size_t i = 1; i < curve.size(); ++i) monotone = monotone && curve[i] >= curve[i - 1] - 0.02;
    c.expect(monotone, "curve monotone non-decreasing within 0.02 (" + os.str() + ")");
    c.expect(curve.size() == 5, "zero-shot row plus one row per fraction");
    // steep-then-plateau shape: recovery up to the 10% point exceeds all
    // later gains combined
    c.expect(curve[2] - curve[0] > curve[4] - curve[2], "steep initial recovery followed by a plateau");
}

int run_cmd(const std::string& cmd) {
    int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void cli_end_to_end(Checker& c) {
    fs::path root = fs::temp_directory_path() / ("hyformer_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    auto p = [&](const std::string& rel) { return (root / rel).string(); };
    const std::string model_flags =
        " --set model.input_size=32 --set preprocess.target_size=32"
        " --set model.cnn.channels=8,12,16,24 --set model.swin.channels=8,16,32,64"
        " --set model.swin.heads=1,2,4,8 --set model.fusion_channels=8,12,16,24"
        " --set model.decoder_channels=16,12,8 --set model.cls_hidden=24 --set train.batch_size=4";

    c.expect(run_cmd(std::string(SYNTH_TOOL_PATH) + " --out " + p("busi") +
                     " --style busi --size 32 --normal 4 --benign 4 --malignant 4 --seed 3") == 0,
             "synthetic 12-image dataset generation exits 0");
    c.expect(run_cmd(std::string(HYFORMER_CLI_PATH) + " split --busi-root " + p("busi") + " --out " +
                     p("manifest.tsv") + " --fractions 0.5 0.25 0.25 --seed 11") == 0,
             "split exits 0");
    c.expect(run_cmd(std::string(HYFORMER_CLI_PATH) + " train --manifest " + p("manifest.tsv") + " --out " +
                     p("run") + model_flags + " --epochs 1 --seed 42 --lr-init 0.002") == 0,
             "train (1 epoch, toy) exits 0");
    c.expect(run_cmd(std::string(HYFORMER_CLI_PATH) + " eval --checkpoint " + p("run/best.ckpt") +
                     " --manifest " + p("manifest.tsv") + " --split test --out " + p("eval")) == 0,
             "eval exits 0");
    c.expect(run_cmd(std::string(HYFORMER_CLI_PATH) + " interpret --checkpoint " + p("run/best.ckpt") +
                     " --manifest " + p("manifest.tsv") + " --ids \"benign/benign (1)\" --out " + p("figs")) == 0,
             "interpret exits 0");

    for (const std::string& rel :
         {std::string("manifest.tsv"), std::string("run/best.ckpt"), std::string("run/last.ckpt"),
          std::string("run/history.tsv"), std::string("run/config.kv"), std::string("run/run_manifest.kv"),
          std::string("eval/metrics_report.txt"), std::string("eval/metrics_report.kv"),
          std::string("eval/per_image_metrics.tsv"), std::string("figs/interpret.kv"),
          std::string("figs/panel_benign_benign_(1).png")})
        c.expect(fs::exists(p(rel)), "declared output file exists: " + rel);
    fs::remove_all(root);
}

struct Criterion {
    std::string name;
    std::function<void(Checker&)> fn;
};

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {"shape/range suite (inputs 64/128/224)", shape_range_suite},
        {"gradient check (analytic vs central differences, rel err < 1e-3)", gradient_check},
        {"metric oracle suite (brute-force dice/iou, identity, seed aggregation)", metric_oracles},
        {"loss fixtures (dice 0.4, uniform-weight CE, both-empty dice)", loss_fixtures},
        {"otsu oracle + opening properties", otsu_and_opening},
        {"grad-cam fixtures", grad_cam_fixtures},
        {"ensemble contract", ensemble_contract},
        {"statistics (wilcoxon exact, bootstrap, coverage, cohens d)", statistics_criteria},
        {"split fixtures (624/78/78 and 34/68/137/342)", split_fixtures},
        {"training smoke (overfit, early stopping, determinism)", training_smoke},
        {"synthetic adaptation curve (monotone within 0.02)", adaptation_curve},
        {"end-to-end CLI on a 12-image synthetic dataset", cli_end_to_end},
    };

    int failed = 0;
    for (auto& criterion : criteria) {
        Checker checker;
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(checker);
        } catch (const std::exception& e) {
            checker.failures.push_back(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (checker.failures.empty()) {
            std::printf("[PASS] %s (%.1fs)\n", criterion.name.c_str(), secs);
        } else {
            ++failed;
            std::printf("[FAIL] %s (%.1fs)\n", criterion.name.c_str(), secs);
            for (const auto& f : checker.failures) std::printf("       - %s\n", f.c_str());
        }
        std::fflush(stdout);
    }
    if (failed) std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    else std::printf("all %zu criteria passed\n", criteria.size());
    return failed ? 1 : 0;
}
