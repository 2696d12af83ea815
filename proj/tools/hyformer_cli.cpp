// Command-line front end: split / train / eval / adapt / interpret / report.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "hyformer/config.hpp"
#include "hyformer/ensemble.hpp"
#include "hyformer/interpret.hpp"
#include "hyformer/report.hpp"
#include "hyformer/stats.hpp"
#include "hyformer/train.hpp"
#include "hyformer/version.hpp"

namespace fs = std::filesystem;
using namespace hyformer;

namespace {

struct SplitArgs {
    std::string busi_root, external_root, out_path;
    std::vector<double> fractions{0.8, 0.1, 0.1};
    std::uint64_t seed = 42;
};

struct TrainArgs {
    std::string config_path, manifest_path, out_dir;
    std::vector<std::string> overrides;
    std::optional<int> epochs, patience, batch_size;
    std::optional<double> lr_init, weight_decay, grad_clip_norm;
    std::optional<std::string> precision;
    std::optional<std::uint64_t> seed;
    bool force = false;
};

struct EvalArgs {
    std::vector<std::string> checkpoints;
    std::string manifest_path, out_dir, split = "test", compare_log, aggregation = "probs";
    bool bootstrap = false;
    int bootstrap_iterations = 1000;
    std::uint64_t bootstrap_seed = 0;
};

struct AdaptArgs {
    std::string checkpoint, manifest_path, config_path, out_dir;
    std::vector<std::string> overrides;
    std::vector<double> fractions{0.05, 0.10, 0.20, 0.50};
    std::vector<std::uint64_t> seeds{42};
    std::uint64_t split_seed = 42;
    double source_reference = 0.0;  // 0 = take best val dice from the checkpoint
};

struct InterpretArgs {
    std::string checkpoint, manifest_path, out_dir;
    std::vector<std::string> ids;
};

struct ReportArgs {
    std::vector<std::string> run_dirs;
    std::string out_path;
    int bootstrap_iterations = 1000;
    std::uint64_t bootstrap_seed = 0;
};

config::RunConfig resolve_run_config(const std::string& config_path, const std::vector<std::string>& overrides,
                                     config::KeyValueConfig* kv_out = nullptr) {
    config::KeyValueConfig kv;
    if (!config_path.empty()) kv = config::KeyValueConfig::parse_file(config_path);
    config::apply_overrides(kv, overrides);
    // default patience tracks epochs downward unless set explicitly
    if (!kv.has("train.patience")) {
        int epochs = kv.get_int("train.epochs", train::TrainConfig{}.epochs);
        kv.set("train.patience", std::to_string(std::min(train::TrainConfig{}.patience, epochs)));
    }
    config::RunConfig cfg = config::run_config_from_kv(kv);
    if (kv_out) *kv_out = config::run_config_to_kv(cfg);
    return cfg;
}

data::DatasetManifest load_manifest_checked(const std::string& path) {
    if (!fs::exists(path)) throw config::ConfigError("manifest not found: " + path);
    return data::load_manifest(path);
}

void write_history(const std::string& run_dir, const std::vector<train::EpochStats>& history) {
    std::ofstream out(fs::path(run_dir) / "history.tsv");
    out << "# epoch\tlr\ttrain_loss\ttrain_seg\ttrain_cls\tval_dice\n";
    char buf[256];
    for (const auto& e : history) {
        std::snprintf(buf, sizeof(buf), "%d\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\n", e.epoch, e.lr, e.train_loss,
                      e.train_seg, e.train_cls, e.val_dice);
        out << buf;
    }
}

int cmd_split(const SplitArgs& args) {
    if (args.out_path.empty()) throw config::ConfigError("split: --out is required");
    if (args.busi_root.empty() == args.external_root.empty())
        throw config::ConfigError("split: exactly one of --busi-root / --external-root is required");
    data::DatasetManifest manifest;
    if (!args.busi_root.empty()) {
        if (!fs::exists(args.busi_root)) throw config::ConfigError("dataset root not found: " + args.busi_root);
        manifest = data::load_busi_manifest(args.busi_root);
        if (args.fractions.size() != 3) throw config::ConfigError("split: --fractions needs 3 values");
        manifest = data::stratified_split(manifest, {args.fractions[0], args.fractions[1], args.fractions[2]},
                                          args.seed);
    } else {
        if (!fs::exists(args.external_root))
            throw config::ConfigError("dataset root not found: " + args.external_root);
        manifest = data::load_external_manifest(args.external_root);
    }
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << "\n";
    data::save_manifest(manifest, args.out_path);
    auto counts = manifest.class_counts();
    std::cout << "wrote " << manifest.records.size() << " records (" << counts[0] << " normal, " << counts[1]
              << " benign, " << counts[2] << " malignant) to " << args.out_path << "\n";
    return 0;
}

int cmd_train(const TrainArgs& args) {
    std::vector<std::string> overrides = args.overrides;
    auto add_override = [&](const std::string& key, auto value) {
        std::ostringstream ss;
        ss << key << "=" << value;
        overrides.push_back(ss.str());
    };
    if (args.epochs) add_override("train.epochs", *args.epochs);
    if (args.patience) add_override("train.patience", *args.patience);
    if (args.batch_size) add_override("train.batch_size", *args.batch_size);
    if (args.lr_init) add_override("train.lr_init", *args.lr_init);
    if (args.weight_decay) add_override("train.weight_decay", *args.weight_decay);
    if (args.grad_clip_norm) add_override("train.grad_clip_norm", *args.grad_clip_norm);
    if (args.precision) add_override("train.precision", *args.precision);
    if (args.seed) add_override("train.seed", *args.seed);

    config::KeyValueConfig resolved;
    config::RunConfig cfg = resolve_run_config(args.config_path, overrides, &resolved);
    data::DatasetManifest manifest = load_manifest_checked(args.manifest_path);
    if (manifest.ids(data::Split::Train).empty())
        throw config::ConfigError("manifest has no train split; run `split` first");

    if (fs::exists(args.out_dir) && !fs::is_empty(args.out_dir) && !args.force)
        throw config::ConfigError("output directory " + args.out_dir + " is not empty (use --force to overwrite)");
    fs::create_directories(args.out_dir);

    report::RunManifestInfo info;
    info.command = "train";
    info.config_text = resolved.serialize();
    info.dataset_fingerprint = data::dataset_fingerprint(manifest);
    info.seeds = {cfg.train.seed};
    info.started_utc = report::utc_timestamp();

    HyFormerNet model(cfg.model, cfg.train.seed);
    data::DiskDatasetView view;
    train::TrainResult result = train::train(model, manifest, view, cfg.train, cfg.loss, cfg.preprocess, cfg.augment);

    {
        std::ofstream out(fs::path(args.out_dir) / "config.kv");
        out << resolved.serialize();
    }
    write_history(args.out_dir, result.history);
    train::save_checkpoint(result.best, (fs::path(args.out_dir) / "best.ckpt").string());
    train::save_checkpoint(result.last, (fs::path(args.out_dir) / "last.ckpt").string());
    info.finished_utc = report::utc_timestamp();
    report::write_run_manifest(args.out_dir, info);
    std::cout << "trained " << result.epochs_run << " epochs, best val Dice "
              << result.early_stop.best_metric << " at epoch " << result.early_stop.best_epoch << "\n";
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    if (args.checkpoints.empty()) throw config::ConfigError("eval: at least one --checkpoint is required");
    data::DatasetManifest manifest = load_manifest_checked(args.manifest_path);
    std::vector<std::string> ids;
    if (args.split == "all") {
        for (const auto& r : manifest.records) ids.push_back(r.id);
    } else {
        ids = manifest.ids(data::split_from_string(args.split));
    }
    if (ids.empty()) throw config::ConfigError("eval: no records in split '" + args.split + "'");

    std::vector<train::CheckpointBundle> bundles;
    std::vector<std::unique_ptr<HyFormerNet>> models;
    std::vector<const HyFormerNet*> members;
    for (const auto& path : args.checkpoints) {
        bundles.push_back(train::load_checkpoint(path));
        models.push_back(train::model_from_checkpoint(bundles.back()));
        members.push_back(models.back().get());
    }
    data::PreprocessConfig pcfg;
    pcfg.target_size = bundles[0].model_config.input_size;
    ensemble::EnsembleSpec spec;
    spec.aggregation =
        args.aggregation == "logits" ? ensemble::Aggregation::MeanLogits : ensemble::Aggregation::MeanProbs;

    data::DiskDatasetView view;
    metrics::MetricsReport report =
        ensemble::evaluate(members, manifest, view, ids, pcfg, bundles[0].train_config.batch_size, spec);
    if (args.bootstrap && report.per_image_dice.size() >= 2) {
        auto [lo, hi] = stats::bootstrap_ci(report.per_image_dice, args.bootstrap_iterations, 0.95,
                                            args.bootstrap_seed);
        report.has_ci = true;
        report.dice_ci_low = lo;
        report.dice_ci_high = hi;
    }
    fs::create_directories(args.out_dir);
    report::write_metrics_report(args.out_dir, report);

    if (members.size() > 1) {
        // per-seed summary across individually evaluated members
        std::vector<double> seed_dice, seed_acc;
        for (std::size_t k = 0; k < members.size(); ++k) {
            metrics::MetricsReport r = ensemble::evaluate({members[k]}, manifest, view, ids, pcfg,
                                                           bundles[0].train_config.batch_size, spec);
            seed_dice.push_back(r.mean_dice);
            seed_acc.push_back(r.classification.accuracy);
        }
        auto [dm, ds] = stats::aggregate_seed_stats(seed_dice);
        auto [am, as] = stats::aggregate_seed_stats(seed_acc);
        std::ofstream out(fs::path(args.out_dir) / "seed_summary.kv");
        out << "schema_version = 1\n";
        out << "n_members = " << members.size() << "\n";
        char buf[160];
        std::snprintf(buf, sizeof(buf), "dice.mean = %.6f\ndice.std = %.6f\n", dm, ds);
        out << buf;
        std::snprintf(buf, sizeof(buf), "accuracy.mean = %.6f\naccuracy.std = %.6f\n", am, as);
        out << buf;
    }

    if (!args.compare_log.empty()) {
        report::PerImageLog other = report::read_per_image_log(args.compare_log);
        if (other.ids != report.image_ids)
            throw config::ConfigError("eval --compare: per-image logs do not cover the same ids");
        // compare at the precision of the emitted logs so that two identical
        // runs pair to exactly-zero differences
        std::vector<double> ours = report.per_image_dice;
        for (double& v : ours) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", v);
            v = std::stod(buf);
        }
        auto w = stats::wilcoxon_signed_rank(ours, other.dice);
        std::ofstream out(fs::path(args.out_dir) / "comparison.kv");
        out << "schema_version = 1\n";
        out << "wilcoxon.w = " << w.w_statistic << "\n";
        out << "wilcoxon.p_two_sided = " << w.p_value << "\n";
        out << "wilcoxon.n_effective = " << w.n_effective << "\n";
        out << "wilcoxon.exact = " << (w.exact ? "true" : "false") << "\n";
        out << "wilcoxon.degenerate = " << (w.degenerate ? "true" : "false") << "\n";
        std::cout << "Wilcoxon vs " << args.compare_log << ": W=" << w.w_statistic << " p=" << w.p_value << "\n";
    }
    std::cout << report::metrics_report_table(report);
    return 0;
}

int cmd_adapt(const AdaptArgs& args) {
    train::CheckpointBundle source = train::load_checkpoint(args.checkpoint);
    data::DatasetManifest manifest = load_manifest_checked(args.manifest_path);

    std::vector<std::string> overrides = args.overrides;
    config::KeyValueConfig resolved;
    config::RunConfig cfg = resolve_run_config(args.config_path, overrides, &resolved);
    cfg.model = source.model_config;  // fine-tuning keeps the source architecture
    data::PreprocessConfig pcfg = cfg.preprocess;
    pcfg.target_size = source.model_config.input_size;

    data::AdaptationSplitSpec spec;
    spec.fractions = args.fractions;
    spec = data::make_adaptation_splits(manifest, spec, args.split_seed);
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";

    double reference = args.source_reference;
    if (reference <= 0.0) {
        reference = 0.0;
        for (const auto& e : source.history) reference = std::max(reference, e.val_dice);
        if (reference <= 0.0) throw config::ConfigError("adapt: no usable --source-reference");
    }

    data::DiskDatasetView view;
    std::vector<report::LearningCurvePoint> points;
    std::vector<std::string> all_ids;
    for (const auto& r : manifest.records) all_ids.push_back(r.id);

    auto eval_model = [&](const HyFormerNet& m, const std::vector<std::string>& ids) {
        return ensemble::evaluate({&m}, manifest, view, ids, pcfg, cfg.train.batch_size);
    };

    // zero-shot row over the full external set
    {
        report::LearningCurvePoint p;
        p.fraction = 0.0;
        p.n_train_images = 0;
        auto model = train::model_from_checkpoint(source);
        metrics::MetricsReport r = eval_model(*model, all_ids);
        p.dice_mean = r.mean_dice;
        p.accuracy_mean = r.classification.accuracy;
        p.recovery_pct = 100.0 * p.dice_mean / reference;
        points.push_back(p);
    }

    for (const auto& fsplit : spec.splits) {
        std::vector<double> dices, accs;
        for (std::uint64_t seed : args.seeds) {
            train::TrainConfig tcfg = cfg.train;
            tcfg.seed = seed;
            HyFormerNet model(source.model_config, seed);
            train::TrainResult result = train::fine_tune(source, model, manifest, view, fsplit.train_ids, tcfg,
                                                          cfg.loss, pcfg, cfg.augment);
            metrics::MetricsReport r = eval_model(model, fsplit.test_ids);
            dices.push_back(r.mean_dice);
            accs.push_back(r.classification.accuracy);
        }
        auto [dm, ds] = stats::aggregate_seed_stats(dices);
        auto [am, as] = stats::aggregate_seed_stats(accs);
        report::LearningCurvePoint p;
        p.fraction = fsplit.fraction;
        p.n_train_images = static_cast<int>(fsplit.train_ids.size());
        p.dice_mean = dm;
        p.dice_std = ds;
        p.accuracy_mean = am;
        p.accuracy_std = as;
        p.recovery_pct = 100.0 * dm / reference;
        points.push_back(p);
    }

    fs::create_directories(args.out_dir);
    report::write_learning_curve(args.out_dir, points, reference);
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        xs.push_back(p.fraction);
        ys.push_back(p.dice_mean);
    }
    report::write_curve_plot((fs::path(args.out_dir) / "learning_curve.png").string(), xs, ys, reference,
                             "target-domain fine-tuning");

    report::RunManifestInfo info;
    info.command = "adapt";
    info.config_text = resolved.serialize();
    info.dataset_fingerprint = data::dataset_fingerprint(manifest);
    info.seeds = args.seeds;
    info.started_utc = info.finished_utc = report::utc_timestamp();
    report::write_run_manifest(args.out_dir, info);

    for (const auto& p : points)
        std::cout << "fraction " << p.fraction << " (n=" << p.n_train_images << "): Dice " << p.dice_mean
                  << " (" << p.recovery_pct << "% of source)\n";
    return 0;
}

int cmd_interpret(const InterpretArgs& args) {
    train::CheckpointBundle bundle = train::load_checkpoint(args.checkpoint);
    data::DatasetManifest manifest = load_manifest_checked(args.manifest_path);
    if (args.ids.empty()) throw config::ConfigError("interpret: --ids is required");
    for (const auto& id : args.ids) {
        if (manifest.find(id)) continue;
        std::ostringstream msg;
        msg << "unknown image id '" << id << "'. Available ids:";
        for (const auto& r : manifest.records) msg << "\n  " << r.id;
        throw config::ConfigError(msg.str());
    }
    auto model = train::model_from_checkpoint(bundle);
    data::PreprocessConfig pcfg;
    pcfg.target_size = bundle.model_config.input_size;
    data::DiskDatasetView view;
    fs::create_directories(args.out_dir);
    std::ofstream sidecar(fs::path(args.out_dir) / "interpret.kv");
    sidecar << "schema_version = 1\n";

    for (const auto& id : args.ids) {
        const data::ImageRecord* rec = manifest.find(id);
        data::Sample raw = view.load(*rec);
        data::Sample pre = data::preprocess_sample(raw, pcfg);
        // display copy: resized but not normalized
        Tensor display = data::resize_image(raw.image, pcfg.target_size, pcfg.target_size, pcfg.interpolation);

        Tensor batch = Tensor::from({1, 3, pcfg.target_size, pcfg.target_size}, pre.image.vec());
        ModelOutput out = model->forward(batch, false);
        interpret::AttentionValidationResult att = interpret::attention_validation_pipeline(out, pre.mask);
        int pred_class = 0;
        for (int c = 1; c < bundle.model_config.num_classes; ++c)
            if (out.class_probs->value.at2(0, c) > out.class_probs->value.at2(0, pred_class)) pred_class = c;
        interpret::GradCamResult cam = interpret::grad_cam(*model, pre.image, pred_class);

        Tensor pred_mask = metrics::binarize(
            Tensor::from({pcfg.target_size, pcfg.target_size}, out.seg_probs->value.vec()));
        double seg_dice = metrics::dice_score(pred_mask, pre.mask);

        std::string safe_id = id;
        for (auto& ch : safe_id)
            if (ch == '/' || ch == ' ') ch = '_';
        std::string panel_path = (fs::path(args.out_dir) / ("panel_" + safe_id + ".png")).string();
        report::write_interpret_panel(panel_path, display, pre.mask, pred_mask, att.upsampled, cam.overlay,
                                      att.iou, id + " -> " + data::to_string(static_cast<data::Label>(pred_class)));

        sidecar << "image." << id << ".attention_iou = " << att.iou << "\n";
        sidecar << "image." << id << ".attention_threshold = " << att.threshold << "\n";
        sidecar << "image." << id << ".attention_empty_flag = " << (att.empty_flag ? "true" : "false") << "\n";
        sidecar << "image." << id << ".dice = " << seg_dice << "\n";
        sidecar << "image." << id << ".predicted_class = " << data::to_string(static_cast<data::Label>(pred_class))
                << "\n";
        sidecar << "image." << id << ".true_class = " << data::to_string(rec->label) << "\n";
        std::cout << id << ": attention IoU " << att.iou << ", predicted "
                  << data::to_string(static_cast<data::Label>(pred_class)) << "\n";
    }
    return 0;
}

int cmd_report(const ReportArgs& args) {
    if (args.run_dirs.empty()) throw config::ConfigError("report: at least one --run is required");
    std::vector<report::RunSummary> runs;
    int valid = 0;
    for (const auto& dir : args.run_dirs) {
        report::RunSummary summary;
        summary.name = fs::path(dir).filename().string();
        try {
            report::PerImageLog log = report::read_per_image_log((fs::path(dir) / "per_image_metrics.tsv").string());
            summary.report.image_ids = log.ids;
            summary.report.per_image_dice = log.dice;
            summary.report.per_image_iou = log.iou;
            double acc = 0.0;
            {
                config::KeyValueConfig kv =
                    config::KeyValueConfig::parse_file((fs::path(dir) / "metrics_report.kv").string());
                summary.report.mean_dice = kv.get_double("dice.mean", 0.0);
                summary.report.mean_iou = kv.get_double("iou.mean", 0.0);
                acc = kv.get_double("classification.accuracy", 0.0);
            }
            summary.report.classification.accuracy = acc;
            summary.valid = true;
            ++valid;
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << dir << ": " << e.what() << "\n";
        }
        runs.push_back(std::move(summary));
    }
    if (valid == 0) {
        std::cerr << "error: no valid run directories\n";
        return 1;
    }
    std::string table = report::comparison_table(runs, args.bootstrap_iterations, args.bootstrap_seed);
    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path);
        out << table;
    }
    std::cout << table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-task breast-ultrasound segmentation/classification toolkit"};
    app.set_version_flag("--version", std::string(kToolkitVersion));
    app.require_subcommand(1);

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "build a dataset manifest with stratified splits");
    split->add_option("--busi-root", split_args.busi_root, "BUSI-style root (class folders with *_mask files)");
    split->add_option("--external-root", split_args.external_root, "external root (images/ + RGB masks/)");
    split->add_option("--fractions", split_args.fractions, "train,val,test fractions")->expected(3);
    split->add_option("--seed", split_args.seed, "shuffle seed");
    split->add_option("--out", split_args.out_path, "output manifest path")->required();

    TrainArgs train_args;
    auto* tr = app.add_subcommand("train", "train a model from a manifest");
    tr->add_option("--config", train_args.config_path, "flat key-value config file");
    tr->add_option("--manifest", train_args.manifest_path, "dataset manifest")->required();
    tr->add_option("--out", train_args.out_dir, "run directory")->required();
    tr->add_option("--set", train_args.overrides, "config override key=value (repeatable)");
    tr->add_option("--epochs", train_args.epochs, "override train.epochs");
    tr->add_option("--patience", train_args.patience, "override train.patience");
    tr->add_option("--batch-size", train_args.batch_size, "override train.batch_size");
    tr->add_option("--lr-init", train_args.lr_init, "override train.lr_init");
    tr->add_option("--weight-decay", train_args.weight_decay, "override train.weight_decay");
    tr->add_option("--grad-clip-norm", train_args.grad_clip_norm, "override train.grad_clip_norm");
    tr->add_option("--precision", train_args.precision, "override train.precision (high|reduced)");
    tr->add_option("--seed", train_args.seed, "override train.seed");
    tr->add_flag("--force", train_args.force, "overwrite a non-empty run directory");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "evaluate checkpoint(s) on a manifest split");
    ev->add_option("--checkpoint", eval_args.checkpoints, "checkpoint path (repeat for an ensemble)")->required();
    ev->add_option("--manifest", eval_args.manifest_path, "dataset manifest")->required();
    ev->add_option("--split", eval_args.split, "train|val|test|all");
    ev->add_option("--out", eval_args.out_dir, "output directory")->required();
    ev->add_flag("--bootstrap", eval_args.bootstrap, "emit bootstrap 95% CI for Dice");
    ev->add_option("--bootstrap-iterations", eval_args.bootstrap_iterations, "resampling iterations");
    ev->add_option("--bootstrap-seed", eval_args.bootstrap_seed, "resampling seed");
    ev->add_option("--compare", eval_args.compare_log, "per-image log of another run for Wilcoxon");
    ev->add_option("--aggregation", eval_args.aggregation, "ensemble aggregation: probs|logits");

    AdaptArgs adapt_args;
    auto* ad = app.add_subcommand("adapt", "zero-shot + progressive fine-tuning learning curve");
    ad->add_option("--checkpoint", adapt_args.checkpoint, "source-domain checkpoint")->required();
    ad->add_option("--manifest", adapt_args.manifest_path, "target-domain manifest")->required();
    ad->add_option("--config", adapt_args.config_path, "training config for fine-tuning");
    ad->add_option("--set", adapt_args.overrides, "config override key=value (repeatable)");
    ad->add_option("--fractions", adapt_args.fractions, "fine-tuning fractions");
    ad->add_option("--seeds", adapt_args.seeds, "fine-tuning seeds (repeat for mean±std)");
    ad->add_option("--split-seed", adapt_args.split_seed, "adaptation split seed");
    ad->add_option("--source-reference", adapt_args.source_reference, "source-domain reference Dice");
    ad->add_option("--out", adapt_args.out_dir, "output directory")->required();

    InterpretArgs interp_args;
    auto* in = app.add_subcommand("interpret", "attention-validation + Grad-CAM figures");
    in->add_option("--checkpoint", interp_args.checkpoint, "checkpoint")->required();
    in->add_option("--manifest", interp_args.manifest_path, "dataset manifest")->required();
    in->add_option("--ids", interp_args.ids, "image ids to explain")->required();
    in->add_option("--out", interp_args.out_dir, "output directory")->required();

    ReportArgs report_args;
    auto* rp = app.add_subcommand("report", "consolidated comparison across run directories");
    rp->add_option("--run", report_args.run_dirs, "run directory (repeatable)")->required();
    rp->add_option("--out", report_args.out_path, "output file");
    rp->add_option("--bootstrap-iterations", report_args.bootstrap_iterations, "CI iterations");
    rp->add_option("--bootstrap-seed", report_args.bootstrap_seed, "CI seed");

    try {
        app.parse(argc, argv);
        if (split->parsed()) return cmd_split(split_args);
        if (tr->parsed()) return cmd_train(train_args);
        if (ev->parsed()) return cmd_eval(eval_args);
        if (ad->parsed()) return cmd_adapt(adapt_args);
        if (in->parsed()) return cmd_interpret(interp_args);
        if (rp->parsed()) return cmd_report(report_args);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const config::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
