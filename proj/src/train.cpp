#include "hyformer/train.hpp"

#include <algorithm>
#include <cmath>

namespace hyformer::train {

using data::DatasetManifest;
using data::DatasetView;
using data::Sample;
using data::Split;
using nn::check;
using nn::mix_seed;
using nn::RandomSource;

std::string to_string(Precision p) { return p == Precision::High ? "high" : "reduced"; }

Precision precision_from_string(const std::string& s) {
    if (s == "high") return Precision::High;
    if (s == "reduced") return Precision::Reduced;
    throw std::invalid_argument("unknown precision mode: " + s);
}

void TrainConfig::validate() const {
    check(epochs > 0 && patience > 0 && batch_size > 0, "TrainConfig: counts must be positive");
    check(patience <= epochs, "TrainConfig: patience must not exceed epochs");
    check(lr_init > 0 && lr_min >= 0 && weight_decay >= 0 && grad_clip_norm > 0,
          "TrainConfig: rates must be positive");
}

bool early_stopping_update(EarlyStopState& state, double val_metric, int epoch, int patience) {
    if (val_metric > state.best_metric) {
        state.best_metric = val_metric;
        state.best_epoch = epoch;
        state.epochs_since_improvement = 0;
    } else {
        state.epochs_since_improvement++;
    }
    return state.epochs_since_improvement >= patience;
}

double cosine_lr(int step, int total_steps, double eta_max, double eta_min) {
    check(total_steps > 0, "cosine_lr: total steps must be positive");
    double t = std::clamp(static_cast<double>(step) / static_cast<double>(total_steps), 0.0, 1.0);
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(3.14159265358979323846 * t));
}

double clip_gradients(const std::vector<Var>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params) {
        if (p->grad.empty()) continue;
        for (std::int64_t i = 0; i < p->grad.numel(); ++i) sq += p->grad[i] * p->grad[i];
    }
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (const auto& p : params) {
            if (p->grad.empty()) continue;
            for (std::int64_t i = 0; i < p->grad.numel(); ++i) p->grad[i] *= scale;
        }
    }
    return norm;
}

AdamW::AdamW(std::vector<Var> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(nn::zeros_like(p->value));
        v_.push_back(nn::zeros_like(p->value));
    }
}

void AdamW::step(double lr, double weight_decay, Precision precision) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i]->value;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        const bool has_grad = !params_[i]->grad.empty();
        for (std::int64_t k = 0; k < p.numel(); ++k) {
            double g = has_grad ? params_[i]->grad[k] : 0.0;
            m[k] = beta1_ * m[k] + (1.0 - beta1_) * g;
            v[k] = beta2_ * v[k] + (1.0 - beta2_) * g * g;
            double mhat = m[k] / bc1;
            double vhat = v[k] / bc2;
            p[k] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay * p[k]);
            if (precision == Precision::Reduced) p[k] = static_cast<double>(static_cast<float>(p[k]));
        }
    }
}

std::pair<Tensor, Tensor> stack_samples(const std::vector<Sample>& samples) {
    check(!samples.empty(), "stack_samples: empty batch");
    const auto& is = samples[0].image.shape();
    const int S = is[1];
    Tensor images({static_cast<int>(samples.size()), 3, S, S});
    Tensor masks({static_cast<int>(samples.size()), 1, S, S});
    for (std::size_t b = 0; b < samples.size(); ++b) {
        check(samples[b].image.same_shape(samples[0].image), "stack_samples: inconsistent sample shapes");
        std::copy_n(samples[b].image.data(), samples[b].image.numel(),
                    images.data() + static_cast<std::int64_t>(b) * samples[b].image.numel());
        std::copy_n(samples[b].mask.data(), samples[b].mask.numel(),
                    masks.data() + static_cast<std::int64_t>(b) * samples[b].mask.numel());
    }
    return {std::move(images), std::move(masks)};
}

namespace {

const data::ImageRecord& record_of(const DatasetManifest& manifest, const std::string& id) {
    const data::ImageRecord* rec = manifest.find(id);
    check(rec != nullptr, "unknown record id: " + id);
    return *rec;
}

}  // namespace

double mean_dice_over(const HyFormerNet& model, const DatasetManifest& manifest, const DatasetView& view,
                      const std::vector<std::string>& ids, const data::PreprocessConfig& pcfg,
                      int batch_size) {
    if (ids.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<Sample> batch;
        for (std::size_t i = start; i < std::min(ids.size(), start + static_cast<std::size_t>(batch_size)); ++i)
            batch.push_back(data::preprocess_sample(view.load(record_of(manifest, ids[i])), pcfg));
        auto [images, masks] = stack_samples(batch);
        ModelOutput out = model.forward(images, /*training=*/false);
        const int S = images.dim(2);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            Tensor pred({S, S}), gt({S, S});
            for (int i = 0; i < S * S; ++i) {
                pred[i] = out.seg_probs->value[static_cast<std::int64_t>(b) * S * S + i] >= 0.5 ? 1.0 : 0.0;
                gt[i] = masks[static_cast<std::int64_t>(b) * S * S + i];
            }
            acc += metrics::dice_score(pred, gt);
        }
    }
    return acc / static_cast<double>(ids.size());
}

TrainResult train(HyFormerNet& model, const DatasetManifest& manifest, const DatasetView& view,
                  const TrainConfig& tcfg, loss::LossConfig lcfg, const data::PreprocessConfig& pcfg,
                  const data::AugmentationConfig& acfg) {
    tcfg.validate();
    pcfg.validate();
    acfg.validate();
    check(pcfg.target_size == model.config().input_size,
          "train: preprocess target size differs from model input size");

    std::vector<std::string> train_ids = manifest.ids(Split::Train);
    std::vector<std::string> val_ids = manifest.ids(Split::Val);
    check(!train_ids.empty(), "train: no records assigned to the train split");
    // validation falls back to the train split when no val records exist
    // (fine-tuning subsets); test records are structurally out of reach.
    const std::vector<std::string>& monitor_ids = val_ids.empty() ? train_ids : val_ids;

    if (lcfg.auto_weights) {
        auto counts = manifest.class_counts(Split::Train);
        for (auto& c : counts) c = std::max<std::int64_t>(c, 1);  // absent classes get unit weight mass
        lcfg.class_weights = loss::class_weights_from_counts(counts);
        lcfg.auto_weights = false;
    }

    auto params = model.params().param_vars();
    AdamW optimizer(params);
    EarlyStopState stop_state;
    TrainResult result;
    std::vector<std::pair<std::string, Tensor>> best_state = model.state_dict();
    int best_epoch = 0;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, tcfg.epochs, tcfg.lr_init, tcfg.lr_min);
        std::vector<std::string> order = train_ids;
        {
            RandomSource shuffle_rng(mix_seed(tcfg.seed, 0x5u + static_cast<std::uint64_t>(epoch)));
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
        }
        double loss_acc = 0.0, seg_acc = 0.0, cls_acc = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch_size)) {
            std::vector<Sample> batch;
            std::vector<int> labels;
            for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch_size));
                 ++i) {
                Sample raw = view.load(record_of(manifest, order[i]));
                Tensor image = data::resize_image(raw.image, pcfg.target_size, pcfg.target_size, pcfg.interpolation);
                Tensor mask = data::resize_mask(raw.mask, pcfg.target_size, pcfg.target_size);
                RandomSource sample_rng(mix_seed(mix_seed(tcfg.seed, static_cast<std::uint64_t>(epoch)),
                                                 static_cast<std::uint64_t>(i) + 1));
                data::augment_sample(image, mask, acfg, sample_rng);
                Sample s;
                s.image = data::normalize_image(image, pcfg.mean, pcfg.stddev);
                s.mask = std::move(mask);
                s.label = raw.label;
                batch.push_back(std::move(s));
                labels.push_back(static_cast<int>(raw.label));
            }
            auto [images, masks] = stack_samples(batch);
            ModelOutput out = model.forward(images, /*training=*/true);
            loss::LossBreakdown bd;
            Var total = loss::total_loss(out.seg_probs, masks, out.class_probs,
                                         loss::one_hot(labels, model.config().num_classes), lcfg, &bd);
            if (!std::isfinite(total->value[0]))
                throw TrainingAbort("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batches) + " (first id " + order[start] + ")");
            nn::zero_grad(params);
            nn::backward(total);
            clip_gradients(params, tcfg.grad_clip_norm);
            optimizer.step(lr, tcfg.weight_decay, tcfg.precision);
            loss_acc += bd.total;
            seg_acc += bd.seg;
            cls_acc += bd.cls;
            ++batches;
        }
        double val_dice = mean_dice_over(model, manifest, view, monitor_ids, pcfg, tcfg.batch_size);
        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.train_loss = loss_acc / batches;
        stats.train_seg = seg_acc / batches;
        stats.train_cls = cls_acc / batches;
        stats.val_dice = val_dice;
        result.history.push_back(stats);
        result.epochs_run = epoch + 1;

        bool improved = val_dice > stop_state.best_metric;
        bool should_stop = early_stopping_update(stop_state, val_dice, epoch, tcfg.patience);
        if (improved) {
            best_state = model.state_dict();
            best_epoch = epoch;
        }
        if (should_stop) break;
    }

    result.last.model_config = model.config();
    result.last.train_config = tcfg;
    result.last.seed = tcfg.seed;
    result.last.epoch = result.epochs_run - 1;
    result.last.history = result.history;
    result.last.state = model.state_dict();

    model.load_state_dict(best_state);  // restore best-epoch weights
    result.early_stop = stop_state;
    result.best.model_config = model.config();
    result.best.train_config = tcfg;
    result.best.seed = tcfg.seed;
    result.best.epoch = best_epoch;
    result.best.history = result.history;
    result.best.state = std::move(best_state);
    return result;
}

TrainResult fine_tune(const CheckpointBundle& checkpoint, HyFormerNet& model,
                      const DatasetManifest& target_manifest, const DatasetView& view,
                      const std::vector<std::string>& train_ids, const TrainConfig& tcfg,
                      loss::LossConfig lcfg, const data::PreprocessConfig& pcfg,
                      const data::AugmentationConfig& acfg) {
    check(model.config() == checkpoint.model_config, "fine_tune: model/checkpoint config mismatch");
    model.load_state_dict(checkpoint.state);
    if (train_ids.empty()) {
        // zero-shot: no training, the caller evaluates the checkpoint as-is
        TrainResult result;
        result.best = checkpoint;
        result.best.train_config = tcfg;
        result.last = result.best;
        return result;
    }
    DatasetManifest ft = target_manifest;
    for (auto& rec : ft.records) {
        rec.split = Split::Unassigned;
        if (std::find(train_ids.begin(), train_ids.end(), rec.id) != train_ids.end()) rec.split = Split::Train;
    }
    return train(model, ft, view, tcfg, lcfg, pcfg, acfg);
}

}  // namespace hyformer::train
