#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyformer/data.hpp"
#include "hyformer/losses.hpp"
#include "hyformer/metrics.hpp"
#include "hyformer/model.hpp"

namespace hyformer::train {

using nn::Tensor;
using nn::Var;

enum class Precision { High, Reduced };
std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 50;
    int patience = 10;
    double lr_init = 1e-5;
    double lr_min = 0.0;
    double weight_decay = 1e-4;
    double grad_clip_norm = 0.5;
    int batch_size = 8;
    Precision precision = Precision::High;
    std::uint64_t seed = 42;
    void validate() const;
};

struct EarlyStopState {
    double best_metric = -std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int epochs_since_improvement = 0;
};

// Strict-improvement rule; returns true when training should stop.
bool early_stopping_update(EarlyStopState& state, double val_metric, int epoch, int patience);

double cosine_lr(int step, int total_steps, double eta_max, double eta_min = 0.0);

// Scales all gradients by max_norm/norm when the global L2 norm exceeds
// max_norm; returns the pre-clip norm.
double clip_gradients(const std::vector<Var>& params, double max_norm);

// Adam with decoupled weight decay. Moment buffers align with the parameter
// list passed at construction.
class AdamW {
public:
    explicit AdamW(std::vector<Var> params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(double lr, double weight_decay, Precision precision = Precision::High);
    long step_count() const { return t_; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_, v_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0, train_loss = 0, train_seg = 0, train_cls = 0, val_dice = 0;
};

struct CheckpointBundle {
    static constexpr std::uint32_t kFormatVersion = 1;
    ModelConfig model_config;
    TrainConfig train_config;
    std::uint64_t seed = 0;
    int epoch = 0;
    std::vector<EpochStats> history;
    std::vector<std::pair<std::string, Tensor>> state;  // parameters then buffers, canonical order
};

void save_checkpoint(const CheckpointBundle& bundle, const std::string& path);
CheckpointBundle load_checkpoint(const std::string& path);
std::unique_ptr<HyFormerNet> model_from_checkpoint(const CheckpointBundle& bundle);

struct TrainingAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    CheckpointBundle best;  // best-epoch weights (also restored into the model)
    CheckpointBundle last;  // weights at the final executed epoch
    std::vector<EpochStats> history;
    EarlyStopState early_stop;
    int epochs_run = 0;
};

// Full protocol: shuffled augmented batches, joint loss, gradient clipping,
// AdamW with a per-epoch cosine schedule, validation-Dice early stopping,
// best-epoch weight restoration. Only Train/Val records are ever loaded.
TrainResult train(HyFormerNet& model, const data::DatasetManifest& manifest, const data::DatasetView& view,
                  const TrainConfig& tcfg, loss::LossConfig lcfg, const data::PreprocessConfig& pcfg,
                  const data::AugmentationConfig& acfg);

// Resumes a source-domain checkpoint on a target-domain subset with every
// parameter unfrozen. Empty train set degenerates to zero-shot (no training).
TrainResult fine_tune(const CheckpointBundle& checkpoint, HyFormerNet& model,
                      const data::DatasetManifest& target_manifest, const data::DatasetView& view,
                      const std::vector<std::string>& train_ids, const TrainConfig& tcfg,
                      loss::LossConfig lcfg, const data::PreprocessConfig& pcfg,
                      const data::AugmentationConfig& acfg);

// Mean validation Dice (threshold 0.5) over the given ids; shared by the
// training loop and evaluation paths.
double mean_dice_over(const HyFormerNet& model, const data::DatasetManifest& manifest,
                      const data::DatasetView& view, const std::vector<std::string>& ids,
                      const data::PreprocessConfig& pcfg, int batch_size);

// Assembles {N,3,S,S} image and {N,1,S,S} mask batches from preprocessed samples.
std::pair<Tensor, Tensor> stack_samples(const std::vector<data::Sample>& samples);

}  // namespace hyformer::train
