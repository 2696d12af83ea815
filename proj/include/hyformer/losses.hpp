#pragma once

#include <array>
#include <cstdint>

#include "hyformer/ops.hpp"

namespace hyformer::loss {

using nn::Tensor;
using nn::Var;

struct LossConfig {
    double lambda_seg = 1.0;
    double lambda_cls = 0.5;
    double dice_smooth = 1.0;  // epsilon in the soft-Dice denominator
    std::array<double, 3> class_weights{1.0, 1.0, 1.0};
    bool auto_weights = false;  // resolve from training-split class counts

    void validate() const;
};

// Probabilities are clamped to [kProbClamp, 1-kProbClamp] before any log.
inline constexpr double kProbClamp = 1e-7;

// Soft Dice over the whole tensor (one sample).
Var dice_loss(const Var& p, const Tensor& g, double eps);
// Pixel-mean binary cross-entropy.
Var bce_loss(const Var& p, const Tensor& g);
// Dice + BCE with unit coefficients; for batched input {N,1,H,W} the Dice
// term is the mean of per-sample Dice losses.
Var segmentation_loss(const Var& p, const Tensor& g, const LossConfig& cfg);

std::array<double, 3> class_weights_from_counts(const std::array<std::int64_t, 3>& counts);
Tensor one_hot(const std::vector<int>& labels, int num_classes);

// probs {N,C} on the simplex, targets one-hot {N,C}.
Var weighted_ce_loss(const Var& probs, const Tensor& onehot, const std::array<double, 3>& weights);

struct LossBreakdown {
    double total = 0, seg = 0, cls = 0, dice = 0, bce = 0;
};

Var total_loss(const Var& seg_probs, const Tensor& gt_masks, const Var& class_probs,
               const Tensor& labels_onehot, const LossConfig& cfg, LossBreakdown* breakdown = nullptr);

}  // namespace hyformer::loss
