#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyformer/tensor.hpp"

namespace hyformer::metrics {

using nn::Tensor;

// Overlap scores on exactly-binary masks. Both-empty pairs score 1.0 so
// that correct all-background predictions are rewarded; reports additionally
// carry a lesion-only variant that skips empty ground truths.
double dice_score(const Tensor& pred, const Tensor& gt);
double iou_score(const Tensor& pred, const Tensor& gt);

Tensor binarize(const Tensor& probs, double threshold = 0.5);

struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 3>, 3> m{};  // rows: truth, cols: prediction
    std::int64_t total() const;
    std::int64_t trace() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& truths);

struct ClassMetrics {
    double precision = 0, recall = 0, f1 = 0;
    std::int64_t support = 0;
    bool zero_division = false;  // set when a denominator was empty
};

struct ClassificationReport {
    std::array<ClassMetrics, 3> per_class;
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;  // the "overall" row
    std::int64_t total = 0;
};

ClassificationReport classification_metrics(const ConfusionMatrix& cm);

// Evaluation summary for one model / one split.
struct MetricsReport {
    static constexpr int kSchemaVersion = 1;
    std::vector<std::string> image_ids;
    std::vector<double> per_image_dice;
    std::vector<double> per_image_iou;
    double mean_dice = 0, mean_iou = 0;
    double lesion_only_dice = 0;  // mean over images with non-empty ground truth
    std::int64_t lesion_image_count = 0;
    ClassificationReport classification;
    // optional statistics filled by callers
    bool has_ci = false;
    double dice_ci_low = 0, dice_ci_high = 0;
};

}  // namespace hyformer::metrics
