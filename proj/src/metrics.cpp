#include "hyformer/metrics.hpp"

namespace hyformer::metrics {

using nn::check;

namespace {
void tally(const Tensor& pred, const Tensor& gt, std::int64_t& inter, std::int64_t& p_count,
           std::int64_t& g_count) {
    check(pred.same_shape(gt), "mask score: shape mismatch " + pred.shape_str() + " vs " + gt.shape_str());
    inter = p_count = g_count = 0;
    for (std::int64_t i = 0; i < pred.numel(); ++i) {
        double p = pred[i], g = gt[i];
        check(p == 0.0 || p == 1.0, "mask score: prediction mask not binary");
        check(g == 0.0 || g == 1.0, "mask score: ground-truth mask not binary");
        p_count += p == 1.0;
        g_count += g == 1.0;
        inter += (p == 1.0 && g == 1.0);
    }
}
}  // namespace

double dice_score(const Tensor& pred, const Tensor& gt) {
    std::int64_t inter, pc, gc;
    tally(pred, gt, inter, pc, gc);
    if (pc + gc == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(pc + gc);
}

double iou_score(const Tensor& pred, const Tensor& gt) {
    std::int64_t inter, pc, gc;
    tally(pred, gt, inter, pc, gc);
    std::int64_t uni = pc + gc - inter;
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Tensor binarize(const Tensor& probs, double threshold) {
    Tensor out = probs;
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = out[i] >= threshold ? 1.0 : 0.0;
    return out;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : m)
        for (std::int64_t v : row) t += v;
    return t;
}

std::int64_t ConfusionMatrix::trace() const { return m[0][0] + m[1][1] + m[2][2]; }

ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& truths) {
    check(preds.size() == truths.size(), "confusion_matrix: length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        check(truths[i] >= 0 && truths[i] < 3 && preds[i] >= 0 && preds[i] < 3,
              "confusion_matrix: label outside {0,1,2}");
        cm.m[static_cast<std::size_t>(truths[i])][static_cast<std::size_t>(preds[i])]++;
    }
    return cm;
}

ClassificationReport classification_metrics(const ConfusionMatrix& cm) {
    ClassificationReport rep;
    rep.total = cm.total();
    rep.accuracy = rep.total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(rep.total) : 0.0;
    for (int c = 0; c < 3; ++c) {
        std::int64_t tp = cm.m[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        std::int64_t pred_c = 0, true_c = 0;
        for (int k = 0; k < 3; ++k) {
            pred_c += cm.m[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
            true_c += cm.m[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
        }
        ClassMetrics& cmc = rep.per_class[static_cast<std::size_t>(c)];
        cmc.support = true_c;
        if (pred_c == 0) {
            cmc.precision = 0.0;
            cmc.zero_division = true;
        } else {
            cmc.precision = static_cast<double>(tp) / static_cast<double>(pred_c);
        }
        if (true_c == 0) {
            cmc.recall = 0.0;
            cmc.zero_division = true;
        } else {
            cmc.recall = static_cast<double>(tp) / static_cast<double>(true_c);
        }
        if (cmc.precision + cmc.recall == 0.0) {
            cmc.f1 = 0.0;
            cmc.zero_division = true;
        } else {
            cmc.f1 = 2.0 * cmc.precision * cmc.recall / (cmc.precision + cmc.recall);
        }
        rep.macro_precision += cmc.precision / 3.0;
        rep.macro_recall += cmc.recall / 3.0;
        rep.macro_f1 += cmc.f1 / 3.0;
    }
    return rep;
}

}  // namespace hyformer::metrics
