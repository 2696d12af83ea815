#include "hyformer/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "hyformer/train.hpp"

namespace hyformer::ensemble {

using nn::check;

void EnsembleSpec::validate(std::size_t member_count) const {
    check(member_count >= 1, "ensemble: need at least one member");
}

int argmax_class(const Tensor& probs, int row, int num_classes) {
    int best = 0;
    for (int c = 1; c < num_classes; ++c)
        if (probs[static_cast<std::int64_t>(row) * num_classes + c] >
            probs[static_cast<std::int64_t>(row) * num_classes + best])
            best = c;
    return best;
}

EnsembleOutput ensemble_predict(const std::vector<const HyFormerNet*>& members, const Tensor& images,
                                const EnsembleSpec& spec) {
    spec.validate(members.size());
    for (std::size_t i = 1; i < members.size(); ++i)
        check(members[i]->config() == members[0]->config(), "ensemble: member configs differ");

    EnsembleOutput out;
    const double k = static_cast<double>(members.size());
    std::vector<Tensor> member_logits;
    for (const HyFormerNet* m : members) {
        ModelOutput mo = m->forward(images, /*training=*/false);
        out.member_seg.push_back(mo.seg_probs->value);
        out.member_class.push_back(mo.class_probs->value);
        member_logits.push_back(mo.class_logits->value);
    }
    // mean computed as ref + mean(member - ref): algebraically the arithmetic
    // mean, and bit-exact when all members coincide
    auto mean_of = [k](const std::vector<Tensor>& members) {
        Tensor mean = members[0];
        for (std::size_t m = 1; m < members.size(); ++m)
            for (std::int64_t i = 0; i < mean.numel(); ++i) mean[i] += (members[m][i] - members[0][i]) / k;
        return mean;
    };
    out.seg_probs = mean_of(out.member_seg);
    out.seg_variance = nn::zeros_like(out.seg_probs);
    for (const Tensor& t : out.member_seg)
        for (std::int64_t i = 0; i < t.numel(); ++i) {
            double d = t[i] - out.seg_probs[i];
            out.seg_variance[i] += d * d / k;
        }

    if (spec.aggregation == Aggregation::MeanProbs) {
        out.class_probs = mean_of(out.member_class);
    } else {
        // mean logits, then one softmax
        Tensor mean_logits = mean_of(member_logits);
        const int rows = mean_logits.dim(0), C = mean_logits.dim(1);
        out.class_probs = nn::zeros_like(mean_logits);
        for (int r = 0; r < rows; ++r) {
            double mx = mean_logits.at2(r, 0);
            for (int c = 1; c < C; ++c) mx = std::max(mx, mean_logits.at2(r, c));
            double s = 0.0;
            for (int c = 0; c < C; ++c) s += std::exp(mean_logits.at2(r, c) - mx);
            for (int c = 0; c < C; ++c) out.class_probs.at2(r, c) = std::exp(mean_logits.at2(r, c) - mx) / s;
        }
    }
    return out;
}

metrics::MetricsReport evaluate(const std::vector<const HyFormerNet*>& members,
                                const data::DatasetManifest& manifest, const data::DatasetView& view,
                                const std::vector<std::string>& ids, const data::PreprocessConfig& pcfg,
                                int batch_size, const EnsembleSpec& spec) {
    spec.validate(members.size());
    metrics::MetricsReport report;
    std::vector<int> preds, truths;
    const int C = members[0]->config().num_classes;
    double lesion_acc = 0.0;

    for (std::size_t start = 0; start < ids.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<data::Sample> batch;
        std::vector<std::string> batch_ids;
        for (std::size_t i = start; i < std::min(ids.size(), start + static_cast<std::size_t>(batch_size)); ++i) {
            const data::ImageRecord* rec = manifest.find(ids[i]);
            check(rec != nullptr, "evaluate: unknown id " + ids[i]);
            batch.push_back(data::preprocess_sample(view.load(*rec), pcfg));
            batch_ids.push_back(ids[i]);
        }
        auto [images, masks] = train::stack_samples(batch);
        EnsembleOutput out = ensemble_predict(members, images, spec);
        const int S = images.dim(2);
        for (std::size_t b = 0; b < batch.size(); ++b) {
            Tensor pred({S, S}), gt({S, S});
            for (int i = 0; i < S * S; ++i) {
                pred[i] = out.seg_probs[static_cast<std::int64_t>(b) * S * S + i] >= 0.5 ? 1.0 : 0.0;
                gt[i] = masks[static_cast<std::int64_t>(b) * S * S + i];
            }
            double dice = metrics::dice_score(pred, gt);
            double iou = metrics::iou_score(pred, gt);
            report.image_ids.push_back(batch_ids[b]);
            report.per_image_dice.push_back(dice);
            report.per_image_iou.push_back(iou);
            if (gt.sum() > 0.0) {
                lesion_acc += dice;
                report.lesion_image_count++;
            }
            preds.push_back(argmax_class(out.class_probs, static_cast<int>(b), C));
            truths.push_back(static_cast<int>(batch[b].label));
        }
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, report.per_image_dice.size()));
    for (double d : report.per_image_dice) report.mean_dice += d / n;
    for (double d : report.per_image_iou) report.mean_iou += d / n;
    report.lesion_only_dice = report.lesion_image_count ? lesion_acc / static_cast<double>(report.lesion_image_count) : 0.0;
    report.classification = metrics::classification_metrics(metrics::confusion_matrix(preds, truths));
    return report;
}

}  // namespace hyformer::ensemble
