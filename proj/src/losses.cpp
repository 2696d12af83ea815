#include "hyformer/losses.hpp"

#include <algorithm>
#include <cmath>

namespace hyformer::loss {

using nn::check;
using nn::make_node;
using nn::Node;

void LossConfig::validate() const {
    check(lambda_seg >= 0 && lambda_cls >= 0, "LossConfig: lambdas must be non-negative");
    check(dice_smooth > 0, "LossConfig: dice smoothing must be positive");
    for (double w : class_weights) check(w > 0, "LossConfig: class weights must be positive");
}

namespace {

// Dice over a contiguous range of one flat buffer; shared by the single-sample
// and batched paths.
double dice_range(const double* p, const double* g, std::int64_t n, double eps, double* denom_out,
                  double* inter_out) {
    double inter = 0.0, psum = 0.0, gsum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        inter += p[i] * g[i];
        psum += p[i];
        gsum += g[i];
    }
    double denom = psum + gsum + eps;
    if (denom_out) *denom_out = denom;
    if (inter_out) *inter_out = inter;
    return 1.0 - (2.0 * inter + eps) / denom;
}

}  // namespace

Var dice_loss(const Var& p, const Tensor& g, double eps) {
    check(p->value.same_shape(g), "dice_loss: shape mismatch " + p->value.shape_str() + " vs " + g.shape_str());
    check(eps > 0, "dice_loss: smoothing must be positive");
    double denom, inter;
    double val = dice_range(p->value.data(), g.data(), p->value.numel(), eps, &denom, &inter);
    Tensor gc = g;
    return make_node(Tensor::scalar(val), {p}, [gc = std::move(gc), eps, denom, inter](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        const double gscale = n.grad[0];
        const double num = 2.0 * inter + eps;
        for (std::int64_t i = 0; i < pg.numel(); ++i)
            pg[i] += gscale * (-(2.0 * gc[i] * denom - num) / (denom * denom));
    });
}

Var bce_loss(const Var& p, const Tensor& g) {
    check(p->value.same_shape(g), "bce_loss: shape mismatch");
    const std::int64_t n = p->value.numel();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double ph = std::clamp(p->value[i], kProbClamp, 1.0 - kProbClamp);
        acc += -(g[i] * std::log(ph) + (1.0 - g[i]) * std::log(1.0 - ph));
    }
    Tensor gc = g;
    return make_node(Tensor::scalar(acc / static_cast<double>(n)), {p}, [gc = std::move(gc), n](Node& nd) {
        Tensor& pg = nd.parents[0]->ensure_grad();
        const Tensor& pv = nd.parents[0]->value;
        const double gscale = nd.grad[0] / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            if (pv[i] <= kProbClamp || pv[i] >= 1.0 - kProbClamp) continue;  // clamp saturation
            pg[i] += gscale * (-gc[i] / pv[i] + (1.0 - gc[i]) / (1.0 - pv[i]));
        }
    });
}

Var segmentation_loss(const Var& p, const Tensor& g, const LossConfig& cfg) {
    check(p->value.same_shape(g), "segmentation_loss: shape mismatch");
    const auto& s = p->value.shape();
    const int batch = s.size() == 4 ? s[0] : 1;
    const std::int64_t per = p->value.numel() / batch;
    const double eps = cfg.dice_smooth;

    // mean of per-sample Dice losses
    std::vector<double> denoms(static_cast<std::size_t>(batch)), inters(static_cast<std::size_t>(batch));
    double dice_acc = 0.0;
    for (int b = 0; b < batch; ++b)
        dice_acc += dice_range(p->value.data() + b * per, g.data() + b * per, per, eps,
                               &denoms[static_cast<std::size_t>(b)], &inters[static_cast<std::size_t>(b)]);
    Tensor gc = g;
    Var dice = make_node(Tensor::scalar(dice_acc / batch), {p},
                         [gc, eps, batch, per, denoms = std::move(denoms), inters = std::move(inters)](Node& n) {
                             Tensor& pg = n.parents[0]->ensure_grad();
                             const double gscale = n.grad[0] / batch;
                             for (int b = 0; b < batch; ++b) {
                                 const double denom = denoms[static_cast<std::size_t>(b)];
                                 const double num = 2.0 * inters[static_cast<std::size_t>(b)] + eps;
                                 const double* gp = gc.data() + b * per;
                                 double* dp = pg.data() + b * per;
                                 for (std::int64_t i = 0; i < per; ++i)
                                     dp[i] += gscale * (-(2.0 * gp[i] * denom - num) / (denom * denom));
                             }
                         });
    return nn::add(dice, bce_loss(p, gc));
}

std::array<double, 3> class_weights_from_counts(const std::array<std::int64_t, 3>& counts) {
    std::int64_t total = 0;
    for (std::int64_t c : counts) {
        check(c > 0, "class_weights_from_counts: zero count for a class");
        total += c;
    }
    std::array<double, 3> w{};
    for (int i = 0; i < 3; ++i)
        w[static_cast<std::size_t>(i)] =
            static_cast<double>(total) / (3.0 * static_cast<double>(counts[static_cast<std::size_t>(i)]));
    return w;
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
    Tensor t({static_cast<int>(labels.size()), num_classes});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        check(labels[i] >= 0 && labels[i] < num_classes,
              "one_hot: label " + std::to_string(labels[i]) + " outside [0," + std::to_string(num_classes) + ")");
        t.at2(static_cast<int>(i), labels[i]) = 1.0;
    }
    return t;
}

Var weighted_ce_loss(const Var& probs, const Tensor& onehot, const std::array<double, 3>& weights) {
    check(probs->value.same_shape(onehot), "weighted_ce_loss: shape mismatch");
    const auto& s = probs->value.shape();
    check(s.size() == 2 && s[1] <= 3, "weighted_ce_loss: {N,C<=3} expected");
    const int N = s[0], C = s[1];
    double acc = 0.0;
    for (int i = 0; i < N; ++i)
        for (int c = 0; c < C; ++c) {
            if (onehot.at2(i, c) == 0.0) continue;
            double ph = std::clamp(probs->value.at2(i, c), kProbClamp, 1.0 - kProbClamp);
            acc += -weights[static_cast<std::size_t>(c)] * onehot.at2(i, c) * std::log(ph);
        }
    Tensor oh = onehot;
    return make_node(Tensor::scalar(acc / N), {probs}, [oh = std::move(oh), weights, N, C](Node& n) {
        Tensor& pg = n.parents[0]->ensure_grad();
        const Tensor& pv = n.parents[0]->value;
        const double gscale = n.grad[0] / N;
        for (int i = 0; i < N; ++i)
            for (int c = 0; c < C; ++c) {
                if (oh.at2(i, c) == 0.0) continue;
                double p = pv.at2(i, c);
                if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;
                pg.at2(i, c) += gscale * (-weights[static_cast<std::size_t>(c)] * oh.at2(i, c) / p);
            }
    });
}

Var total_loss(const Var& seg_probs, const Tensor& gt_masks, const Var& class_probs,
               const Tensor& labels_onehot, const LossConfig& cfg, LossBreakdown* breakdown) {
    cfg.validate();
    Var seg = segmentation_loss(seg_probs, gt_masks, cfg);
    Var cls = weighted_ce_loss(class_probs, labels_onehot, cfg.class_weights);
    Var total = nn::add(nn::scale(seg, cfg.lambda_seg), nn::scale(cls, cfg.lambda_cls));
    if (breakdown) {
        breakdown->seg = seg->value[0];
        breakdown->cls = cls->value[0];
        breakdown->total = total->value[0];
        // recompute components for logging
        double denom, inter;
        const auto& s = seg_probs->value.shape();
        const int batch = s.size() == 4 ? s[0] : 1;
        const std::int64_t per = seg_probs->value.numel() / batch;
        double dice_acc = 0.0;
        for (int b = 0; b < batch; ++b)
            dice_acc += dice_range(seg_probs->value.data() + b * per, gt_masks.data() + b * per, per,
                                   cfg.dice_smooth, &denom, &inter);
        breakdown->dice = dice_acc / batch;
        breakdown->bce = breakdown->seg - breakdown->dice;
    }
    return total;
}

}  // namespace hyformer::loss
