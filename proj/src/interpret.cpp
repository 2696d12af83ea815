#include "hyformer/interpret.hpp"

#include <algorithm>
#include <cmath>

#include "hyformer/metrics.hpp"
#include "hyformer/ops.hpp"

namespace hyformer::interpret {

using nn::check;

OtsuResult otsu_threshold(const Tensor& values, int bins) {
    check(values.numel() > 0, "otsu_threshold: empty map");
    check(bins >= 2, "otsu_threshold: need at least 2 bins");
    const double lo = values.min(), hi = values.max();
    OtsuResult res;
    if (lo == hi) {
        res.threshold = lo;
        res.degenerate = true;
        return res;
    }
    std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (std::int64_t i = 0; i < values.numel(); ++i) {
        int b = static_cast<int>((values[i] - lo) / (hi - lo) * bins);
        b = std::min(b, bins - 1);
        hist[static_cast<std::size_t>(b)]++;
    }
    // single cumulative sweep over candidate boundaries
    const double total = static_cast<double>(values.numel());
    double total_mean = 0.0;
    for (int b = 0; b < bins; ++b) total_mean += (b + 0.5) * static_cast<double>(hist[static_cast<std::size_t>(b)]);
    total_mean /= total;

    double best_var = -1.0;
    int best_k = 1;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 1; k < bins; ++k) {
        w0 += static_cast<double>(hist[static_cast<std::size_t>(k - 1)]);
        sum0 += (k - 0.5) * static_cast<double>(hist[static_cast<std::size_t>(k - 1)]);
        double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        double mu0 = sum0 / w0;
        double mu1 = (total_mean * total - sum0) / w1;
        double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best_var) {  // strict: ties keep the lowest threshold
            best_var = between;
            best_k = k;
        }
    }
    res.threshold = lo + best_k * width;
    res.bin_index = best_k;
    return res;
}

Tensor erode3x3(const Tensor& mask) {
    const auto& s = mask.shape();
    check(s.size() == 2, "erode3x3: {H,W} expected");
    const int H = s[0], W = s[1];
    Tensor out({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool all = true;
            for (int dy = -1; dy <= 1 && all; ++dy)
                for (int dx = -1; dx <= 1 && all; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= H || xx < 0 || xx >= W || mask.at2(yy, xx) != 1.0) all = false;
                }
            out.at2(y, x) = all ? 1.0 : 0.0;
        }
    return out;
}

Tensor dilate3x3(const Tensor& mask) {
    const auto& s = mask.shape();
    check(s.size() == 2, "dilate3x3: {H,W} expected");
    const int H = s[0], W = s[1];
    Tensor out({H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool any = false;
            for (int dy = -1; dy <= 1 && !any; ++dy)
                for (int dx = -1; dx <= 1 && !any; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy >= 0 && yy < H && xx >= 0 && xx < W && mask.at2(yy, xx) == 1.0) any = true;
                }
            out.at2(y, x) = any ? 1.0 : 0.0;
        }
    return out;
}

Tensor morphological_open(const Tensor& mask, int iterations) {
    check(iterations >= 1, "morphological_open: iterations must be >= 1");
    for (std::int64_t i = 0; i < mask.numel(); ++i)
        check(mask[i] == 0.0 || mask[i] == 1.0, "morphological_open: mask must be binary");
    Tensor out = mask;
    for (int i = 0; i < iterations; ++i) out = erode3x3(out);
    for (int i = 0; i < iterations; ++i) out = dilate3x3(out);
    return out;
}

AttentionValidationResult attention_validation_pipeline(const ModelOutput& output, const Tensor& gt_mask,
                                                        int sample_index) {
    check(!output.attention_maps.empty(), "attention_validation: no attention maps captured");
    check(gt_mask.rank() == 2, "attention_validation: {H,W} ground truth expected");
    AttentionValidationResult res;

    Tensor alpha_all = extract_attention_map(output, -1);  // finest gate, {N,1,h,w}
    const int h = alpha_all.dim(2), w = alpha_all.dim(3);
    res.raw_alpha = Tensor({h, w});
    std::copy_n(alpha_all.data() + static_cast<std::int64_t>(sample_index) * h * w, h * w, res.raw_alpha.data());

    const int H = gt_mask.dim(0), W = gt_mask.dim(1);
    Tensor as4 = Tensor::from({1, 1, h, w}, res.raw_alpha.vec());
    Tensor up = nn::bilinear_resize_plain(as4, H, W);
    res.upsampled = Tensor::from({H, W}, up.vec());

    OtsuResult otsu = otsu_threshold(res.upsampled);
    res.threshold = otsu.threshold;
    res.degenerate = otsu.degenerate;
    Tensor bin({H, W});
    for (std::int64_t i = 0; i < bin.numel(); ++i)
        bin[i] = (!otsu.degenerate && res.upsampled[i] >= otsu.threshold) ? 1.0 : 0.0;
    res.attention_mask = morphological_open(bin);

    if (gt_mask.sum() == 0.0) {
        res.empty_flag = true;
        res.iou = res.attention_mask.sum() == 0.0 ? 1.0 : 0.0;
    } else {
        res.iou = metrics::iou_score(res.attention_mask, gt_mask);
    }
    return res;
}

GradCamResult grad_cam_from_features(const Tensor& features, const Tensor& grads, int out_h, int out_w) {
    check(features.same_shape(grads), "grad_cam: feature/gradient shape mismatch");
    check(features.rank() == 3, "grad_cam: {C,H,W} expected");
    const int C = features.dim(0), H = features.dim(1), W = features.dim(2);
    GradCamResult res;
    res.channel_weights = Tensor({C});
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = 0; i < H * W; ++i) acc += grads[static_cast<std::int64_t>(c) * H * W + i];
        res.channel_weights[c] = acc / (H * W);
    }
    res.heatmap = Tensor({H, W});
    for (int i = 0; i < H * W; ++i) {
        double acc = 0.0;
        for (int c = 0; c < C; ++c) acc += res.channel_weights[c] * features[static_cast<std::int64_t>(c) * H * W + i];
        res.heatmap[i] = std::max(0.0, acc);
    }
    Tensor hm4 = Tensor::from({1, 1, H, W}, res.heatmap.vec());
    Tensor up = nn::bilinear_resize_plain(hm4, out_h, out_w);
    res.overlay = Tensor::from({out_h, out_w}, up.vec());
    const double lo = res.overlay.min(), hi = res.overlay.max();
    if (hi > lo)
        for (std::int64_t i = 0; i < res.overlay.numel(); ++i) res.overlay[i] = (res.overlay[i] - lo) / (hi - lo);
    else
        res.overlay.fill(0.0);
    return res;
}

GradCamResult grad_cam(const HyFormerNet& model, const Tensor& image_chw, int target_class) {
    check(image_chw.rank() == 3 && image_chw.dim(0) == 3, "grad_cam: {3,H,W} image expected");
    check(target_class >= 0 && target_class < model.config().num_classes,
          "grad_cam: class index " + std::to_string(target_class) + " out of range");
    Tensor batch = Tensor::from({1, 3, image_chw.dim(1), image_chw.dim(2)}, image_chw.vec());
    // gradients flow to the bottleneck through a fresh leaf marked as
    // requiring grad; parameters do not need their grads here
    nn::Var input = nn::make_leaf(batch, /*requires_grad=*/true, "gradcam_input");
    ModelOutput out = model.forward(input, /*training=*/false);

    Tensor seed = nn::zeros_like(out.class_logits->value);
    seed.at2(0, target_class) = 1.0;
    nn::backward(out.class_logits, &seed);

    const Tensor& f4 = out.bottleneck->value;  // {1,C,H',W'}
    const int C = f4.dim(1), H = f4.dim(2), W = f4.dim(3);
    Tensor features({C, H, W}), grads({C, H, W});
    std::copy_n(f4.data(), f4.numel(), features.data());
    check(!out.bottleneck->grad.empty(), "grad_cam: no gradient reached the bottleneck");
    std::copy_n(out.bottleneck->grad.data(), grads.numel(), grads.data());
    return grad_cam_from_features(features, grads, image_chw.dim(1), image_chw.dim(2));
}

}  // namespace hyformer::interpret
