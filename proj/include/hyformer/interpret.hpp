#pragma once

#include "hyformer/model.hpp"

namespace hyformer::interpret {

using nn::Tensor;

struct OtsuResult {
    double threshold = 0.0;
    bool degenerate = false;  // constant input; threshold equals the value
    int bin_index = 0;        // boundary index in [1, bins-1]
};

// Histogram spans [min,max] of the map so low-dynamic-range attention maps
// still bifurcate; ties resolve to the lowest threshold.
OtsuResult otsu_threshold(const Tensor& values, int bins = 256);

// Erosions then dilations with a 3x3 square element; zero padding at borders.
Tensor morphological_open(const Tensor& mask, int iterations = 1);
Tensor erode3x3(const Tensor& mask);
Tensor dilate3x3(const Tensor& mask);

struct AttentionValidationResult {
    Tensor raw_alpha;       // as captured from the gate
    Tensor upsampled;       // bilinear, ground-truth resolution
    double threshold = 0;   // Otsu value
    bool degenerate = false;
    Tensor attention_mask;  // binarized + opened
    double iou = 0.0;       // against ground truth
    bool empty_flag = false;  // ground truth empty: both-empty=1 / nonempty-attention=0 convention
};

// Finest decoder gate -> upsample -> Otsu -> opening -> IoU. All
// intermediates are retained for figure emission.
AttentionValidationResult attention_validation_pipeline(const ModelOutput& output, const Tensor& gt_mask,
                                                        int sample_index = 0);

struct GradCamResult {
    Tensor channel_weights;  // {C}: spatial mean of d(logit)/d(feature)
    Tensor heatmap;          // {H',W'}, non-negative
    Tensor overlay;          // upsampled + min-max normalized to [0,1]
};

// Pure Grad-CAM combination; separated from gradient capture so it can be
// checked against hand-computed fixtures. features/grads are {C,H,W}.
GradCamResult grad_cam_from_features(const Tensor& features, const Tensor& grads, int out_h, int out_w);

// Backpropagates the pre-softmax logit of `target_class` to the deepest
// fusion block and forms the heatmap there.
GradCamResult grad_cam(const HyFormerNet& model, const Tensor& image_chw, int target_class);

}  // namespace hyformer::interpret
