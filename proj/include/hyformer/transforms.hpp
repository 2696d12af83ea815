#pragma once

#include <array>

#include "hyformer/tensor.hpp"

namespace hyformer::data {

using nn::Tensor;

enum class Interp { Bicubic, Bilinear, Nearest };

std::string to_string(Interp i);
Interp interp_from_string(const std::string& s);

// Images are {C,H,W} in [0,1]; masks are {H,W} in {0,1}.
Tensor resize_image(const Tensor& chw, int out_h, int out_w, Interp interp);
// Nearest-neighbor with re-binarization at 0.5; output stays exactly binary.
Tensor resize_mask(const Tensor& mask, int out_h, int out_w);

Tensor hflip_image(const Tensor& chw);
Tensor vflip_image(const Tensor& chw);
Tensor hflip_mask(const Tensor& mask);
Tensor vflip_mask(const Tensor& mask);

// Rotation about the image center; exposed corners fill with 0.
Tensor rotate_image(const Tensor& chw, double degrees);  // bilinear sampling
Tensor rotate_mask(const Tensor& mask, double degrees);  // nearest sampling

Tensor normalize_image(const Tensor& chw, const std::array<double, 3>& mean, const std::array<double, 3>& stddev);

}  // namespace hyformer::data
