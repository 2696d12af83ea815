#pragma once

#include <string>

#include "hyformer/tensor.hpp"

namespace hyformer::io {

using nn::Tensor;

// Loads any common raster format as RGB {3,H,W} in [0,1]. Grayscale inputs
// are replicated across channels. Throws on unreadable files.
Tensor load_image_rgb(const std::string& path);

// Loads a mask file as {H,W} with values in {0,1} (threshold at 50% gray).
Tensor load_mask(const std::string& path);

void save_image_gray(const std::string& path, const Tensor& hw01);
void save_image_rgb(const std::string& path, const Tensor& chw01);

}  // namespace hyformer::io
