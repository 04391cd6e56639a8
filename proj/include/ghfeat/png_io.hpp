#pragma once

#include <torch/torch.h>

#include <string>

#include "ghfeat/common.hpp"

namespace ghfeat {

// 8-bit PNG round-trip. Tensors are [H, W] (grayscale) or [H, W, 3] uint8.
torch::Tensor read_png(const std::string& path);
void write_png(const std::string& path, const torch::Tensor& image);

// [-1, 1] float [C, H, W] or [N, C, H, W] -> byte image(s); N tiles into a
// grid with `cols` columns and a 2 px separator.
torch::Tensor to_byte_image(const torch::Tensor& img);
torch::Tensor make_grid(const torch::Tensor& batch, int64_t cols);

// byte [H, W] or [H, W, 3] -> [1, C, H, W] float in [-1, 1].
torch::Tensor from_byte_image(const torch::Tensor& bytes, int64_t channels);

}  // namespace ghfeat
