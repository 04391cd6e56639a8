#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include "ghfeat/common.hpp"

namespace ghfeat {

// Batch of images in [-1, 1], layout [N, C, H, W]. Labels are optional
// (int64 [N]).
struct ImageBatch {
  torch::Tensor pixels;
  std::optional<torch::Tensor> labels;

  int64_t size() const { return pixels.size(0); }
  int64_t channels() const { return pixels.size(1); }
  int64_t resolution() const { return pixels.size(2); }

  // Enforces the type invariants: 4-d float pixels in [-1, 1], square
  // spatial extent, label count matching N.
  void validate() const;

  ImageBatch index(const torch::Tensor& idx) const;
  ImageBatch slice(int64_t begin, int64_t end) const;
};

struct DatasetSplit {
  ImageBatch train;
  ImageBatch test;
  uint64_t seed = 0;
};

// Maps raw byte images (uint8 or float in [0, 255], [N, H, W] or
// [N, C, H, W]) linearly onto [-1, 1] and zero-pads them symmetrically with
// background (-1) up to target_resolution. Labels are never interpolated;
// callers carry them through unchanged. channels > 1 replicates grayscale.
torch::Tensor preprocess(const torch::Tensor& raw, int64_t target_resolution, int64_t channels = 1);

// Inverse of the linear map, rounded to bytes. preprocess(dequantize(p))
// stays within 1/255 of p per pixel.
torch::Tensor dequantize(const torch::Tensor& pixels);

// Copies `patch` over `base` inside `region` (pixel coordinates); everything
// outside the region is bit-identical to base.
ImageBatch stitch(const ImageBatch& base, const ImageBatch& patch, const Rect& region);

// Deterministic disjoint index split of [0, n): first `n_take` shuffled
// indices and the remainder, stable across calls for equal seeds.
std::pair<std::vector<int64_t>, std::vector<int64_t>> split_indices(int64_t n, int64_t n_take,
                                                                    uint64_t seed);

// Renders one digit of the requested class into a 28x28 byte image. The
// stream state drives stroke thickness, ink level, and affine jitter.
torch::Tensor render_digit(int digit, uint64_t& stream);

// Writes a full synthetic corpus (train/t10k IDX files, MNIST file names)
// into data_dir. Deterministic given seed.
void synthesize_corpus(const std::string& data_dir, int64_t n_train, int64_t n_test, uint64_t seed);

// Loads the dataset from data_dir (expects the standard IDX file names),
// preprocessing to the requested resolution. Verifies content checksums
// against a sidecar recorded on first load.
DatasetSplit load_dataset(const std::string& data_dir, int64_t resolution, int64_t channels,
                          uint64_t seed);

}  // namespace ghfeat
