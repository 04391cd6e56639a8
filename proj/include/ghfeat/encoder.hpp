#pragma once

#include <torch/torch.h>

#include <vector>

#include "ghfeat/generator.hpp"
#include "ghfeat/styles.hpp"

namespace ghfeat {

struct EncoderConfig {
  int64_t resolution = 32;
  int64_t img_channels = 1;
  int64_t stem_channels = 32;
  // Residual stage widths; stage 1 keeps the stem resolution, every later
  // stage halves it. The last three stages feed the pyramid.
  std::vector<int64_t> stage_channels = {32, 64, 128, 256, 512};
  int64_t pool_target = 2;

  static EncoderConfig from(const Config& cfg);
};

// Feature maps from the last three backbone stages (after top-down
// refinement), finest first, plus their fused forms after spatial alignment.
struct PyramidMaps {
  torch::Tensor r4;
  torch::Tensor r5;
  torch::Tensor r6;
};

// Binding of a feature level to its generator layer and pyramid stage.
// Level 1 is the finest (last) generator layer. The finest share of the
// synthesis blocks maps to r4, the middle share to r5, the rest to r6,
// mirroring the reference layout proportions (3/7, 2/7, 2/7 of the blocks).
struct LevelBinding {
  int64_t level = 0;  // 1-based
  int64_t layer = 0;  // 1-based generator layer = L - level + 1
  int64_t stage = 0;  // 0 -> r4, 1 -> r5, 2 -> r6
  int64_t width = 0;  // style channel count of the bound layer
  int64_t layer_resolution = 0;
};

std::vector<LevelBinding> compute_level_bindings(const GeneratorConfig& gen_cfg);

// Nearest-neighbor upsampling to a square target size (each source cell is
// repeated over the whole block it covers when the ratio is integral).
torch::Tensor upsample_nearest(const torch::Tensor& map, int64_t target_size);

class ResBlockImpl : public torch::nn::Module {
 public:
  ResBlockImpl(int64_t in, int64_t out, int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
  torch::nn::GroupNorm norm1_{nullptr}, norm2_{nullptr};
  torch::nn::Conv2d skip_{nullptr};
  bool has_skip_ = false;
};
TORCH_MODULE(ResBlock);

// Shared backbone: conv stem plus five residual stages with a top-down
// pass over the last three. Width and spatial layout follow the config.
class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const EncoderConfig& cfg);
  PyramidMaps forward(const torch::Tensor& x);

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  torch::nn::Conv2d stem_{nullptr};
  torch::nn::GroupNorm stem_norm_{nullptr};
  torch::nn::ModuleList stages_;
  torch::nn::Conv2d td65_{nullptr}, td54_{nullptr};  // top-down width projections
};
TORCH_MODULE(Backbone);

// Hierarchical encoder: backbone + spatial alignment + per-level FC heads
// producing residual style codes anchored at the generator's mean styles.
class EncoderImpl : public torch::nn::Module {
 public:
  EncoderImpl(const EncoderConfig& cfg, const GeneratorConfig& gen_cfg);

  PyramidMaps backbone_forward(const torch::Tensor& x);
  // Fuses the pyramid: r_i = W_i * down(r_i) + W_6 * r6 for i in {4, 5},
  // and r6 projected by W_6. All outputs share r6's spatial size and the
  // fuse width.
  PyramidMaps sam_fuse(const PyramidMaps& p);
  // Pools each fused map and maps it with per-level FC heads to residual
  // codes with the bound layer's widths. Heads start zero so a fresh
  // encoder emits exactly zero residuals.
  StyleStack to_levels(const PyramidMaps& fused);
  // backbone_forward then sam_fuse then to_levels.
  StyleStack encode(const torch::Tensor& x);

  const std::vector<LevelBinding>& bindings() const { return bindings_; }
  const EncoderConfig& config() const { return cfg_; }

  torch::nn::Conv2d sam_w4() { return w4_; }
  torch::nn::Conv2d sam_w5() { return w5_; }
  torch::nn::Conv2d sam_w6() { return w6_; }

  Backbone backbone{nullptr};

 private:
  void check_input(const torch::Tensor& x) const;

  EncoderConfig cfg_;
  std::vector<LevelBinding> bindings_;
  torch::nn::Conv2d w4_{nullptr}, w5_{nullptr}, w6_{nullptr};
  torch::nn::ModuleList heads_;
};
TORCH_MODULE(Encoder);

// Spatial-aware variant: same backbone, but each level is embedded with a
// 1x1 convolution and upsampled to the bound generator layer's spatial
// size, yielding residual style maps instead of vectors.
class SpatialEncoderImpl : public torch::nn::Module {
 public:
  SpatialEncoderImpl(const EncoderConfig& cfg, const GeneratorConfig& gen_cfg);

  StyleStack encode(const torch::Tensor& x);  // spatial residual maps

  const std::vector<LevelBinding>& bindings() const { return bindings_; }
  const EncoderConfig& config() const { return cfg_; }

  Backbone backbone{nullptr};

 private:
  EncoderConfig cfg_;
  std::vector<LevelBinding> bindings_;
  torch::nn::ModuleList heads_;
};
TORCH_MODULE(SpatialEncoder);

// Residual anchoring: mean styles plus residual codes, layer by layer.
// Accepts flat or spatial residuals; the mean broadcasts over both.
StyleStack finalize_features(const StyleStack& mean_styles, const StyleStack& residuals);

}  // namespace ghfeat
