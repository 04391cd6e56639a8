#pragma once

#include <torch/torch.h>

#include <optional>
#include <vector>

#include "ghfeat/config.hpp"
#include "ghfeat/styles.hpp"

namespace ghfeat {

struct GeneratorConfig {
  int64_t resolution = 32;
  int64_t img_channels = 1;
  int64_t z_dim = 128;
  int64_t w_dim = 128;
  int64_t mapping_layers = 4;
  int64_t mapping_width = 128;
  // Channel width per synthesis block, one entry per resolution 4, 8, ...
  std::vector<int64_t> channels = {256, 256, 128, 64};
  double adain_epsilon = 1e-8;

  int64_t num_blocks() const { return static_cast<int64_t>(channels.size()); }
  int64_t layer_count() const { return conv_layer_count(resolution); }
  // 1-based layer index -> channel width / feature-map resolution.
  int64_t layer_channels(int64_t layer) const { return channels.at((layer - 1) / 2); }
  int64_t layer_resolution(int64_t layer) const { return 4LL << ((layer - 1) / 2); }

  void validate() const;
  static GeneratorConfig from(const Config& cfg);
};

// Eq.-style adaptive instance normalization: per channel, normalize over
// spatial positions with the population std, then modulate with the style
// scale and bias. Styles may be flat [N, C] or spatial maps [N, C, h, w]
// matching x; a spatially constant map gives bit-identical output to the
// flat form.
torch::Tensor adain(const torch::Tensor& x, const StyleLayer& style, double epsilon = 1e-8);

// Replaces a rectangular region of the post-modulation feature map at one
// layer during synthesis (feature-grid coordinates).
struct FeatureEdit {
  int64_t layer = 0;  // 1-based
  Rect region;        // in that layer's grid coordinates
  torch::Tensor replacement;  // [N, c, h, w] full-map donor values
};

class MappingNetImpl : public torch::nn::Module {
 public:
  explicit MappingNetImpl(const GeneratorConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z);

 private:
  torch::nn::ModuleList layers_;
  int64_t z_dim_;
};
TORCH_MODULE(MappingNet);

// Per-layer affine projections from the intermediate latent to style codes.
// Linear + bias, with the scale half of the bias initialized to 1.
class StyleHeadsImpl : public torch::nn::Module {
 public:
  explicit StyleHeadsImpl(const GeneratorConfig& cfg);
  StyleStack forward(const torch::Tensor& w);

 private:
  torch::nn::ModuleList heads_;
  GeneratorConfig cfg_;
};
TORCH_MODULE(StyleHeads);

class SynthesisImpl : public torch::nn::Module {
 public:
  explicit SynthesisImpl(const GeneratorConfig& cfg);

  // Renders the style stack. No per-layer noise: the output is completely
  // determined by the styles and weights. Optional feature edits are
  // applied to the post-modulation map of their layer; `capture`, when
  // given, receives every post-modulation map.
  torch::Tensor forward(const StyleStack& styles, const std::vector<FeatureEdit>* edits = nullptr,
                        std::vector<torch::Tensor>* capture = nullptr);

  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  torch::Tensor const_input_;
  torch::nn::ModuleList in_convs_;    // entering each block > 0
  torch::nn::ModuleList mid_convs_;   // second conv of every block
  torch::nn::Conv2d to_img_{nullptr};
};
TORCH_MODULE(Synthesis);

class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const GeneratorConfig& cfg);

  torch::Tensor map_latent(const torch::Tensor& z);
  StyleStack affine_styles(const torch::Tensor& w);
  torch::Tensor synthesize(const StyleStack& styles, const std::vector<FeatureEdit>* edits = nullptr,
                           std::vector<torch::Tensor>* capture = nullptr);

  // End-to-end z -> image.
  torch::Tensor generate(const torch::Tensor& z);

  // Mean intermediate latent over n mapped samples (seeded); stored so
  // mean_styles() anchors residual features.
  torch::Tensor estimate_mean_latent(int64_t n, uint64_t seed);
  torch::Tensor mean_latent() const;
  StyleStack mean_styles();

  const GeneratorConfig& config() const { return cfg_; }
  MappingNet mapping{nullptr};
  StyleHeads heads{nullptr};
  Synthesis synthesis{nullptr};

 private:
  GeneratorConfig cfg_;
  torch::Tensor mean_latent_;
};
TORCH_MODULE(Generator);

struct DiscriminatorConfig {
  int64_t resolution = 32;
  int64_t img_channels = 1;
  // Width at the input resolution; doubled at each downsampling, capped.
  int64_t base_channels = 64;
  int64_t max_channels = 256;

  static DiscriminatorConfig from(const Config& cfg);
};

class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(const DiscriminatorConfig& cfg);
  // Per-image scalar logits [N]. No cross-sample coupling anywhere, so
  // rows are independent.
  torch::Tensor forward(const torch::Tensor& x);

  const DiscriminatorConfig& config() const { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  torch::nn::ModuleList convs_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(Discriminator);

// Seeded standard-normal latent batch [n, z_dim].
torch::Tensor sample_latent(int64_t n, int64_t z_dim, uint64_t seed);

}  // namespace ghfeat
