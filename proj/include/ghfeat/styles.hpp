#pragma once

#include <torch/torch.h>

#include <vector>

#include "ghfeat/common.hpp"

namespace ghfeat {

// Per-layer modulation code: channel-wise scale and bias. Batched tensors of
// shape [N, c] for the global form or [N, c, h, w] for the spatial form.
struct StyleLayer {
  torch::Tensor scale;
  torch::Tensor bias;

  bool spatial() const { return scale.dim() == 4; }
  StyleLayer clone() const { return {scale.clone(), bias.clone()}; }
  StyleLayer detach() const { return {scale.detach(), bias.detach()}; }
};

// Ordered per-layer style codes, layer 1 first (coarsest generator layer).
// Serves both as the generator's complete input and, with residual
// semantics, as the encoder output. The level-indexed feature view binds
// level l to layer L - l + 1 (level 1 = finest layer).
struct StyleStack {
  std::vector<StyleLayer> layers;

  int64_t layer_count() const { return static_cast<int64_t>(layers.size()); }
  int64_t batch() const { return layers.empty() ? 0 : layers.front().scale.size(0); }

  StyleStack clone() const;
  StyleStack detach() const;

  // Level-view accessors (1-based level index).
  StyleLayer& level(int64_t lvl);
  const StyleLayer& level(int64_t lvl) const;

  // Flattened [N, 2c] view of one layer (scale then bias).
  torch::Tensor layer_flat(int64_t layer_idx0) const;

  // Elementwise a + b (shapes must agree layer by layer).
  static StyleStack add(const StyleStack& a, const StyleStack& b);
};

inline int64_t level_to_layer(int64_t level, int64_t layer_count) {
  if (level < 1 || level > layer_count) throw BoundsError("level index out of range");
  return layer_count - level + 1;  // 1-based
}

// Number of modulated convolutional layers for a given output resolution:
// 2 * log2(res) - 2 (8 at 32^2, 14 at 256^2).
int64_t conv_layer_count(int64_t resolution);

// Set of level indices (1-based, within [1, L]); empty allowed.
struct LevelSet {
  std::vector<int64_t> indices;

  static LevelSet all(int64_t layer_count);
  static LevelSet of(std::initializer_list<int64_t> idx) { return LevelSet{std::vector<int64_t>(idx)}; }
  bool contains(int64_t level) const;
  void check_range(int64_t layer_count) const;
};

}  // namespace ghfeat
