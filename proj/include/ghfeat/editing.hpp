#pragma once

#include <torch/torch.h>

#include "ghfeat/encoder.hpp"
#include "ghfeat/generator.hpp"
#include "ghfeat/styles.hpp"

namespace ghfeat {

// Off-the-shelf semantic direction in the intermediate latent space,
// consumed as an input vector (never learned here).
struct SemanticDirection {
  torch::Tensor latent_vector;  // [w_dim]
  double strength = 0.0;
};

// Level-wise swap: output level l comes from `style` when l is in the set,
// from `content` otherwise. Untouched levels are bit-identical.
StyleStack mix_styles(const StyleStack& content, const StyleStack& style, const LevelSet& levels);

// Replaces the selected levels with freshly sampled style codes
// (z -> w -> styles, seeded); complement levels are bit-identical.
StyleStack global_edit(Generator& gen, const StyleStack& feat, const LevelSet& levels, uint64_t seed);

// Region splice of the post-modulation feature map at the generator layer
// bound to `level` (region in image coordinates, mapped to the enclosing
// feature cells). The donor synthesis comes from donor_seed. Splices at
// levels other than 1 can leak slightly outside the region through the
// per-layer normalization statistics.
torch::Tensor local_edit(Generator& gen, Encoder& enc, const torch::Tensor& content_image,
                         uint64_t donor_seed, int64_t level, const Rect& image_region);

// Encode-then-render of a stitched image; the encoder smooths the seams.
torch::Tensor harmonize(Generator& gen, Encoder& enc, const torch::Tensor& stitched_image);

// Swaps the coarsest round(coarse_fraction * L) levels from the style
// reference into the content features, then renders.
torch::Tensor style_transfer(Generator& gen, Encoder& enc, const torch::Tensor& content_image,
                             const torch::Tensor& style_image, double coarse_fraction);

// Applies a latent-space direction through the affine style heads:
// offset = affine(strength * v) - affine(0), added to every layer.
// Strength 0 is the exact identity; offsets add linearly in strength.
StyleStack apply_direction(Generator& gen, const StyleStack& feat, const SemanticDirection& dir);

// Shared helper: encode + finalize.
StyleStack encode_features(Generator& gen, Encoder& enc, const torch::Tensor& image);

// Maps an image-space rectangle to the enclosing cell rectangle of a
// feature grid with the given resolution ratio.
Rect image_rect_to_grid(const Rect& image_region, int64_t image_size, int64_t grid_size);

}  // namespace ghfeat
