#include "ghfeat/editing.hpp"

#include <cmath>

namespace ghfeat {

StyleStack mix_styles(const StyleStack& content, const StyleStack& style, const LevelSet& levels) {
  if (content.layer_count() != style.layer_count())
    throw ShapeError("mix_styles: stacks come from different architectures");
  levels.check_range(content.layer_count());
  StyleStack out = content.clone();
  for (int64_t lvl : levels.indices) out.level(lvl) = style.level(lvl).clone();
  return out;
}

StyleStack global_edit(Generator& gen, const StyleStack& feat, const LevelSet& levels, uint64_t seed) {
  levels.check_range(feat.layer_count());
  if (levels.indices.empty()) return feat.clone();
  torch::NoGradGuard no_grad;
  auto z = sample_latent(feat.batch(), gen->config().z_dim, derive_seed(seed, "global-edit"));
  auto sampled = gen->affine_styles(gen->map_latent(z));
  return mix_styles(feat, sampled, levels);
}

Rect image_rect_to_grid(const Rect& image_region, int64_t image_size, int64_t grid_size) {
  if (image_region.empty()) return {};
  const double ratio = static_cast<double>(grid_size) / static_cast<double>(image_size);
  const int64_t x0 = static_cast<int64_t>(std::floor(image_region.x * ratio));
  const int64_t y0 = static_cast<int64_t>(std::floor(image_region.y * ratio));
  const int64_t x1 = static_cast<int64_t>(std::ceil((image_region.x + image_region.w) * ratio));
  const int64_t y1 = static_cast<int64_t>(std::ceil((image_region.y + image_region.h) * ratio));
  return {x0, y0, std::max<int64_t>(x1 - x0, 1), std::max<int64_t>(y1 - y0, 1)};
}

StyleStack encode_features(Generator& gen, Encoder& enc, const torch::Tensor& image) {
  return finalize_features(gen->mean_styles(), enc->encode(image));
}

torch::Tensor local_edit(Generator& gen, Encoder& enc, const torch::Tensor& content_image,
                         uint64_t donor_seed, int64_t level, const Rect& image_region) {
  torch::NoGradGuard no_grad;
  const int64_t image_size = gen->config().resolution;
  if (!image_region.empty() &&
      (image_region.x < 0 || image_region.y < 0 || image_region.x + image_region.w > image_size ||
       image_region.y + image_region.h > image_size))
    throw BoundsError("local_edit region out of image bounds");

  auto features = encode_features(gen, enc, content_image);
  if (image_region.empty()) return gen->synthesize(features);

  const int64_t layer = level_to_layer(level, features.layer_count());
  const int64_t grid_size = gen->config().layer_resolution(layer);

  // Donor feature maps from a fresh sample.
  auto z = sample_latent(content_image.size(0), gen->config().z_dim, derive_seed(donor_seed, "donor"));
  std::vector<torch::Tensor> donor_maps;
  gen->synthesize(gen->affine_styles(gen->map_latent(z)), nullptr, &donor_maps);

  FeatureEdit edit;
  edit.layer = layer;
  edit.region = image_rect_to_grid(image_region, image_size, grid_size);
  edit.replacement = donor_maps.at(static_cast<size_t>(layer - 1));
  std::vector<FeatureEdit> edits = {edit};
  return gen->synthesize(features, &edits);
}

torch::Tensor harmonize(Generator& gen, Encoder& enc, const torch::Tensor& stitched_image) {
  torch::NoGradGuard no_grad;
  return gen->synthesize(encode_features(gen, enc, stitched_image));
}

torch::Tensor style_transfer(Generator& gen, Encoder& enc, const torch::Tensor& content_image,
                             const torch::Tensor& style_image, double coarse_fraction) {
  if (coarse_fraction < 0.0 || coarse_fraction > 1.0)
    throw BoundsError("style_transfer: coarse_fraction must be within [0, 1]");
  torch::NoGradGuard no_grad;
  auto content = encode_features(gen, enc, content_image);
  auto style = encode_features(gen, enc, style_image);
  const int64_t layer_total = content.layer_count();
  const int64_t k = static_cast<int64_t>(std::llround(coarse_fraction * layer_total));
  LevelSet coarse;
  for (int64_t lvl = layer_total - k + 1; lvl <= layer_total; ++lvl) coarse.indices.push_back(lvl);
  return gen->synthesize(mix_styles(content, style, coarse));
}

StyleStack apply_direction(Generator& gen, const StyleStack& feat, const SemanticDirection& dir) {
  if (dir.latent_vector.numel() != gen->config().w_dim)
    throw ShapeError("apply_direction: direction dimension does not match the latent space");
  torch::NoGradGuard no_grad;
  auto v = dir.latent_vector.reshape({1, -1}).to(torch::kFloat32);
  auto shifted = gen->affine_styles(v * dir.strength);
  auto base = gen->affine_styles(torch::zeros_like(v));
  StyleStack out;
  out.layers.reserve(feat.layers.size());
  for (int64_t i = 0; i < feat.layer_count(); ++i) {
    out.layers.push_back({feat.layers[i].scale + (shifted.layers[i].scale - base.layers[i].scale),
                          feat.layers[i].bias + (shifted.layers[i].bias - base.layers[i].bias)});
  }
  return out;
}

}  // namespace ghfeat
