#include "ghfeat/styles.hpp"

#include <algorithm>
#include <cmath>

namespace ghfeat {

StyleStack StyleStack::clone() const {
  StyleStack out;
  out.layers.reserve(layers.size());
  for (const auto& l : layers) out.layers.push_back(l.clone());
  return out;
}

StyleStack StyleStack::detach() const {
  StyleStack out;
  out.layers.reserve(layers.size());
  for (const auto& l : layers) out.layers.push_back(l.detach());
  return out;
}

StyleLayer& StyleStack::level(int64_t lvl) { return layers.at(level_to_layer(lvl, layer_count()) - 1); }

const StyleLayer& StyleStack::level(int64_t lvl) const {
  return layers.at(level_to_layer(lvl, layer_count()) - 1);
}

torch::Tensor StyleStack::layer_flat(int64_t layer_idx0) const {
  const auto& l = layers.at(layer_idx0);
  auto s = l.scale.flatten(1);
  auto b = l.bias.flatten(1);
  return torch::cat({s, b}, 1);
}

StyleStack StyleStack::add(const StyleStack& a, const StyleStack& b) {
  if (a.layer_count() != b.layer_count()) throw ShapeError("StyleStack::add layer count mismatch");
  StyleStack out;
  out.layers.reserve(a.layers.size());
  for (size_t i = 0; i < a.layers.size(); ++i) {
    out.layers.push_back({a.layers[i].scale + b.layers[i].scale, a.layers[i].bias + b.layers[i].bias});
  }
  return out;
}

int64_t conv_layer_count(int64_t resolution) {
  if (resolution < 4 || (resolution & (resolution - 1)) != 0)
    throw ShapeError("resolution must be a power of two >= 4");
  const int64_t log2res = static_cast<int64_t>(std::llround(std::log2(static_cast<double>(resolution))));
  return 2 * log2res - 2;
}

LevelSet LevelSet::all(int64_t layer_count) {
  LevelSet s;
  s.indices.resize(layer_count);
  for (int64_t i = 0; i < layer_count; ++i) s.indices[i] = i + 1;
  return s;
}

bool LevelSet::contains(int64_t level) const {
  return std::find(indices.begin(), indices.end(), level) != indices.end();
}

void LevelSet::check_range(int64_t layer_count) const {
  for (int64_t i : indices)
    if (i < 1 || i > layer_count) throw BoundsError("level set index out of range: " + std::to_string(i));
}

}  // namespace ghfeat
