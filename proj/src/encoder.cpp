#include "ghfeat/encoder.hpp"

#include <cmath>

namespace F = torch::nn::functional;

namespace ghfeat {

namespace {

int64_t norm_groups(int64_t channels) {
  for (int64_t g = std::min<int64_t>(8, channels); g > 1; --g)
    if (channels % g == 0) return g;
  return 1;
}

torch::Tensor resize_nearest(const torch::Tensor& x, int64_t size) {
  if (x.size(2) == size && x.size(3) == size) return x;
  return F::interpolate(x, F::InterpolateFuncOptions().size(std::vector<int64_t>{size, size})
                               .mode(torch::kNearest));
}

}  // namespace

EncoderConfig EncoderConfig::from(const Config& cfg) {
  EncoderConfig e;
  e.resolution = cfg.get_int("generator.resolution", e.resolution);
  e.img_channels = cfg.get_int("generator.img_channels", e.img_channels);
  e.stem_channels = cfg.get_int("encoder.stem_channels", e.stem_channels);
  e.stage_channels = cfg.get_int_list("encoder.stage_channels", e.stage_channels);
  e.pool_target = cfg.get_int("encoder.pool_target", e.pool_target);
  if (e.stage_channels.size() != 5) throw ConfigError("encoder.stage_channels must list 5 widths");
  return e;
}

std::vector<LevelBinding> compute_level_bindings(const GeneratorConfig& gen_cfg) {
  const int64_t layer_total = gen_cfg.layer_count();
  const int64_t blocks = gen_cfg.num_blocks();
  // Share of synthesis blocks per pyramid stage, finest stage first.
  int64_t n4 = std::max<int64_t>(1, std::llround(blocks * 3.0 / 7.0));
  int64_t n5 = std::min(blocks - n4, std::max<int64_t>(0, std::llround(blocks * 2.0 / 7.0)));
  if (blocks - n4 > 0 && n5 == 0) n5 = 1;

  std::vector<LevelBinding> out;
  for (int64_t level = 1; level <= layer_total; ++level) {
    LevelBinding b;
    b.level = level;
    b.layer = level_to_layer(level, layer_total);
    b.width = gen_cfg.layer_channels(b.layer);
    b.layer_resolution = gen_cfg.layer_resolution(b.layer);
    const int64_t block = (b.layer - 1) / 2;               // 0 = coarsest
    const int64_t rank_from_fine = blocks - 1 - block;     // 0 = finest block
    if (rank_from_fine < n4)
      b.stage = 0;
    else if (rank_from_fine < n4 + n5)
      b.stage = 1;
    else
      b.stage = 2;
    out.push_back(b);
  }
  return out;
}

torch::Tensor upsample_nearest(const torch::Tensor& map, int64_t target_size) {
  if (map.dim() != 4) throw ShapeError("upsample_nearest expects [N, C, h, w]");
  if (target_size < map.size(2)) throw ShapeError("upsample_nearest cannot shrink");
  return resize_nearest(map, target_size);
}

ResBlockImpl::ResBlockImpl(int64_t in, int64_t out, int64_t stride) {
  conv1_ = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(stride).padding(1).bias(false)));
  norm1_ = register_module("norm1", torch::nn::GroupNorm(norm_groups(out), out));
  conv2_ = register_module(
      "conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(out, out, 3).padding(1).bias(false)));
  norm2_ = register_module("norm2", torch::nn::GroupNorm(norm_groups(out), out));
  has_skip_ = (in != out) || (stride != 1);
  if (has_skip_)
    skip_ = register_module(
        "skip", torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 1).stride(stride).bias(false)));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x) {
  auto h = torch::leaky_relu(norm1_->forward(conv1_->forward(x)), 0.2);
  h = norm2_->forward(conv2_->forward(h));
  auto s = has_skip_ ? skip_->forward(x) : x;
  return torch::leaky_relu(h + s, 0.2);
}

BackboneImpl::BackboneImpl(const EncoderConfig& cfg) : cfg_(cfg) {
  stem_ = register_module("stem", torch::nn::Conv2d(torch::nn::Conv2dOptions(
                                      cfg.img_channels, cfg.stem_channels, 3).padding(1).bias(false)));
  stem_norm_ = register_module("stem_norm",
                               torch::nn::GroupNorm(norm_groups(cfg.stem_channels), cfg.stem_channels));
  stages_ = register_module("stages", torch::nn::ModuleList());
  int64_t in = cfg.stem_channels;
  for (size_t i = 0; i < cfg.stage_channels.size(); ++i) {
    const int64_t stride = (i == 0) ? 1 : 2;
    stages_->push_back(ResBlock(in, cfg.stage_channels[i], stride));
    in = cfg.stage_channels[i];
  }
  const auto& ch = cfg.stage_channels;
  td65_ = register_module("td65", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[4], ch[3], 1)));
  td54_ = register_module("td54", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[3], ch[2], 1)));
}

PyramidMaps BackboneImpl::forward(const torch::Tensor& x) {
  auto h = torch::leaky_relu(stem_norm_->forward(stem_->forward(x)), 0.2);
  std::vector<torch::Tensor> stage_out;
  for (auto& stage : *stages_) {
    h = stage->as<ResBlockImpl>()->forward(h);
    stage_out.push_back(h);
  }
  // Top-down refinement over the last three stages, widths preserved.
  auto c4 = stage_out[2], c5 = stage_out[3], c6 = stage_out[4];
  auto r6 = c6;
  auto r5 = c5 + td65_->forward(resize_nearest(r6, c5.size(2)));
  auto r4 = c4 + td54_->forward(resize_nearest(r5, c4.size(2)));
  return {r4, r5, r6};
}

EncoderImpl::EncoderImpl(const EncoderConfig& cfg, const GeneratorConfig& gen_cfg) : cfg_(cfg) {
  if (cfg.resolution != gen_cfg.resolution || cfg.img_channels != gen_cfg.img_channels)
    throw ConfigError("encoder and generator disagree on resolution/channels");
  bindings_ = compute_level_bindings(gen_cfg);
  backbone = register_module("backbone", Backbone(cfg));

  const auto& ch = cfg.stage_channels;
  const int64_t fuse = ch[4];
  w4_ = register_module("sam_w4", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[2], fuse, 1)));
  w5_ = register_module("sam_w5", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[3], fuse, 1)));
  w6_ = register_module("sam_w6", torch::nn::Conv2d(torch::nn::Conv2dOptions(ch[4], fuse, 1)));

  const int64_t r6_size = std::max<int64_t>(1, cfg.resolution / 16);
  const int64_t pooled = std::min(cfg.pool_target, r6_size);
  const int64_t flat_dim = fuse * pooled * pooled;
  heads_ = register_module("heads", torch::nn::ModuleList());
  for (const auto& b : bindings_) {
    auto head = torch::nn::Linear(flat_dim, 2 * b.width);
    {
      // Zero start: a fresh encoder emits zero residuals, so training
      // begins exactly at the mean styles.
      torch::NoGradGuard no_grad;
      head->weight.zero_();
      head->bias.zero_();
    }
    heads_->push_back(head);
  }
}

void EncoderImpl::check_input(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != cfg_.img_channels || x.size(2) != cfg_.resolution ||
      x.size(3) != cfg_.resolution)
    throw ShapeError("encoder input must be [N, " + std::to_string(cfg_.img_channels) + ", " +
                     std::to_string(cfg_.resolution) + ", " + std::to_string(cfg_.resolution) + "]");
}

PyramidMaps EncoderImpl::backbone_forward(const torch::Tensor& x) {
  check_input(x);
  return backbone->forward(x);
}

PyramidMaps EncoderImpl::sam_fuse(const PyramidMaps& p) {
  const int64_t target = p.r6.size(2);
  auto down = [&](const torch::Tensor& m) {
    return F::adaptive_avg_pool2d(m, F::AdaptiveAvgPool2dFuncOptions({target, target}));
  };
  auto base = w6_->forward(p.r6);
  PyramidMaps out;
  out.r4 = w4_->forward(down(p.r4)) + base;
  out.r5 = w5_->forward(down(p.r5)) + base;
  out.r6 = base;
  return out;
}

StyleStack EncoderImpl::to_levels(const PyramidMaps& fused) {
  const int64_t pooled = std::min(cfg_.pool_target, fused.r6.size(2));
  auto pool_flat = [&](const torch::Tensor& m) {
    return F::adaptive_avg_pool2d(m, F::AdaptiveAvgPool2dFuncOptions({pooled, pooled})).flatten(1);
  };
  const torch::Tensor inputs[3] = {pool_flat(fused.r4), pool_flat(fused.r5), pool_flat(fused.r6)};

  StyleStack residuals;
  residuals.layers.resize(bindings_.size());
  for (size_t i = 0; i < bindings_.size(); ++i) {
    const auto& b = bindings_[i];
    auto out = heads_[i]->as<torch::nn::Linear>()->forward(inputs[b.stage]);
    residuals.layers[b.layer - 1] = {out.narrow(1, 0, b.width), out.narrow(1, b.width, b.width)};
  }
  return residuals;
}

StyleStack EncoderImpl::encode(const torch::Tensor& x) {
  return to_levels(sam_fuse(backbone_forward(x)));
}

SpatialEncoderImpl::SpatialEncoderImpl(const EncoderConfig& cfg, const GeneratorConfig& gen_cfg)
    : cfg_(cfg) {
  if (cfg.resolution != gen_cfg.resolution || cfg.img_channels != gen_cfg.img_channels)
    throw ConfigError("encoder and generator disagree on resolution/channels");
  bindings_ = compute_level_bindings(gen_cfg);
  backbone = register_module("backbone", Backbone(cfg));
  heads_ = register_module("heads", torch::nn::ModuleList());
  const auto& ch = cfg.stage_channels;
  const int64_t stage_ch[3] = {ch[2], ch[3], ch[4]};
  for (const auto& b : bindings_) {
    auto head = torch::nn::Conv2d(torch::nn::Conv2dOptions(stage_ch[b.stage], 2 * b.width, 1));
    {
      torch::NoGradGuard no_grad;
      head->weight.zero_();
      head->bias.zero_();
    }
    heads_->push_back(head);
  }
}

StyleStack SpatialEncoderImpl::encode(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(2) != cfg_.resolution)
    throw ShapeError("spatial encoder input resolution mismatch");
  auto maps = backbone->forward(x);
  const torch::Tensor stage_maps[3] = {maps.r4, maps.r5, maps.r6};

  StyleStack residuals;
  residuals.layers.resize(bindings_.size());
  for (size_t i = 0; i < bindings_.size(); ++i) {
    const auto& b = bindings_[i];
    auto embedded = heads_[i]->as<torch::nn::Conv2d>()->forward(stage_maps[b.stage]);
    auto sized = embedded.size(2) <= b.layer_resolution
                     ? upsample_nearest(embedded, b.layer_resolution)
                     : F::adaptive_avg_pool2d(embedded, F::AdaptiveAvgPool2dFuncOptions(
                                                            {b.layer_resolution, b.layer_resolution}));
    residuals.layers[b.layer - 1] = {sized.narrow(1, 0, b.width), sized.narrow(1, b.width, b.width)};
  }
  return residuals;
}

StyleStack finalize_features(const StyleStack& mean_styles, const StyleStack& residuals) {
  if (mean_styles.layer_count() != residuals.layer_count())
    throw ShapeError("finalize: layer count mismatch (encoder bound to a different generator?)");
  StyleStack out;
  out.layers.reserve(residuals.layers.size());
  for (int64_t i = 0; i < residuals.layer_count(); ++i) {
    const auto& mean = mean_styles.layers[i];
    const auto& res = residuals.layers[i];
    if (mean.scale.size(1) != res.scale.size(1))
      throw ShapeError("finalize: style width mismatch at layer " + std::to_string(i + 1));
    if (res.spatial()) {
      out.layers.push_back({mean.scale.unsqueeze(-1).unsqueeze(-1) + res.scale,
                            mean.bias.unsqueeze(-1).unsqueeze(-1) + res.bias});
    } else {
      out.layers.push_back({mean.scale + res.scale, mean.bias + res.bias});
    }
  }
  return out;
}

}  // namespace ghfeat
