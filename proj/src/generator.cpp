#include "ghfeat/generator.hpp"

#include <cmath>

namespace F = torch::nn::functional;

namespace ghfeat {

void GeneratorConfig::validate() const {
  const int64_t expected_blocks = static_cast<int64_t>(std::llround(std::log2(resolution))) - 1;
  if (num_blocks() != expected_blocks)
    throw ConfigError("generator.channels must list one width per block (" +
                      std::to_string(expected_blocks) + " for resolution " +
                      std::to_string(resolution) + ")");
  if (img_channels != 1 && img_channels != 3) throw ConfigError("generator.img_channels must be 1 or 3");
}

GeneratorConfig GeneratorConfig::from(const Config& cfg) {
  GeneratorConfig g;
  g.resolution = cfg.get_int("generator.resolution", g.resolution);
  g.img_channels = cfg.get_int("generator.img_channels", g.img_channels);
  g.z_dim = cfg.get_int("generator.z_dim", g.z_dim);
  g.w_dim = cfg.get_int("generator.w_dim", g.w_dim);
  g.mapping_layers = cfg.get_int("generator.mapping_layers", g.mapping_layers);
  g.mapping_width = cfg.get_int("generator.mapping_width", g.mapping_width);
  g.channels = cfg.get_int_list("generator.channels", g.channels);
  g.adain_epsilon = cfg.get_real("generator.adain_epsilon", g.adain_epsilon);
  g.validate();
  return g;
}

torch::Tensor adain(const torch::Tensor& x, const StyleLayer& style, double epsilon) {
  if (x.dim() != 4) throw ShapeError("adain expects [N, C, H, W]");
  const int64_t c = x.size(1);
  if (style.scale.size(1) != c || style.bias.size(1) != c)
    throw ShapeError("adain channel mismatch: map has " + std::to_string(c) + ", style has " +
                     std::to_string(style.scale.size(1)));
  auto mu = x.mean({2, 3}, /*keepdim=*/true);
  auto sigma = (x - mu).pow(2).mean({2, 3}, /*keepdim=*/true).sqrt();
  auto normalized = (x - mu) / (sigma + epsilon);
  auto s = style.scale.dim() == 2 ? style.scale.unsqueeze(-1).unsqueeze(-1) : style.scale;
  auto b = style.bias.dim() == 2 ? style.bias.unsqueeze(-1).unsqueeze(-1) : style.bias;
  if (s.dim() == 4 && s.size(2) > 1 && (s.size(2) != x.size(2) || s.size(3) != x.size(3)))
    throw ShapeError("adain spatial style size mismatch");
  return s * normalized + b;
}

MappingNetImpl::MappingNetImpl(const GeneratorConfig& cfg) : z_dim_(cfg.z_dim) {
  layers_ = register_module("layers", torch::nn::ModuleList());
  int64_t in = cfg.z_dim;
  for (int64_t i = 0; i < cfg.mapping_layers; ++i) {
    const int64_t out = (i + 1 == cfg.mapping_layers) ? cfg.w_dim : cfg.mapping_width;
    layers_->push_back(torch::nn::Linear(in, out));
    in = out;
  }
}

torch::Tensor MappingNetImpl::forward(const torch::Tensor& z) {
  if (z.dim() != 2 || z.size(1) != z_dim_)
    throw ShapeError("map_latent: expected [N, " + std::to_string(z_dim_) + "]");
  // Normalize the latent before the MLP; keeps early training well scaled.
  auto x = z * torch::rsqrt(z.pow(2).mean(1, /*keepdim=*/true) + 1e-8);
  for (auto& layer : *layers_) {
    x = layer->as<torch::nn::Linear>()->forward(x);
    x = torch::leaky_relu(x, 0.2);
  }
  return x;
}

StyleHeadsImpl::StyleHeadsImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  heads_ = register_module("heads", torch::nn::ModuleList());
  for (int64_t layer = 1; layer <= cfg.layer_count(); ++layer) {
    const int64_t c = cfg.layer_channels(layer);
    auto head = torch::nn::Linear(cfg.w_dim, 2 * c);
    {
      torch::NoGradGuard no_grad;
      head->bias.index({torch::indexing::Slice(0, c)}).fill_(1.0);
      head->bias.index({torch::indexing::Slice(c, 2 * c)}).zero_();
    }
    heads_->push_back(head);
  }
}

StyleStack StyleHeadsImpl::forward(const torch::Tensor& w) {
  StyleStack stack;
  for (int64_t layer = 1; layer <= cfg_.layer_count(); ++layer) {
    const int64_t c = cfg_.layer_channels(layer);
    auto out = heads_[static_cast<size_t>(layer - 1)]->as<torch::nn::Linear>()->forward(w);
    stack.layers.push_back({out.narrow(1, 0, c), out.narrow(1, c, c)});
  }
  return stack;
}

namespace {

torch::nn::Conv2d conv3x3(int64_t in, int64_t out) {
  // Bias would be removed by the following normalization, so omit it.
  return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).padding(1).bias(false));
}

void apply_edits(torch::Tensor& x, int64_t layer, const std::vector<FeatureEdit>* edits) {
  if (!edits) return;
  for (const auto& e : *edits) {
    if (e.layer != layer || e.region.empty()) continue;
    const auto& r = e.region;
    if (r.x < 0 || r.y < 0 || r.x + r.w > x.size(3) || r.y + r.h > x.size(2))
      throw BoundsError("feature edit region out of bounds at layer " + std::to_string(layer));
    if (e.replacement.size(1) != x.size(1))
      throw ShapeError("feature edit channel mismatch at layer " + std::to_string(layer));
    x = x.clone();
    x.index_put_({torch::indexing::Slice(), torch::indexing::Slice(),
                  torch::indexing::Slice(r.y, r.y + r.h), torch::indexing::Slice(r.x, r.x + r.w)},
                 e.replacement.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                      torch::indexing::Slice(r.y, r.y + r.h),
                                      torch::indexing::Slice(r.x, r.x + r.w)}));
  }
}

}  // namespace

SynthesisImpl::SynthesisImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const_input_ = register_parameter("const_input", torch::randn({cfg.channels[0], 4, 4}));
  in_convs_ = register_module("in_convs", torch::nn::ModuleList());
  mid_convs_ = register_module("mid_convs", torch::nn::ModuleList());
  for (int64_t b = 0; b < cfg.num_blocks(); ++b) {
    if (b > 0) in_convs_->push_back(conv3x3(cfg.channels[b - 1], cfg.channels[b]));
    mid_convs_->push_back(conv3x3(cfg.channels[b], cfg.channels[b]));
  }
  to_img_ = register_module(
      "to_img", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.channels.back(), cfg.img_channels, 1)));
}

torch::Tensor SynthesisImpl::forward(const StyleStack& styles, const std::vector<FeatureEdit>* edits,
                                     std::vector<torch::Tensor>* capture) {
  if (styles.layer_count() != cfg_.layer_count())
    throw ShapeError("synthesize: expected " + std::to_string(cfg_.layer_count()) + " style layers, got " +
                     std::to_string(styles.layer_count()));
  for (int64_t layer = 1; layer <= cfg_.layer_count(); ++layer) {
    if (styles.layers[layer - 1].scale.size(1) != cfg_.layer_channels(layer))
      throw ShapeError("synthesize: style width mismatch at layer " + std::to_string(layer));
  }

  const int64_t n = styles.batch();
  auto x = const_input_.unsqueeze(0).expand({n, -1, -1, -1});
  int64_t layer = 1;
  auto modulate = [&](torch::Tensor h) {
    h = adain(h, styles.layers[layer - 1], cfg_.adain_epsilon);
    apply_edits(h, layer, edits);
    if (capture) capture->push_back(h);
    ++layer;
    return h;
  };

  for (int64_t b = 0; b < cfg_.num_blocks(); ++b) {
    if (b > 0) {
      x = F::interpolate(x, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2, 2})
                                .mode(torch::kNearest));
      x = torch::leaky_relu(in_convs_[static_cast<size_t>(b - 1)]->as<torch::nn::Conv2d>()->forward(x),
                            0.2);
    }
    x = modulate(x);
    x = torch::leaky_relu(mid_convs_[static_cast<size_t>(b)]->as<torch::nn::Conv2d>()->forward(x), 0.2);
    x = modulate(x);
  }
  return torch::tanh(to_img_->forward(x));
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  mapping = register_module("mapping", MappingNet(cfg_));
  heads = register_module("heads", StyleHeads(cfg_));
  synthesis = register_module("synthesis", Synthesis(cfg_));
  mean_latent_ = register_buffer("mean_latent", torch::zeros({1, cfg_.w_dim}));
}

torch::Tensor GeneratorImpl::map_latent(const torch::Tensor& z) { return mapping->forward(z); }

StyleStack GeneratorImpl::affine_styles(const torch::Tensor& w) { return heads->forward(w); }

torch::Tensor GeneratorImpl::synthesize(const StyleStack& styles, const std::vector<FeatureEdit>* edits,
                                        std::vector<torch::Tensor>* capture) {
  return synthesis->forward(styles, edits, capture);
}

torch::Tensor GeneratorImpl::generate(const torch::Tensor& z) {
  return synthesize(affine_styles(map_latent(z)));
}

torch::Tensor GeneratorImpl::estimate_mean_latent(int64_t n, uint64_t seed) {
  if (n < 1) throw BoundsError("estimate_mean_latent: n must be >= 1");
  torch::NoGradGuard no_grad;
  auto z = sample_latent(n, cfg_.z_dim, seed);
  auto w = map_latent(z).mean(0, /*keepdim=*/true);
  mean_latent_.copy_(w);
  return w.clone();
}

torch::Tensor GeneratorImpl::mean_latent() const { return mean_latent_.clone(); }

StyleStack GeneratorImpl::mean_styles() { return affine_styles(mean_latent_); }

DiscriminatorConfig DiscriminatorConfig::from(const Config& cfg) {
  DiscriminatorConfig d;
  d.resolution = cfg.get_int("generator.resolution", d.resolution);
  d.img_channels = cfg.get_int("generator.img_channels", d.img_channels);
  d.base_channels = cfg.get_int("disc.base_channels", d.base_channels);
  d.max_channels = cfg.get_int("disc.max_channels", d.max_channels);
  return d;
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  convs_ = register_module("convs", torch::nn::ModuleList());
  int64_t ch = cfg.base_channels;
  convs_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.img_channels, ch, 3).padding(1)));
  int64_t res = cfg.resolution;
  while (res > 4) {
    const int64_t next = std::min(ch * 2, cfg.max_channels);
    convs_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, next, 3).stride(2).padding(1)));
    ch = next;
    res /= 2;
  }
  convs_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(ch, ch, 3).padding(1)));
  head_ = register_module("head", torch::nn::Linear(ch * res * res, 1));
}

torch::Tensor DiscriminatorImpl::forward(const torch::Tensor& x) {
  if (x.size(2) != cfg_.resolution || x.size(1) != cfg_.img_channels)
    throw ShapeError("discriminate: input resolution/channels do not match config");
  auto h = x;
  for (auto& conv : *convs_) h = torch::leaky_relu(conv->as<torch::nn::Conv2d>()->forward(h), 0.2);
  return head_->forward(h.flatten(1)).squeeze(1);
}

torch::Tensor sample_latent(int64_t n, int64_t z_dim, uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  return torch::randn({n, z_dim}, gen);
}

}  // namespace ghfeat
