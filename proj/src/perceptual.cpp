#include "ghfeat/perceptual.hpp"

namespace F = torch::nn::functional;

namespace ghfeat {

PerceptualConfig PerceptualConfig::from(const Config& cfg) {
  PerceptualConfig p;
  p.resolution = cfg.get_int("generator.resolution", p.resolution);
  p.img_channels = cfg.get_int("generator.img_channels", p.img_channels);
  p.classes = cfg.get_int("perceptual.classes", p.classes);
  return p;
}

DigitNetImpl::DigitNetImpl(const PerceptualConfig& cfg) : cfg_(cfg) {
  conv1_ = register_module(
      "conv1", torch::nn::Conv2d(torch::nn::Conv2dOptions(cfg.img_channels, 32, 3).padding(1)));
  conv2_ = register_module("conv2", torch::nn::Conv2d(torch::nn::Conv2dOptions(32, 64, 3).padding(1)));
  conv3_ = register_module("conv3", torch::nn::Conv2d(torch::nn::Conv2dOptions(64, 64, 3).padding(1)));
  const int64_t mid_size = std::max<int64_t>(1, cfg.resolution / 4);
  pool_out_ = std::min<int64_t>(4, mid_size);
  fc1_ = register_module("fc1", torch::nn::Linear(64 * pool_out_ * pool_out_, 128));
  fc2_ = register_module("fc2", torch::nn::Linear(128, cfg.classes));
}

torch::Tensor DigitNetImpl::trunk(const torch::Tensor& x) {
  auto h = torch::relu(conv1_->forward(x));
  h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
  h = torch::relu(conv2_->forward(h));
  h = F::avg_pool2d(h, F::AvgPool2dFuncOptions(2));
  return torch::relu(conv3_->forward(h));
}

torch::Tensor DigitNetImpl::features_mid(const torch::Tensor& x) { return trunk(x); }

torch::Tensor DigitNetImpl::features_embed(const torch::Tensor& x) {
  auto h = F::adaptive_avg_pool2d(trunk(x), F::AdaptiveAvgPool2dFuncOptions({pool_out_, pool_out_}));
  return torch::relu(fc1_->forward(h.flatten(1)));
}

torch::Tensor DigitNetImpl::forward(const torch::Tensor& x) {
  return fc2_->forward(features_embed(x));
}

double train_digit_net(DigitNet& net, const ImageBatch& train, const ImageBatch& test,
                       int64_t epochs, double lr, uint64_t seed) {
  if (!train.labels || !test.labels) throw ConfigError("digit net training needs labels");
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(lr));
  const int64_t n = train.size();
  const int64_t batch = 128;
  auto gen = at::detail::createCPUGenerator(derive_seed(seed, "digit-net"));
  net->train();
  for (int64_t epoch = 0; epoch < epochs; ++epoch) {
    auto perm = torch::randperm(n, gen, torch::kInt64);
    for (int64_t off = 0; off + batch <= n; off += batch) {
      auto idx = perm.slice(0, off, off + batch);
      auto x = train.pixels.index_select(0, idx);
      auto y = train.labels->index_select(0, idx);
      opt.zero_grad();
      auto loss = F::cross_entropy(net->forward(x), y);
      loss.backward();
      opt.step();
    }
  }
  net->eval();
  freeze(*net);

  torch::NoGradGuard no_grad;
  int64_t correct = 0;
  for (int64_t off = 0; off < test.size(); off += 256) {
    auto x = test.pixels.slice(0, off, std::min(off + 256, test.size()));
    auto y = test.labels->slice(0, off, std::min(off + 256, test.size()));
    correct += net->forward(x).argmax(1).eq(y).sum().item<int64_t>();
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

void freeze(torch::nn::Module& m) {
  for (auto& p : m.parameters()) p.set_requires_grad(false);
}

}  // namespace ghfeat
