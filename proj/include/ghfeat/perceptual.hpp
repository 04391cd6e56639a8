#pragma once

#include <torch/torch.h>

#include "ghfeat/config.hpp"
#include "ghfeat/data.hpp"

namespace ghfeat {

struct PerceptualConfig {
  int64_t resolution = 32;
  int64_t img_channels = 1;
  int64_t classes = 10;

  static PerceptualConfig from(const Config& cfg);
};

// Small digit classifier. Trained once on the dataset and then frozen, it
// serves three roles: mid-level feature maps for the perceptual
// reconstruction term, penultimate embeddings for the Frechet feature
// distance, and a held-out sanity metric.
class DigitNetImpl : public torch::nn::Module {
 public:
  explicit DigitNetImpl(const PerceptualConfig& cfg);

  torch::Tensor forward(const torch::Tensor& x);        // class logits [N, 10]
  torch::Tensor features_mid(const torch::Tensor& x);   // mid conv map [N, 64, res/4, res/4]
  torch::Tensor features_embed(const torch::Tensor& x); // penultimate [N, 128]

  const PerceptualConfig& config() const { return cfg_; }

 private:
  torch::Tensor trunk(const torch::Tensor& x);

  PerceptualConfig cfg_;
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
  int64_t pool_out_ = 4;
};
TORCH_MODULE(DigitNet);

// Supervised training pass; returns test accuracy. The net is left in eval
// mode with gradients disabled so downstream use cannot update it.
double train_digit_net(DigitNet& net, const ImageBatch& train, const ImageBatch& test,
                       int64_t epochs, double lr, uint64_t seed);

void freeze(torch::nn::Module& m);

}  // namespace ghfeat
