#include "ghfeat/losses.hpp"

namespace ghfeat {

namespace {

void check_finite(const torch::Tensor& t, const char* name) {
  if (!torch::isfinite(t).all().item<bool>())
    throw TrainingFault(std::string("non-finite loss component: ") + name);
}

}  // namespace

torch::Tensor residual_penalty(const StyleStack& residuals) {
  torch::Tensor per_sample;
  for (const auto& layer : residuals.layers) {
    auto sq = layer.scale.flatten(1).pow(2).sum(1) + layer.bias.flatten(1).pow(2).sum(1);
    per_sample = per_sample.defined() ? per_sample + sq : sq;
  }
  if (!per_sample.defined()) throw ShapeError("residual_penalty: empty style stack");
  return per_sample.mean();
}

EncoderLossParts encoder_loss(const torch::Tensor& x, Generator& gen, const EncodeFn& encode,
                              const ImageFn& critic, const ImageFn& perceptual_features,
                              const LossWeights& w) {
  EncoderLossParts parts;
  auto residuals = encode(x);
  auto features = finalize_features(gen->mean_styles(), residuals);
  parts.reconstruction = gen->synthesize(features);

  parts.pixel = (x - parts.reconstruction).pow(2).mean();
  parts.adversarial = critic ? critic(parts.reconstruction).mean()
                             : torch::zeros({}, x.options());
  parts.perceptual = perceptual_features
                         ? (perceptual_features(x) - perceptual_features(parts.reconstruction))
                               .pow(2).mean()
                         : torch::zeros({}, x.options());
  parts.regularizer = residual_penalty(residuals);

  check_finite(parts.pixel, "pixel");
  check_finite(parts.adversarial, "adversarial");
  check_finite(parts.perceptual, "perceptual");
  check_finite(parts.regularizer, "regularizer");

  parts.total = parts.pixel - w.adversarial * parts.adversarial + w.perceptual * parts.perceptual +
                w.regularizer * parts.regularizer;
  check_finite(parts.total, "total");
  return parts;
}

torch::Tensor gradient_penalty(const torch::Tensor& x_real, const ImageFn& critic,
                               double penalty_weight) {
  auto x = x_real.detach().clone().requires_grad_(true);
  auto scores = critic(x);
  auto grads = torch::autograd::grad({scores.sum()}, {x}, /*grad_outputs=*/{},
                                     /*retain_graph=*/true, /*create_graph=*/true)[0];
  auto norms = grads.pow(2).flatten(1).sum(1);
  return penalty_weight * norms.mean();
}

CriticLossParts discriminator_loss(const torch::Tensor& x_real, const torch::Tensor& x_fake,
                                   const ImageFn& critic, double penalty_weight) {
  CriticLossParts parts;
  parts.score_fake = critic(x_fake.detach()).mean();
  parts.score_real = critic(x_real).mean();
  parts.penalty = penalty_weight != 0.0 ? gradient_penalty(x_real, critic, penalty_weight)
                                        : torch::zeros({}, x_real.options());
  parts.total = parts.score_fake - parts.score_real + parts.penalty;
  check_finite(parts.total, "discriminator total");
  return parts;
}

}  // namespace ghfeat
