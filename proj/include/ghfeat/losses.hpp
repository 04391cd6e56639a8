#pragma once

#include <torch/torch.h>

#include <functional>

#include "ghfeat/encoder.hpp"
#include "ghfeat/generator.hpp"
#include "ghfeat/styles.hpp"

namespace ghfeat {

struct LossWeights {
  double adversarial = 0.1;    // lambda1
  double perceptual = 5e-5;    // lambda2
  double regularizer = 5e-4;   // lambda3
  double grad_penalty = 5.0;   // lambda4
};

using ImageFn = std::function<torch::Tensor(const torch::Tensor&)>;
using EncodeFn = std::function<StyleStack(const torch::Tensor&)>;

// Sum over layers of the squared norm of each residual code (scale and bias
// concatenated), averaged over the batch. Spatial residuals count every
// position.
torch::Tensor residual_penalty(const StyleStack& residuals);

struct EncoderLossParts {
  torch::Tensor pixel;
  torch::Tensor adversarial;
  torch::Tensor perceptual;
  torch::Tensor regularizer;
  torch::Tensor total;
  torch::Tensor reconstruction;  // the rendered batch, reusable by callers
};

// Reconstruction objective against the frozen generator:
//   pixel - w.adversarial * adv + w.perceptual * perc + w.regularizer * reg
// with pixel/perceptual as elementwise mean squared distances and adv the
// mean critic score of the reconstruction. Throws TrainingFault on any
// non-finite component.
EncoderLossParts encoder_loss(const torch::Tensor& x, Generator& gen, const EncodeFn& encode,
                              const ImageFn& critic, const ImageFn& perceptual_features,
                              const LossWeights& w);

struct CriticLossParts {
  torch::Tensor score_fake;
  torch::Tensor score_real;
  torch::Tensor penalty;  // already weighted
  torch::Tensor total;
};

// Critic objective: E[D(fake)] - E[D(real)] + lambda4 * E[||grad_x D(x)||^2],
// the penalty taken on real samples only.
CriticLossParts discriminator_loss(const torch::Tensor& x_real, const torch::Tensor& x_fake,
                                   const ImageFn& critic, double penalty_weight);

// Standalone penalty term, exposed for the analytic linear-critic check.
torch::Tensor gradient_penalty(const torch::Tensor& x_real, const ImageFn& critic,
                               double penalty_weight);

}  // namespace ghfeat
