#pragma once

#include <torch/torch.h>

#include "ghfeat/generator.hpp"
#include "ghfeat/losses.hpp"
#include "ghfeat/perceptual.hpp"

namespace ghfeat {

// Mean squared difference over all elements.
double mse(const torch::Tensor& a, const torch::Tensor& b);

// Structural similarity, uniform 7x7 window over valid positions, sample
// covariance normalization, stabilizers C1=(0.01 R)^2, C2=(0.03 R)^2 for
// data range R (2 for [-1, 1] images), averaged over windows/channels/batch.
double ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range = 2.0,
            int64_t window = 7);

// Frechet distance between embedding statistics of two image sets, using
// the frozen digit classifier's penultimate features. Matrix square root by
// eigendecomposition with negative eigenvalues clipped at zero; near-
// singular covariances get a small diagonal jitter.
double desk_fid(const torch::Tensor& set_a, const torch::Tensor& set_b, DigitNet& embedder);

// Mean over layers of the cosine similarity between two stacks'
// per-layer (scale, bias) concatenations, averaged over the batch.
double mean_layer_cosine(const StyleStack& a, const StyleStack& b);

// Samples n images from native style codes, encodes them, and returns the
// mean cosine similarity between the finalized features and the native
// codes. The latent batch is drawn with derive_seed(seed, "cos-sim").
double cos_sim_diag(Generator& gen, const EncodeFn& encode, int64_t n, uint64_t seed);

// Intersection-over-union of two boolean masks.
double mask_iou(const torch::Tensor& pred, const torch::Tensor& truth);

}  // namespace ghfeat
