#pragma once

#include <torch/torch.h>

#include <vector>

#include "ghfeat/encoder.hpp"
#include "ghfeat/generator.hpp"

namespace ghfeat {

enum class DegradeKind { Grayscale, Mask, Downsample };

struct DegradationOp {
  DegradeKind kind = DegradeKind::Grayscale;
  torch::Tensor mask;  // binary, 1 = observed; [H, W] or [1, 1, H, W]
  int64_t factor = 1;  // downsampling factor, power of two dividing the resolution

  static DegradationOp grayscale();
  static DegradationOp masked(const torch::Tensor& mask);
  static DegradationOp downsample(int64_t factor);
};

// Applies the degradation: channel-weighted grayscale (Rec. 601 luma,
// replicated), observed-pixel masking, or k x k area-average downsampling.
torch::Tensor degrade(const torch::Tensor& x, const DegradationOp& op);

struct InverseProblem {
  torch::Tensor reference;  // the degraded observation
  DegradationOp op;
  StyleStack init;          // starting style codes (typically encoder output)
  int64_t steps = 500;
  double step_size = 0.1;
  uint64_t seed = 7;
  // Optional pull toward the mean styles during descent; off by default.
  double anchor_weight = 0.0;
};

struct SolveResult {
  StyleStack best;                 // best-so-far style codes
  std::vector<double> trajectory;  // data loss at every step, step 0 first
  double best_loss = 0.0;
};

// Plain gradient descent on || op(render(s)) - reference ||^2 over the full
// style stack, with best-so-far tracking. The generator is never mutated.
SolveResult solve(Generator& gen, const InverseProblem& problem);

struct InverseOptions {
  int64_t steps = 500;
  double step_size = 0.1;
  uint64_t seed = 7;
  double anchor_weight = 0.0;
};

// Task wrappers: encoder-initialized descent for colorization, inpainting,
// and super-resolution. Each returns the rendered solution.
torch::Tensor colorize(Generator& gen, Encoder& enc, const torch::Tensor& gray_reference,
                       const InverseOptions& opts);
torch::Tensor inpaint(Generator& gen, Encoder& enc, const torch::Tensor& corrupted_reference,
                      const torch::Tensor& mask, const InverseOptions& opts);
torch::Tensor superres(Generator& gen, Encoder& enc, const torch::Tensor& low_res_reference,
                       int64_t factor, const InverseOptions& opts);

}  // namespace ghfeat
