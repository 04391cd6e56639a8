#include "ghfeat/inverse.hpp"

namespace F = torch::nn::functional;

namespace ghfeat {

DegradationOp DegradationOp::grayscale() { return {DegradeKind::Grayscale, {}, 1}; }

DegradationOp DegradationOp::masked(const torch::Tensor& mask) {
  DegradationOp op;
  op.kind = DegradeKind::Mask;
  op.mask = mask;
  return op;
}

DegradationOp DegradationOp::downsample(int64_t factor) {
  DegradationOp op;
  op.kind = DegradeKind::Downsample;
  op.factor = factor;
  return op;
}

torch::Tensor degrade(const torch::Tensor& x, const DegradationOp& op) {
  if (x.dim() != 4) throw ShapeError("degrade expects [N, C, H, W]");
  switch (op.kind) {
    case DegradeKind::Grayscale: {
      torch::Tensor luma;
      if (x.size(1) == 3) {
        auto w = torch::tensor({0.299f, 0.587f, 0.114f}).reshape({1, 3, 1, 1});
        luma = (x * w).sum(1, /*keepdim=*/true);
      } else {
        luma = x;  // already single-channel
      }
      return luma.expand_as(x).contiguous();
    }
    case DegradeKind::Mask: {
      auto m = op.mask;
      if (!m.defined()) throw ConfigError("degrade: mask operator without a mask");
      if (m.dim() == 2) m = m.reshape({1, 1, m.size(0), m.size(1)});
      auto mb = m.to(torch::kBool);
      // Binary contract: 1 = observed.
      if (!m.to(torch::kFloat32).eq(mb.to(torch::kFloat32)).all().item<bool>())
        throw ConfigError("degrade: mask must be binary");
      if (m.size(-1) != x.size(-1) || m.size(-2) != x.size(-2))
        throw ShapeError("degrade: mask size does not match image");
      return x * mb.to(x.scalar_type());
    }
    case DegradeKind::Downsample: {
      const int64_t k = op.factor;
      const int64_t res = x.size(2);
      if (k < 1 || (k & (k - 1)) != 0 || res % k != 0)
        throw ConfigError("degrade: factor must be a positive power of two dividing the resolution");
      if (k == 1) return x;
      return F::avg_pool2d(x, F::AvgPool2dFuncOptions(k));
    }
  }
  throw ConfigError("degrade: unknown operator");
}

SolveResult solve(Generator& gen, const InverseProblem& problem) {
  // The generator is a fixed prior here.
  std::vector<torch::Tensor> frozen;
  for (auto& p : gen->parameters())
    if (p.requires_grad()) {
      p.set_requires_grad(false);
      frozen.push_back(p);
    }

  StyleStack current;
  std::vector<torch::Tensor> leaves;
  for (const auto& layer : problem.init.layers) {
    StyleLayer l{layer.scale.detach().clone().requires_grad_(true),
                 layer.bias.detach().clone().requires_grad_(true)};
    leaves.push_back(l.scale);
    leaves.push_back(l.bias);
    current.layers.push_back(l);
  }
  StyleStack anchor = problem.anchor_weight > 0.0 ? gen->mean_styles().detach() : StyleStack{};

  SolveResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (int64_t step = 0; step < problem.steps; ++step) {
    auto rendered = gen->synthesize(current);
    auto data_loss = (degrade(rendered, problem.op) - problem.reference).pow(2).mean();
    const double loss_value = data_loss.item<double>();
    if (!std::isfinite(loss_value))
      throw SolverFault("non-finite inverse loss at step " + std::to_string(step));
    result.trajectory.push_back(loss_value);
    if (loss_value < result.best_loss) {
      result.best_loss = loss_value;
      result.best = current.detach().clone();
    }

    auto objective = data_loss;
    if (problem.anchor_weight > 0.0) {
      torch::Tensor pull;
      for (int64_t i = 0; i < current.layer_count(); ++i) {
        auto d = (current.layers[i].scale - anchor.layers[i].scale).pow(2).sum() +
                 (current.layers[i].bias - anchor.layers[i].bias).pow(2).sum();
        pull = pull.defined() ? pull + d : d;
      }
      objective = objective + problem.anchor_weight * pull;
    }

    auto grads = torch::autograd::grad({objective}, leaves);
    {
      torch::NoGradGuard no_grad;
      for (size_t i = 0; i < leaves.size(); ++i) leaves[i] -= problem.step_size * grads[i];
    }
  }

  for (auto& p : frozen) p.set_requires_grad(true);
  return result;
}

namespace {

torch::Tensor run_task(Generator& gen, Encoder& enc, const torch::Tensor& reference,
                       const DegradationOp& op, const torch::Tensor& encode_input,
                       const InverseOptions& opts) {
  StyleStack init;
  {
    torch::NoGradGuard no_grad;
    init = finalize_features(gen->mean_styles(), enc->encode(encode_input)).detach();
  }
  InverseProblem problem;
  problem.reference = reference;
  problem.op = op;
  problem.init = init;
  problem.steps = opts.steps;
  problem.step_size = opts.step_size;
  problem.seed = opts.seed;
  problem.anchor_weight = opts.anchor_weight;
  auto result = solve(gen, problem);
  torch::NoGradGuard no_grad;
  return gen->synthesize(result.best);
}

}  // namespace

torch::Tensor colorize(Generator& gen, Encoder& enc, const torch::Tensor& gray_reference,
                       const InverseOptions& opts) {
  return run_task(gen, enc, gray_reference, DegradationOp::grayscale(), gray_reference, opts);
}

torch::Tensor inpaint(Generator& gen, Encoder& enc, const torch::Tensor& corrupted_reference,
                      const torch::Tensor& mask, const InverseOptions& opts) {
  return run_task(gen, enc, corrupted_reference, DegradationOp::masked(mask), corrupted_reference,
                  opts);
}

torch::Tensor superres(Generator& gen, Encoder& enc, const torch::Tensor& low_res_reference,
                       int64_t factor, const InverseOptions& opts) {
  const int64_t res = gen->config().resolution;
  if (low_res_reference.size(2) * factor != res)
    throw ShapeError("superres: reference size times factor must equal the model resolution");
  auto upcast = upsample_nearest(low_res_reference, res);
  return run_task(gen, enc, low_res_reference, DegradationOp::downsample(factor), upcast, opts);
}

}  // namespace ghfeat
