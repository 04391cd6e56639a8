#include "ghfeat/metrics.hpp"

#include "ghfeat/encoder.hpp"

namespace F = torch::nn::functional;

namespace ghfeat {

double mse(const torch::Tensor& a, const torch::Tensor& b) {
  if (!a.sizes().equals(b.sizes())) throw ShapeError("mse: shape mismatch");
  return (a - b).pow(2).mean().item<double>();
}

double ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range, int64_t window) {
  if (!a.sizes().equals(b.sizes())) throw ShapeError("ssim: shape mismatch");
  if (a.dim() != 4) throw ShapeError("ssim expects [N, C, H, W]");
  if (a.size(2) < window || a.size(3) < window)
    throw ShapeError("ssim: image smaller than the window");

  torch::NoGradGuard no_grad;
  auto x = a.to(torch::kFloat64);
  auto y = b.to(torch::kFloat64);
  auto win = [&](const torch::Tensor& t) {
    return F::avg_pool2d(t, F::AvgPool2dFuncOptions(window).stride(1));
  };
  const double n = static_cast<double>(window * window);
  const double cov_norm = n / (n - 1.0);  // sample covariance

  auto ux = win(x), uy = win(y);
  auto uxx = win(x * x), uyy = win(y * y), uxy = win(x * y);
  auto vx = cov_norm * (uxx - ux * ux);
  auto vy = cov_norm * (uyy - uy * uy);
  auto vxy = cov_norm * (uxy - ux * uy);

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  auto num = (2 * ux * uy + c1) * (2 * vxy + c2);
  auto den = (ux * ux + uy * uy + c1) * (vx + vy + c2);
  return (num / den).mean().item<double>();
}

namespace {

// tr(sqrt(S1 S2)) via the symmetric product sqrt(sqrt(S1) S2 sqrt(S1)).
double trace_sqrt_product(const torch::Tensor& s1, const torch::Tensor& s2) {
  auto [e1, v1] = torch::linalg_eigh(s1, "L");
  auto root1 = v1.matmul(torch::diag(e1.clamp_min(0).sqrt())).matmul(v1.transpose(0, 1));
  auto m = root1.matmul(s2).matmul(root1);
  auto evals = std::get<0>(torch::linalg_eigh(m, "L"));
  return evals.clamp_min(0).sqrt().sum().item<double>();
}

}  // namespace

double desk_fid(const torch::Tensor& set_a, const torch::Tensor& set_b, DigitNet& embedder) {
  if (set_a.size(0) < 2 || set_b.size(0) < 2) throw ShapeError("desk_fid needs at least 2 images per set");
  torch::NoGradGuard no_grad;
  auto embed = [&](const torch::Tensor& imgs) {
    std::vector<torch::Tensor> chunks;
    for (int64_t off = 0; off < imgs.size(0); off += 256)
      chunks.push_back(embedder->features_embed(imgs.slice(0, off, std::min(off + 256, imgs.size(0)))));
    return torch::cat(chunks).to(torch::kFloat64);
  };
  auto fa = embed(set_a);
  auto fb = embed(set_b);
  auto mu_a = fa.mean(0);
  auto mu_b = fb.mean(0);
  auto ca = fa - mu_a;
  auto cb = fb - mu_b;
  auto cov_a = ca.transpose(0, 1).matmul(ca) / static_cast<double>(fa.size(0) - 1);
  auto cov_b = cb.transpose(0, 1).matmul(cb) / static_cast<double>(fb.size(0) - 1);
  const double jitter = 1e-8;
  auto eye = torch::eye(cov_a.size(0), torch::kFloat64);
  cov_a = cov_a + jitter * eye;
  cov_b = cov_b + jitter * eye;

  const double mean_term = (mu_a - mu_b).pow(2).sum().item<double>();
  const double tr_a = cov_a.diagonal().sum().item<double>();
  const double tr_b = cov_b.diagonal().sum().item<double>();
  return mean_term + tr_a + tr_b - 2.0 * trace_sqrt_product(cov_a, cov_b);
}

double mean_layer_cosine(const StyleStack& a, const StyleStack& b) {
  if (a.layer_count() != b.layer_count()) throw ShapeError("mean_layer_cosine: layer count mismatch");
  torch::NoGradGuard no_grad;
  torch::Tensor acc;
  for (int64_t i = 0; i < a.layer_count(); ++i) {
    auto fa = a.layer_flat(i);
    auto fb = b.layer_flat(i);
    auto cos = F::cosine_similarity(fa, fb, F::CosineSimilarityFuncOptions().dim(1));
    acc = acc.defined() ? acc + cos : cos;
  }
  return (acc / static_cast<double>(a.layer_count())).mean().item<double>();
}

double cos_sim_diag(Generator& gen, const EncodeFn& encode, int64_t n, uint64_t seed) {
  torch::NoGradGuard no_grad;
  auto z = sample_latent(n, gen->config().z_dim, derive_seed(seed, "cos-sim"));
  auto native = gen->affine_styles(gen->map_latent(z));
  auto images = gen->synthesize(native);
  auto features = finalize_features(gen->mean_styles(), encode(images));
  return mean_layer_cosine(features, native);
}

double mask_iou(const torch::Tensor& pred, const torch::Tensor& truth) {
  if (!pred.sizes().equals(truth.sizes())) throw ShapeError("mask_iou: shape mismatch");
  auto p = pred.to(torch::kBool);
  auto t = truth.to(torch::kBool);
  const double inter = p.logical_and(t).sum().item<double>();
  const double uni = p.logical_or(t).sum().item<double>();
  return uni == 0.0 ? 1.0 : inter / uni;
}

}  // namespace ghfeat
