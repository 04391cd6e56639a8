#include "ghfeat/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ghfeat/metrics.hpp"

namespace fs = std::filesystem;

namespace ghfeat {

double TrainConfig::lr_at(int64_t step) const {
  const int64_t k = decay_interval > 0 ? step / decay_interval : 0;
  return lr * std::pow(lr_decay, static_cast<double>(k));
}

TrainConfig TrainConfig::from(const Config& cfg) {
  TrainConfig t;
  t.weights.adversarial = cfg.get_real("train.lambda1", t.weights.adversarial);
  t.weights.perceptual = cfg.get_real("train.lambda2", t.weights.perceptual);
  t.weights.regularizer = cfg.get_real("train.lambda3", t.weights.regularizer);
  t.weights.grad_penalty = cfg.get_real("train.lambda4", t.weights.grad_penalty);
  t.beta1 = cfg.get_real("train.beta1", t.beta1);
  t.beta2 = cfg.get_real("train.beta2", t.beta2);
  t.lr = cfg.get_real("train.lr", t.lr);
  t.lr_decay = cfg.get_real("train.lr_decay", t.lr_decay);
  t.decay_interval = cfg.get_int("train.decay_interval", t.decay_interval);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.steps = cfg.get_int("train.steps", t.steps);
  t.snapshot_interval = cfg.get_int("train.snapshot_interval", t.snapshot_interval);
  t.log_interval = cfg.get_int("train.log_interval", t.log_interval);
  t.cos_sim_samples = cfg.get_int("train.cos_sim_samples", t.cos_sim_samples);
  t.seed = static_cast<uint64_t>(cfg.get_int("train.seed", static_cast<int64_t>(t.seed)));
  return t;
}

GanTrainConfig GanTrainConfig::from(const Config& cfg) {
  GanTrainConfig g;
  g.lr = cfg.get_real("gan.lr", g.lr);
  g.beta1 = cfg.get_real("gan.beta1", g.beta1);
  g.beta2 = cfg.get_real("gan.beta2", g.beta2);
  g.grad_penalty = cfg.get_real("gan.grad_penalty", g.grad_penalty);
  g.batch_size = cfg.get_int("gan.batch_size", g.batch_size);
  g.steps = cfg.get_int("gan.steps", g.steps);
  g.snapshot_interval = cfg.get_int("gan.snapshot_interval", g.snapshot_interval);
  g.log_interval = cfg.get_int("gan.log_interval", g.log_interval);
  g.mean_latent_samples = cfg.get_int("gan.mean_latent_samples", g.mean_latent_samples);
  g.seed = static_cast<uint64_t>(cfg.get_int("gan.seed", static_cast<int64_t>(g.seed)));
  return g;
}

namespace {

// Deterministic epoch-shuffled batch stream.
class BatchStream {
 public:
  BatchStream(const ImageBatch& data, int64_t batch_size, uint64_t seed)
      : data_(data), batch_(batch_size), gen_(at::detail::createCPUGenerator(seed)) {
    reshuffle();
  }

  torch::Tensor next() {
    if (cursor_ + batch_ > perm_.size(0)) reshuffle();
    auto idx = perm_.slice(0, cursor_, cursor_ + batch_);
    cursor_ += batch_;
    return data_.pixels.index_select(0, idx);
  }

 private:
  void reshuffle() {
    perm_ = torch::randperm(data_.size(), gen_, torch::kInt64);
    cursor_ = 0;
  }

  const ImageBatch& data_;
  int64_t batch_;
  torch::Generator gen_;
  torch::Tensor perm_;
  int64_t cursor_ = 0;
};

class CsvLogger {
 public:
  CsvLogger(const std::string& path, const std::string& header) : out_(path, std::ios::trunc) {
    if (!out_) throw ConfigError("cannot open metrics log: " + path);
    out_ << header << "\n";
    out_.flush();
  }

  // Fixed formatting keeps reruns byte-identical.
  void row(std::initializer_list<double> values, int64_t step) {
    char buf[64];
    out_ << step;
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out_ << "," << buf;
    }
    out_ << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void set_lr(torch::optim::Adam& opt, double lr) {
  for (auto& group : opt.param_groups())
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

uint64_t module_hash(const torch::nn::Module& m) {
  Checkpoint ck;
  ck.put_module("m", m);
  return ck.content_hash();
}

}  // namespace

TrainResult train_gan(const std::string& run_dir, Generator& gen, Discriminator& disc,
                      const ImageBatch& data, const GanTrainConfig& cfg) {
  fs::create_directories(run_dir + "/checkpoints");
  CsvLogger log(run_dir + "/gan_metrics.csv", "step,lr,d_loss,g_loss,penalty,score_real,score_fake");
  BatchStream stream(data, cfg.batch_size, derive_seed(cfg.seed, "gan-batches"));
  auto latent_gen = at::detail::createCPUGenerator(derive_seed(cfg.seed, "gan-latents"));

  torch::optim::Adam d_opt(disc->parameters(),
                           torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));
  torch::optim::Adam g_opt(gen->parameters(),
                           torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));

  auto critic = [&](const torch::Tensor& x) { return disc->forward(x); };
  const int64_t z_dim = gen->config().z_dim;

  TrainResult result;
  for (int64_t step = 0; step < cfg.steps; ++step) {
    auto real = stream.next();
    auto z = torch::randn({cfg.batch_size, z_dim}, latent_gen);

    // Critic update: non-saturating logistic loss with the gradient penalty
    // on real samples.
    torch::Tensor fake;
    {
      torch::NoGradGuard no_grad;
      fake = gen->generate(z);
    }
    d_opt.zero_grad();
    auto d_fake = disc->forward(fake);
    auto d_real = disc->forward(real);
    auto penalty = gradient_penalty(real, critic, cfg.grad_penalty);
    auto d_loss = torch::softplus(d_fake).mean() + torch::softplus(-d_real).mean() + penalty;
    if (!torch::isfinite(d_loss).all().item<bool>())
      throw TrainingFault("gan: non-finite critic loss at step " + std::to_string(step));
    d_loss.backward();
    d_opt.step();

    // Generator update.
    g_opt.zero_grad();
    auto fake2 = gen->generate(torch::randn({cfg.batch_size, z_dim}, latent_gen));
    auto g_loss = torch::softplus(-disc->forward(fake2)).mean();
    if (!torch::isfinite(g_loss).all().item<bool>())
      throw TrainingFault("gan: non-finite generator loss at step " + std::to_string(step));
    g_loss.backward();
    g_opt.step();

    if (step % cfg.log_interval == 0 || step + 1 == cfg.steps) {
      log.row({cfg.lr, d_loss.item<double>(), g_loss.item<double>(), penalty.item<double>(),
               d_real.mean().item<double>(), d_fake.mean().item<double>()},
              step);
    }
    if ((step + 1) % cfg.snapshot_interval == 0 || step + 1 == cfg.steps) {
      gen->estimate_mean_latent(cfg.mean_latent_samples, derive_seed(cfg.seed, "mean-latent"));
      Checkpoint ck;
      ck.kind = "generator";
      ck.meta["step"] = std::to_string(step + 1);
      ck.put_module("generator", *gen);
      ck.save(run_dir + "/checkpoints/generator");
      Checkpoint dck;
      dck.kind = "discriminator";
      dck.put_module("discriminator", *disc);
      dck.save(run_dir + "/checkpoints/gan_discriminator");
    }
  }
  result.checkpoint_dir = run_dir + "/checkpoints/generator";
  result.metrics_csv = run_dir + "/gan_metrics.csv";
  return result;
}

TrainResult train_encoder(const std::string& run_dir, Generator& gen,
                          torch::nn::Module& encoder_module, const EncodeFn& encode,
                          Discriminator& disc, DigitNet& perceptual, const DatasetSplit& data,
                          const TrainConfig& cfg, const std::string& checkpoint_name) {
  fs::create_directories(run_dir + "/checkpoints");
  CsvLogger log(run_dir + "/" + checkpoint_name + "_metrics.csv",
                "step,lr,pixel,adversarial,perceptual,regularizer,total,d_loss,cos_sim");

  // Frozen-loss contract: the generator only renders.
  freeze(*gen);
  gen->eval();
  const uint64_t gen_hash_before = module_hash(*gen);

  BatchStream stream(data.train, cfg.batch_size, derive_seed(cfg.seed, "encoder-batches"));
  torch::optim::Adam e_opt(encoder_module.parameters(),
                           torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));
  torch::optim::Adam d_opt(disc->parameters(),
                           torch::optim::AdamOptions(cfg.lr).betas({cfg.beta1, cfg.beta2}));

  auto critic = [&](const torch::Tensor& x) { return disc->forward(x); };
  auto percep = [&](const torch::Tensor& x) { return perceptual->features_mid(x); };

  TrainResult result;
  double last_cos = std::nan("");
  for (int64_t step = 0; step < cfg.steps; ++step) {
    const double lr = cfg.lr_at(step);
    set_lr(e_opt, lr);
    set_lr(d_opt, lr);
    auto x = stream.next();

    // Discriminator step on the current reconstructions.
    torch::Tensor recon_detached;
    {
      torch::NoGradGuard no_grad;
      auto features = finalize_features(gen->mean_styles(), encode(x));
      recon_detached = gen->synthesize(features);
    }
    d_opt.zero_grad();
    auto d_parts = discriminator_loss(x, recon_detached, critic, cfg.weights.grad_penalty);
    d_parts.total.backward();
    d_opt.step();

    // Encoder step through the frozen generator.
    e_opt.zero_grad();
    auto parts = encoder_loss(x, gen, encode, critic, percep, cfg.weights);
    parts.total.backward();
    e_opt.step();

    const bool snapshot = (step + 1) % cfg.snapshot_interval == 0 || step + 1 == cfg.steps;
    if (snapshot)
      last_cos = cos_sim_diag(gen, encode, cfg.cos_sim_samples, derive_seed(cfg.seed, "cos-train"));
    if (step % cfg.log_interval == 0 || snapshot) {
      log.row({lr, parts.pixel.item<double>(), parts.adversarial.item<double>(),
               parts.perceptual.item<double>(), parts.regularizer.item<double>(),
               parts.total.item<double>(), d_parts.total.item<double>(), last_cos},
              step);
    }
    if (snapshot) {
      Checkpoint ck;
      ck.kind = checkpoint_name;
      ck.meta["step"] = std::to_string(step + 1);
      ck.put_module(checkpoint_name, encoder_module);
      ck.save(run_dir + "/checkpoints/" + checkpoint_name);
      Checkpoint dck;
      dck.kind = "discriminator";
      dck.put_module("discriminator", *disc);
      dck.save(run_dir + "/checkpoints/" + checkpoint_name + "_discriminator");
      result.final_pixel_loss = parts.pixel.item<double>();
    }
  }

  if (module_hash(*gen) != gen_hash_before)
    throw TrainingFault("frozen generator was modified during encoder training");

  result.checkpoint_dir = run_dir + "/checkpoints/" + checkpoint_name;
  result.metrics_csv = run_dir + "/" + checkpoint_name + "_metrics.csv";
  return result;
}

}  // namespace ghfeat
