#pragma once

#include <torch/torch.h>

#include <string>

#include "ghfeat/checkpoint.hpp"
#include "ghfeat/config.hpp"
#include "ghfeat/data.hpp"
#include "ghfeat/encoder.hpp"
#include "ghfeat/generator.hpp"
#include "ghfeat/losses.hpp"
#include "ghfeat/perceptual.hpp"

namespace ghfeat {

struct TrainConfig {
  LossWeights weights;            // lambda1..lambda4
  double beta1 = 0.0;
  double beta2 = 0.99;
  double lr = 1e-4;
  double lr_decay = 0.8;
  int64_t decay_interval = 5000;  // steps between exponential decays
  int64_t batch_size = 16;
  int64_t steps = 2000;
  int64_t snapshot_interval = 1000;
  int64_t log_interval = 50;
  int64_t cos_sim_samples = 256;
  uint64_t seed = 7;

  double lr_at(int64_t step) const;
  static TrainConfig from(const Config& cfg);
};

struct GanTrainConfig {
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double grad_penalty = 5.0;
  int64_t batch_size = 32;
  int64_t steps = 3000;
  int64_t snapshot_interval = 1000;
  int64_t log_interval = 50;
  int64_t mean_latent_samples = 8192;
  uint64_t seed = 7;

  static GanTrainConfig from(const Config& cfg);
};

struct TrainResult {
  std::string checkpoint_dir;
  std::string metrics_csv;
  double final_pixel_loss = 0.0;
};

// Adversarial pretraining of the generator/discriminator pair
// (non-saturating logistic loss plus the same gradient penalty form as the
// encoder stage). Finishes by estimating the mean latent and writing the
// generator checkpoint.
TrainResult train_gan(const std::string& run_dir, Generator& gen, Discriminator& disc,
                      const ImageBatch& data, const GanTrainConfig& cfg);

// Joint encoder/discriminator training against the frozen generator.
// One discriminator step then one encoder step per iteration. The generator
// weights are bit-identical before and after. Works for either the flat or
// the spatial encoder through `encode` + `encoder_module`.
TrainResult train_encoder(const std::string& run_dir, Generator& gen,
                          torch::nn::Module& encoder_module, const EncodeFn& encode,
                          Discriminator& disc, DigitNet& perceptual, const DatasetSplit& data,
                          const TrainConfig& cfg, const std::string& checkpoint_name = "encoder");

}  // namespace ghfeat
