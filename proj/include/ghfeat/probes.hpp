#pragma once

#include <torch/torch.h>

#include <string>
#include <vector>

#include "ghfeat/encoder.hpp"
#include "ghfeat/generator.hpp"

namespace ghfeat {

enum class ProbeTask { Classify, Regress };

// Single linear layer on standardized frozen features. Training never
// touches the encoder; the model stores its own normalization so it is
// self-contained at eval time.
struct ProbeModel {
  torch::Tensor weight;     // [out, D]
  torch::Tensor bias;       // [out]
  torch::Tensor feat_mean;  // [D]
  torch::Tensor feat_std;   // [D]
  ProbeTask task = ProbeTask::Classify;

  torch::Tensor apply(const torch::Tensor& features) const;
};

struct ProbeFitOptions {
  int64_t epochs = 60;
  int64_t batch_size = 256;
  double lr = 1e-2;
  double weight_decay = 1e-5;
  uint64_t seed = 7;
};

// Trains the probe head to convergence on (features, labels). Classification
// uses softmax cross-entropy on int64 labels; regression fits the l1 error
// of float targets.
ProbeModel fit_probe(const torch::Tensor& features, const torch::Tensor& labels, ProbeTask task,
                     const ProbeFitOptions& opts = {});

// Top-1 accuracy for classification, mean absolute error for regression.
double eval_probe(const ProbeModel& m, const torch::Tensor& features, const torch::Tensor& labels);

// Per-image finalized features, one flat [N, 2c] tensor per level
// (level 1 first). Batched so large sets stay within memory.
std::vector<torch::Tensor> extract_level_features(Generator& gen, Encoder& enc,
                                                  const torch::Tensor& images,
                                                  int64_t batch = 128);

// Concatenation of all level features: the full feature view [N, sum 2c].
torch::Tensor concat_levels(const std::vector<torch::Tensor>& per_level);

struct LevelScore {
  int64_t level = 0;
  double score = 0.0;  // accuracy (classify) or MAE (regress)
};

// One probe per level on the same split; returns per-level scores.
std::vector<LevelScore> layerwise_sweep(const std::vector<torch::Tensor>& train_features,
                                        const torch::Tensor& train_labels,
                                        const std::vector<torch::Tensor>& test_features,
                                        const torch::Tensor& test_labels, ProbeTask task,
                                        const ProbeFitOptions& opts = {});

// Best level of a sweep: highest accuracy or lowest error, ties to the
// lower level index.
int64_t best_level(const std::vector<LevelScore>& scores, ProbeTask task);

// Mean luminance target per image (Y channel mean; the pixel mean for
// grayscale).
torch::Tensor luminance_targets(const torch::Tensor& images);

// Retrieval index over per-level feature records.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  RetrievalIndex(std::vector<int64_t> ids, std::vector<torch::Tensor> per_level);

  int64_t level_count() const { return static_cast<int64_t>(features_.size()); }
  int64_t size() const { return static_cast<int64_t>(ids_.size()); }
  const std::vector<int64_t>& ids() const { return ids_; }
  torch::Tensor features_at(int64_t level) const;
  torch::Tensor vector_of(int64_t id, int64_t level) const;

  // k nearest ids by l1 distance at the chosen level, ties broken by
  // ascending id. k beyond the gallery returns the full ranking.
  std::vector<int64_t> retrieve(const torch::Tensor& query, int64_t level, int64_t k) const;

  void save(const std::string& path) const;
  static RetrievalIndex load(const std::string& path);

 private:
  std::vector<int64_t> ids_;
  std::vector<torch::Tensor> features_;  // per level [N, D_l]
};

// Per-pixel linear classifier over upsampled concatenated spatial features.
struct SegHead {
  torch::Tensor weight;  // [D]
  torch::Tensor bias;    // [1]
  torch::Tensor feat_mean;
  torch::Tensor feat_std;
};

struct SegFitOptions {
  int64_t iters = 400;
  double lr = 5e-2;
  uint64_t seed = 7;
};

// Bilinear-upsampled per-pixel feature volume [N, D, H, W] from finalized
// spatial features.
torch::Tensor spatial_feature_volume(Generator& gen, SpatialEncoder& enc,
                                     const torch::Tensor& images);

// Fits the head on at most `budget` annotated images (binary masks [N, H, W]).
SegHead fit_seg_head(Generator& gen, SpatialEncoder& enc, const torch::Tensor& images,
                     const torch::Tensor& masks, int64_t budget, const SegFitOptions& opts = {});

// Full-resolution boolean prediction masks [N, H, W].
torch::Tensor predict_seg(const SegHead& head, Generator& gen, SpatialEncoder& enc,
                          const torch::Tensor& images);

}  // namespace ghfeat
