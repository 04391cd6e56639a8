#include "ghfeat/probes.hpp"

#include <algorithm>
#include <fstream>

namespace F = torch::nn::functional;

namespace ghfeat {

torch::Tensor ProbeModel::apply(const torch::Tensor& features) const {
  auto z = (features - feat_mean) / feat_std;
  return F::linear(z, weight, bias);
}

ProbeModel fit_probe(const torch::Tensor& features, const torch::Tensor& labels, ProbeTask task,
                     const ProbeFitOptions& opts) {
  if (features.size(0) != labels.size(0)) throw ShapeError("fit_probe: feature/label count mismatch");
  const int64_t n = features.size(0);
  const int64_t dim = features.size(1);

  ProbeModel m;
  m.task = task;
  m.feat_mean = features.mean(0).detach();
  m.feat_std = (features.std(0) + 1e-6).detach();

  int64_t out_dim = 1;
  torch::Tensor targets = labels;
  if (task == ProbeTask::Classify) {
    targets = labels.to(torch::kInt64);
    out_dim = targets.max().item<int64_t>() + 1;
  } else {
    targets = labels.to(torch::kFloat32).reshape({n, 1});
  }

  auto z = ((features - m.feat_mean) / m.feat_std).detach();
  auto weight = torch::zeros({out_dim, dim}, torch::requires_grad());
  auto bias = torch::zeros({out_dim}, torch::requires_grad());
  torch::optim::Adam opt({weight, bias},
                         torch::optim::AdamOptions(opts.lr).weight_decay(opts.weight_decay));
  auto gen = at::detail::createCPUGenerator(derive_seed(opts.seed, "probe"));

  for (int64_t epoch = 0; epoch < opts.epochs; ++epoch) {
    auto perm = torch::randperm(n, gen, torch::kInt64);
    for (int64_t off = 0; off < n; off += opts.batch_size) {
      auto idx = perm.slice(0, off, std::min(off + opts.batch_size, n));
      auto x = z.index_select(0, idx);
      auto y = targets.index_select(0, idx);
      opt.zero_grad();
      auto logits = F::linear(x, weight, bias);
      auto loss = task == ProbeTask::Classify ? F::cross_entropy(logits, y)
                                              : (logits - y).abs().mean();
      loss.backward();
      opt.step();
    }
  }
  m.weight = weight.detach();
  m.bias = bias.detach();
  return m;
}

double eval_probe(const ProbeModel& m, const torch::Tensor& features, const torch::Tensor& labels) {
  if (features.size(0) != labels.size(0)) throw ShapeError("eval_probe: feature/label count mismatch");
  torch::NoGradGuard no_grad;
  auto out = m.apply(features);
  if (m.task == ProbeTask::Classify) {
    return out.argmax(1).eq(labels.to(torch::kInt64)).to(torch::kFloat64).mean().item<double>();
  }
  return (out.squeeze(1) - labels.to(torch::kFloat32)).abs().mean().item<double>();
}

std::vector<torch::Tensor> extract_level_features(Generator& gen, Encoder& enc,
                                                  const torch::Tensor& images, int64_t batch) {
  torch::NoGradGuard no_grad;
  const int64_t layer_total = gen->config().layer_count();
  std::vector<std::vector<torch::Tensor>> chunks(layer_total);
  for (int64_t off = 0; off < images.size(0); off += batch) {
    auto x = images.slice(0, off, std::min(off + batch, images.size(0)));
    auto features = finalize_features(gen->mean_styles(), enc->encode(x));
    for (int64_t lvl = 1; lvl <= layer_total; ++lvl) {
      const auto& l = features.level(lvl);
      chunks[lvl - 1].push_back(torch::cat({l.scale, l.bias}, 1));
    }
  }
  std::vector<torch::Tensor> out;
  out.reserve(chunks.size());
  for (auto& c : chunks) out.push_back(torch::cat(c, 0));
  return out;
}

torch::Tensor concat_levels(const std::vector<torch::Tensor>& per_level) {
  return torch::cat(per_level, 1);
}

std::vector<LevelScore> layerwise_sweep(const std::vector<torch::Tensor>& train_features,
                                        const torch::Tensor& train_labels,
                                        const std::vector<torch::Tensor>& test_features,
                                        const torch::Tensor& test_labels, ProbeTask task,
                                        const ProbeFitOptions& opts) {
  if (train_features.size() != test_features.size())
    throw ShapeError("layerwise_sweep: level count mismatch");
  std::vector<LevelScore> out;
  for (size_t i = 0; i < train_features.size(); ++i) {
    auto m = fit_probe(train_features[i], train_labels, task, opts);
    out.push_back({static_cast<int64_t>(i + 1), eval_probe(m, test_features[i], test_labels)});
  }
  return out;
}

int64_t best_level(const std::vector<LevelScore>& scores, ProbeTask task) {
  if (scores.empty()) throw BoundsError("best_level: empty sweep");
  const LevelScore* best = &scores.front();
  for (const auto& s : scores) {
    const bool better = task == ProbeTask::Classify ? s.score > best->score : s.score < best->score;
    if (better) best = &s;
  }
  return best->level;
}

torch::Tensor luminance_targets(const torch::Tensor& images) {
  torch::Tensor y;
  if (images.size(1) == 3) {
    auto w = torch::tensor({0.299f, 0.587f, 0.114f}).reshape({1, 3, 1, 1});
    y = (images * w).sum(1);
  } else {
    y = images.squeeze(1);
  }
  return y.mean({1, 2});
}

RetrievalIndex::RetrievalIndex(std::vector<int64_t> ids, std::vector<torch::Tensor> per_level)
    : ids_(std::move(ids)), features_(std::move(per_level)) {
  for (const auto& f : features_)
    if (f.size(0) != static_cast<int64_t>(ids_.size()))
      throw ShapeError("RetrievalIndex: id/feature count mismatch");
  std::vector<int64_t> sorted = ids_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ShapeError("RetrievalIndex: ids must be unique");
}

torch::Tensor RetrievalIndex::features_at(int64_t level) const {
  if (level < 1 || level > level_count()) throw BoundsError("retrieval level out of range");
  return features_[static_cast<size_t>(level - 1)];
}

torch::Tensor RetrievalIndex::vector_of(int64_t id, int64_t level) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw BoundsError("retrieval id not in gallery");
  return features_at(level)[static_cast<int64_t>(it - ids_.begin())];
}

std::vector<int64_t> RetrievalIndex::retrieve(const torch::Tensor& query, int64_t level,
                                              int64_t k) const {
  if (size() == 0) throw BoundsError("retrieve: empty gallery");
  auto gallery = features_at(level);
  if (query.numel() != gallery.size(1)) throw ShapeError("retrieve: query dimension mismatch");
  torch::NoGradGuard no_grad;
  auto dists = (gallery - query.reshape({1, -1})).abs().sum(1).to(torch::kFloat64);
  auto d = dists.accessor<double, 1>();
  std::vector<std::pair<double, int64_t>> order(ids_.size());
  for (size_t i = 0; i < ids_.size(); ++i) order[i] = {d[static_cast<int64_t>(i)], ids_[i]};
  std::sort(order.begin(), order.end());  // distance, then ascending id
  const int64_t take = std::min<int64_t>(k, static_cast<int64_t>(order.size()));
  std::vector<int64_t> out(static_cast<size_t>(take));
  for (int64_t i = 0; i < take; ++i) out[static_cast<size_t>(i)] = order[static_cast<size_t>(i)].second;
  return out;
}

namespace {

constexpr uint32_t kFeatureStoreMagic = 0x54464847;  // "GHFT"

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void RetrievalIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write feature store: " + path);
  write_pod<uint32_t>(out, kFeatureStoreMagic);
  write_pod<uint32_t>(out, 1);  // version
  write_pod<uint32_t>(out, static_cast<uint32_t>(level_count()));
  for (const auto& f : features_) write_pod<uint32_t>(out, static_cast<uint32_t>(f.size(1)));
  write_pod<uint64_t>(out, static_cast<uint64_t>(size()) * static_cast<uint64_t>(level_count()));
  for (int64_t level = 1; level <= level_count(); ++level) {
    auto f = features_at(level).to(torch::kFloat32).contiguous();
    for (int64_t i = 0; i < size(); ++i) {
      write_pod<uint32_t>(out, static_cast<uint32_t>(ids_[static_cast<size_t>(i)]));
      write_pod<uint32_t>(out, static_cast<uint32_t>(level));
      out.write(reinterpret_cast<const char*>(f[i].data_ptr<float>()), f.size(1) * 4);
    }
  }
}

RetrievalIndex RetrievalIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("feature store not found: " + path);
  if (read_pod<uint32_t>(in) != kFeatureStoreMagic) throw FormatError(path + ": bad magic");
  if (read_pod<uint32_t>(in) != 1) throw FormatError(path + ": unsupported version");
  const uint32_t levels = read_pod<uint32_t>(in);
  std::vector<uint32_t> dims(levels);
  for (auto& d : dims) d = read_pod<uint32_t>(in);
  const uint64_t records = read_pod<uint64_t>(in);
  if (levels == 0 || records % levels != 0) throw FormatError(path + ": record count mismatch");
  const int64_t n = static_cast<int64_t>(records / levels);

  std::vector<int64_t> ids(static_cast<size_t>(n));
  std::vector<torch::Tensor> features;
  for (uint32_t lvl = 1; lvl <= levels; ++lvl) {
    auto f = torch::empty({n, static_cast<int64_t>(dims[lvl - 1])}, torch::kFloat32);
    for (int64_t i = 0; i < n; ++i) {
      const uint32_t id = read_pod<uint32_t>(in);
      const uint32_t got_level = read_pod<uint32_t>(in);
      if (got_level != lvl) throw FormatError(path + ": interleaving mismatch");
      if (lvl == 1)
        ids[static_cast<size_t>(i)] = id;
      else if (ids[static_cast<size_t>(i)] != id)
        throw FormatError(path + ": id mismatch across levels");
      in.read(reinterpret_cast<char*>(f[i].data_ptr<float>()), dims[lvl - 1] * 4);
    }
    features.push_back(f);
  }
  if (!in) throw FormatError(path + ": truncated feature store");
  return RetrievalIndex(std::move(ids), std::move(features));
}

torch::Tensor spatial_feature_volume(Generator& gen, SpatialEncoder& enc,
                                     const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  const int64_t res = gen->config().resolution;
  auto features = finalize_features(gen->mean_styles(), enc->encode(images));
  std::vector<torch::Tensor> planes;
  for (int64_t lvl = 1; lvl <= features.layer_count(); ++lvl) {
    const auto& l = features.level(lvl);
    auto maps = torch::cat({l.scale, l.bias}, 1);
    if (maps.size(2) != res)
      maps = F::interpolate(maps, F::InterpolateFuncOptions()
                                      .size(std::vector<int64_t>{res, res})
                                      .mode(torch::kBilinear)
                                      .align_corners(false));
    planes.push_back(maps);
  }
  return torch::cat(planes, 1);
}

SegHead fit_seg_head(Generator& gen, SpatialEncoder& enc, const torch::Tensor& images,
                     const torch::Tensor& masks, int64_t budget, const SegFitOptions& opts) {
  if (budget < 1) throw BoundsError("fit_seg_head: annotation budget must be positive");
  if (images.size(0) != masks.size(0)) throw ShapeError("fit_seg_head: image/mask count mismatch");
  const int64_t n = std::min(budget, images.size(0));

  auto volume = spatial_feature_volume(gen, enc, images.slice(0, 0, n));
  const int64_t dim = volume.size(1);
  auto x = volume.permute({0, 2, 3, 1}).reshape({-1, dim});
  auto y = masks.slice(0, 0, n).to(torch::kFloat32).reshape({-1, 1});

  SegHead head;
  head.feat_mean = x.mean(0);
  head.feat_std = x.std(0) + 1e-6;
  auto z = ((x - head.feat_mean) / head.feat_std).detach();

  auto weight = torch::zeros({1, dim}, torch::requires_grad());
  auto bias = torch::zeros({1}, torch::requires_grad());
  torch::optim::Adam opt({weight, bias}, torch::optim::AdamOptions(opts.lr));
  for (int64_t it = 0; it < opts.iters; ++it) {
    opt.zero_grad();
    auto logits = F::linear(z, weight, bias);
    auto loss = F::binary_cross_entropy_with_logits(logits, y);
    loss.backward();
    opt.step();
  }
  head.weight = weight.detach().squeeze(0);
  head.bias = bias.detach();
  return head;
}

torch::Tensor predict_seg(const SegHead& head, Generator& gen, SpatialEncoder& enc,
                          const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  auto volume = spatial_feature_volume(gen, enc, images);
  const int64_t dim = volume.size(1);
  auto x = volume.permute({0, 2, 3, 1});
  auto z = (x - head.feat_mean) / head.feat_std;
  auto logits = z.matmul(head.weight) + head.bias;
  return logits > 0;
}

}  // namespace ghfeat
