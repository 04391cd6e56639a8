#include "ghfeat/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ghfeat/idx.hpp"

namespace fs = std::filesystem;

namespace ghfeat {

void ImageBatch::validate() const {
  if (pixels.dim() != 4) throw ShapeError("ImageBatch pixels must be [N, C, H, W]");
  if (pixels.scalar_type() != torch::kFloat32) throw ShapeError("ImageBatch pixels must be float32");
  if (pixels.size(2) != pixels.size(3)) throw ShapeError("ImageBatch images must be square");
  const int64_t c = pixels.size(1);
  if (c != 1 && c != 3) throw ShapeError("ImageBatch channels must be 1 or 3");
  const float lo = pixels.min().item<float>();
  const float hi = pixels.max().item<float>();
  if (lo < -1.0f - 1e-6f || hi > 1.0f + 1e-6f)
    throw BoundsError("ImageBatch pixels outside [-1, 1]: min=" + std::to_string(lo) +
                      " max=" + std::to_string(hi));
  if (labels && labels->size(0) != pixels.size(0))
    throw ShapeError("ImageBatch label count does not match image count");
}

ImageBatch ImageBatch::index(const torch::Tensor& idx) const {
  ImageBatch out;
  out.pixels = pixels.index_select(0, idx);
  if (labels) out.labels = labels->index_select(0, idx);
  return out;
}

ImageBatch ImageBatch::slice(int64_t begin, int64_t end) const {
  ImageBatch out;
  out.pixels = pixels.slice(0, begin, end);
  if (labels) out.labels = labels->slice(0, begin, end);
  return out;
}

torch::Tensor preprocess(const torch::Tensor& raw, int64_t target_resolution, int64_t channels) {
  torch::Tensor x = raw.to(torch::kFloat32);
  if (x.dim() == 3) x = x.unsqueeze(1);  // [N, H, W] -> [N, 1, H, W]
  if (x.dim() != 4) throw ShapeError("preprocess expects [N, H, W] or [N, C, H, W]");
  const double lo = x.min().item<double>();
  const double hi = x.max().item<double>();
  if (lo < 0.0 || hi > 255.0) throw BoundsError("preprocess expects raw values in [0, 255]");

  x = x * (2.0f / 255.0f) - 1.0f;

  const int64_t h = x.size(2);
  if (h > target_resolution)
    throw ShapeError("preprocess only pads, never shrinks: " + std::to_string(h) + " -> " +
                     std::to_string(target_resolution));
  if (h < target_resolution) {
    const int64_t total = target_resolution - h;
    const int64_t before = total / 2;
    const int64_t after = total - before;
    namespace F = torch::nn::functional;
    x = F::pad(x, F::PadFuncOptions({before, after, before, after})
                     .mode(torch::kConstant)
                     .value(-1.0));
  }
  if (channels == 3 && x.size(1) == 1) x = x.repeat({1, 3, 1, 1});
  return x.contiguous();
}

torch::Tensor dequantize(const torch::Tensor& pixels) {
  auto bytes = ((pixels.clamp(-1.0, 1.0) + 1.0f) * (255.0f / 2.0f)).round().clamp(0, 255);
  return bytes.to(torch::kUInt8);
}

ImageBatch stitch(const ImageBatch& base, const ImageBatch& patch, const Rect& region) {
  const int64_t res = base.resolution();
  if (patch.resolution() != res || patch.channels() != base.channels())
    throw ShapeError("stitch: base and patch shapes differ");
  ImageBatch out;
  out.pixels = base.pixels.clone();
  out.labels = base.labels;
  if (region.empty()) return out;
  if (region.x < 0 || region.y < 0 || region.x + region.w > res || region.y + region.h > res)
    throw BoundsError("stitch region out of bounds");
  out.pixels.index_put_({torch::indexing::Slice(), torch::indexing::Slice(),
                         torch::indexing::Slice(region.y, region.y + region.h),
                         torch::indexing::Slice(region.x, region.x + region.w)},
                        patch.pixels.index({torch::indexing::Slice(), torch::indexing::Slice(),
                                            torch::indexing::Slice(region.y, region.y + region.h),
                                            torch::indexing::Slice(region.x, region.x + region.w)}));
  return out;
}

std::pair<std::vector<int64_t>, std::vector<int64_t>> split_indices(int64_t n, int64_t n_take,
                                                                    uint64_t seed) {
  if (n_take > n) throw BoundsError("split_indices: n_take > n");
  std::vector<int64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(splitmix64(seed));
  for (int64_t i = n - 1; i > 0; --i) {
    const int64_t j = static_cast<int64_t>(rng() % static_cast<uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  std::vector<int64_t> taken(perm.begin(), perm.begin() + n_take);
  std::vector<int64_t> rest(perm.begin() + n_take, perm.end());
  return {taken, rest};
}

namespace {

struct P {
  double x, y;
};

using Stroke = std::vector<P>;

// Digit skeletons as polylines in a unit box, y pointing down. Arcs are
// sampled as short polylines so rasterization only needs point-to-segment
// distances.
Stroke arc(double cx, double cy, double rx, double ry, double a0, double a1, int n = 14) {
  Stroke s;
  for (int i = 0; i <= n; ++i) {
    const double t = a0 + (a1 - a0) * i / n;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

std::vector<Stroke> digit_skeleton(int d) {
  constexpr double kPi = 3.14159265358979323846;
  switch (d) {
    case 0:
      return {arc(0.50, 0.50, 0.26, 0.37, 0, 2 * kPi, 24)};
    case 1:
      return {{{0.40, 0.28}, {0.56, 0.13}}, {{0.56, 0.13}, {0.56, 0.88}}};
    case 2:
      return {arc(0.50, 0.33, 0.25, 0.21, -kPi, 0.15 * kPi, 12),
              {{0.71, 0.43}, {0.27, 0.87}},
              {{0.27, 0.87}, {0.76, 0.87}}};
    case 3:
      return {arc(0.47, 0.30, 0.24, 0.19, -0.85 * kPi, 0.5 * kPi, 12),
              arc(0.47, 0.68, 0.26, 0.21, -0.5 * kPi, 0.85 * kPi, 12)};
    case 4:
      return {{{0.64, 0.12}, {0.23, 0.60}}, {{0.23, 0.60}, {0.80, 0.60}}, {{0.64, 0.12}, {0.64, 0.88}}};
    case 5:
      return {{{0.73, 0.13}, {0.32, 0.13}},
              {{0.32, 0.13}, {0.30, 0.45}},
              arc(0.48, 0.64, 0.25, 0.23, -0.55 * kPi, 0.75 * kPi, 14)};
    case 6:
      return {{{0.64, 0.12}, {0.38, 0.45}}, arc(0.50, 0.66, 0.22, 0.21, 0, 2 * kPi, 20)};
    case 7:
      return {{{0.24, 0.14}, {0.76, 0.14}}, {{0.76, 0.14}, {0.44, 0.88}}};
    case 8:
      return {arc(0.50, 0.31, 0.19, 0.18, 0, 2 * kPi, 18), arc(0.50, 0.67, 0.23, 0.21, 0, 2 * kPi, 20)};
    case 9:
      return {arc(0.47, 0.33, 0.21, 0.20, 0, 2 * kPi, 20), {{0.68, 0.35}, {0.60, 0.88}}};
    default:
      throw BoundsError("digit class must be 0-9");
  }
}

double rand_unit(uint64_t& stream) {
  stream = splitmix64(stream);
  return static_cast<double>(stream >> 11) * (1.0 / 9007199254740992.0);
}

double rand_range(uint64_t& stream, double lo, double hi) { return lo + (hi - lo) * rand_unit(stream); }

double segment_distance(double px, double py, const P& a, const P& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

torch::Tensor render_digit(int digit, uint64_t& stream) {
  constexpr int kSize = 28;
  auto strokes = digit_skeleton(digit);

  // Per-image jitter: rotation, shear, anisotropic scale, translation,
  // stroke thickness, ink level, and a little control-point noise.
  const double rot = rand_range(stream, -0.16, 0.16);
  const double shear = rand_range(stream, -0.14, 0.14);
  const double scale = rand_range(stream, 0.88, 1.06);
  const double aspect = rand_range(stream, 0.94, 1.06);
  const double tx = rand_range(stream, -1.6, 1.6);
  const double ty = rand_range(stream, -1.6, 1.6);
  const double thickness = rand_range(stream, 2.1, 3.3);
  const double ink = rand_range(stream, 0.72, 1.0);

  const double ca = std::cos(rot), sa = std::sin(rot);
  const double sx = 20.0 * scale * aspect;
  const double sy = 20.0 * scale / aspect;
  auto map_point = [&](const P& p) -> P {
    const double jx = p.x - 0.5 + rand_range(stream, -0.008, 0.008);
    const double jy = p.y - 0.5 + rand_range(stream, -0.008, 0.008);
    const double wx = jx + shear * jy;
    const double rx = ca * wx - sa * jy;
    const double ry = sa * wx + ca * jy;
    return {14.0 + tx + sx * rx, 14.0 + ty + sy * ry};
  };

  std::vector<std::pair<P, P>> segments;
  for (const auto& s : strokes) {
    std::vector<P> mapped(s.size());
    for (size_t i = 0; i < s.size(); ++i) mapped[i] = map_point(s[i]);
    for (size_t i = 0; i + 1 < s.size(); ++i) segments.emplace_back(mapped[i], mapped[i + 1]);
  }

  auto img = torch::zeros({kSize, kSize}, torch::kUInt8);
  auto acc = img.accessor<uint8_t, 2>();
  const double half = thickness * 0.5;
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < kSize; ++x) {
      double d = 1e9;
      for (const auto& [a, b] : segments) d = std::min(d, segment_distance(x + 0.5, y + 0.5, a, b));
      const double alpha = std::clamp(0.5 + (half - d), 0.0, 1.0);  // 1 px antialias band
      acc[y][x] = static_cast<uint8_t>(std::lround(255.0 * ink * alpha));
    }
  }
  return img;
}

namespace {

void write_corpus_part(const std::string& dir, const std::string& images_name,
                       const std::string& labels_name, int64_t n, uint64_t& stream) {
  auto images = torch::empty({n, 28, 28}, torch::kUInt8);
  auto labels = torch::empty({n}, torch::kUInt8);
  for (int64_t i = 0; i < n; ++i) {
    const int digit = static_cast<int>(splitmix64(stream) % 10);
    stream = splitmix64(stream ^ 0x5bd1e995);
    images[i] = render_digit(digit, stream);
    labels[i] = static_cast<uint8_t>(digit);
  }
  save_idx(dir + "/" + images_name, images, IdxKind::Images);
  save_idx(dir + "/" + labels_name, labels, IdxKind::Labels);
}

uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": cannot read for checksum");
  uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    if (!in) break;
  }
  return h;
}

void verify_or_record_checksums(const std::string& dir, const std::vector<std::string>& names) {
  const std::string sidecar = dir + "/checksums.txt";
  std::map<std::string, std::string> recorded;
  if (fs::exists(sidecar)) {
    std::ifstream in(sidecar);
    std::string name, sum;
    while (in >> name >> sum) recorded[name] = sum;
  }
  bool dirty = false;
  for (const auto& name : names) {
    std::ostringstream h;
    h << std::hex << file_checksum(dir + "/" + name);
    auto it = recorded.find(name);
    if (it == recorded.end()) {
      recorded[name] = h.str();
      dirty = true;
    } else if (it->second != h.str()) {
      throw FormatError(dir + "/" + name + ": checksum mismatch against recorded sidecar (" +
                        it->second + " vs " + h.str() + ")");
    }
  }
  if (dirty) {
    std::ofstream out(sidecar);
    for (const auto& [k, v] : recorded) out << k << " " << v << "\n";
  }
}

}  // namespace

void synthesize_corpus(const std::string& data_dir, int64_t n_train, int64_t n_test, uint64_t seed) {
  fs::create_directories(data_dir);
  uint64_t stream = derive_seed(seed, "synthetic-digits");
  write_corpus_part(data_dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", n_train, stream);
  write_corpus_part(data_dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", n_test, stream);
}

DatasetSplit load_dataset(const std::string& data_dir, int64_t resolution, int64_t channels,
                          uint64_t seed) {
  const std::vector<std::string> names = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                                          "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
  for (const auto& n : names)
    if (!fs::exists(data_dir + "/" + n))
      throw DependencyError("dataset file missing: " + data_dir + "/" + n +
                            " (run `ghfeat prepare-data` first)");
  verify_or_record_checksums(data_dir, names);

  DatasetSplit split;
  split.seed = seed;
  auto raw_train = load_idx(data_dir + "/" + names[0], IdxKind::Images);
  auto lab_train = load_idx(data_dir + "/" + names[1], IdxKind::Labels);
  auto raw_test = load_idx(data_dir + "/" + names[2], IdxKind::Images);
  auto lab_test = load_idx(data_dir + "/" + names[3], IdxKind::Labels);
  split.train.pixels = preprocess(raw_train, resolution, channels);
  split.train.labels = lab_train.to(torch::kInt64);
  split.test.pixels = preprocess(raw_test, resolution, channels);
  split.test.labels = lab_test.to(torch::kInt64);
  split.train.validate();
  split.test.validate();
  return split;
}

}  // namespace ghfeat
