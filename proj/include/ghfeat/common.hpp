#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ghfeat {

inline constexpr const char* kVersion = "ghfeat-0.1.0";

// Error taxonomy. Everything user-facing derives from Error so the CLI can
// map failures to categorized exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : Error {
  using Error::Error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct BoundsError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DependencyError : Error {
  using Error::Error;
};
struct TrainingFault : Error {
  using Error::Error;
};
struct SolverFault : Error {
  using Error::Error;
};

// Axis-aligned pixel rectangle (x right, y down).
struct Rect {
  int64_t x = 0;
  int64_t y = 0;
  int64_t w = 0;
  int64_t h = 0;
  bool empty() const { return w <= 0 || h <= 0; }
};

// splitmix64; used to expand the global seed into per-module seeds so any
// stage can be re-run in isolation with the same stream.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives a per-module seed from the experiment-wide seed and a stable tag.
inline uint64_t derive_seed(uint64_t global_seed, const std::string& module_tag) {
  return splitmix64(global_seed ^ fnv1a64(module_tag.data(), module_tag.size()));
}

}  // namespace ghfeat
