#pragma once

#include <torch/torch.h>

#include <map>
#include <string>

#include "ghfeat/common.hpp"

namespace ghfeat {

// Checkpoint archive: a directory holding manifest.json plus one flat
// binary blob of 32-bit IEEE-754 little-endian values. The manifest lists
// every tensor (name, shape, dtype, byte offset, byte length) together with
// a `kind` tag and free-form metadata, so any language can read it back.
struct Checkpoint {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::map<std::string, torch::Tensor> tensors;

  void put(const std::string& name, const torch::Tensor& t) { tensors[name] = t; }
  const torch::Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  // Collects parameters and buffers of a module under a name prefix.
  void put_module(const std::string& prefix, const torch::nn::Module& m);
  // Copies stored values back into the module (strict: every parameter and
  // buffer must be present with a matching shape).
  void load_module(const std::string& prefix, torch::nn::Module& m) const;

  void save(const std::string& dir) const;
  static Checkpoint load(const std::string& dir);

  // Content hash over the blob bytes (manifest order), for frozen-weights
  // checks and run manifests.
  uint64_t content_hash() const;
};

}  // namespace ghfeat
