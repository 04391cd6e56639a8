#include "ghfeat/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace ghfeat {

const torch::Tensor& Checkpoint::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw FormatError("checkpoint tensor missing: " + name);
  return it->second;
}

void Checkpoint::put_module(const std::string& prefix, const torch::nn::Module& m) {
  for (const auto& p : m.named_parameters(/*recurse=*/true))
    put(prefix + "." + p.key(), p.value().detach().cpu());
  for (const auto& b : m.named_buffers(/*recurse=*/true))
    put(prefix + "." + b.key(), b.value().detach().cpu());
}

void Checkpoint::load_module(const std::string& prefix, torch::nn::Module& m) const {
  torch::NoGradGuard no_grad;
  auto copy_into = [&](const std::string& key, torch::Tensor dst) {
    const torch::Tensor& src = get(prefix + "." + key);
    if (!src.sizes().equals(dst.sizes()))
      throw ShapeError("checkpoint shape mismatch for " + prefix + "." + key);
    dst.copy_(src);
  };
  for (const auto& p : m.named_parameters(/*recurse=*/true)) copy_into(p.key(), p.value());
  for (const auto& b : m.named_buffers(/*recurse=*/true)) copy_into(b.key(), b.value());
}

void Checkpoint::save(const std::string& dir) const {
  fs::create_directories(dir);
  // Atomic-ish: write to temp names, then rename.
  const std::string blob_tmp = dir + "/blob.bin.tmp";
  const std::string manifest_tmp = dir + "/manifest.json.tmp";

  json entries = json::array();
  {
    std::ofstream blob(blob_tmp, std::ios::binary);
    if (!blob) throw FormatError("cannot write " + blob_tmp);
    uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
      auto flat = t.detach().to(torch::kFloat32).contiguous().cpu();
      const uint64_t nbytes = static_cast<uint64_t>(flat.numel()) * 4;
      blob.write(reinterpret_cast<const char*>(flat.data_ptr<float>()),
                 static_cast<std::streamsize>(nbytes));
      json e;
      e["name"] = name;
      e["dtype"] = "f32le";
      e["shape"] = std::vector<int64_t>(t.sizes().begin(), t.sizes().end());
      e["offset"] = offset;
      e["nbytes"] = nbytes;
      entries.push_back(e);
      offset += nbytes;
    }
    if (!blob) throw FormatError("short write to " + blob_tmp);
  }

  json manifest;
  manifest["format_version"] = 1;
  manifest["kind"] = kind;
  manifest["meta"] = meta;
  manifest["tensors"] = entries;
  {
    std::ofstream out(manifest_tmp);
    out << manifest.dump(2) << "\n";
  }
  fs::rename(blob_tmp, dir + "/blob.bin");
  fs::rename(manifest_tmp, dir + "/manifest.json");
}

Checkpoint Checkpoint::load(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DependencyError("checkpoint not found: " + manifest_path);
  json manifest = json::parse(in, nullptr, /*allow_exceptions=*/true);
  if (manifest.value("format_version", 0) != 1)
    throw FormatError(manifest_path + ": unsupported format_version");

  Checkpoint ck;
  ck.kind = manifest.value("kind", "");
  if (manifest.contains("meta"))
    for (auto& [k, v] : manifest["meta"].items()) ck.meta[k] = v.get<std::string>();

  std::ifstream blob(dir + "/blob.bin", std::ios::binary);
  if (!blob) throw FormatError(dir + "/blob.bin missing");
  for (const auto& e : manifest["tensors"]) {
    const std::string name = e["name"].get<std::string>();
    if (e["dtype"].get<std::string>() != "f32le")
      throw FormatError("unsupported dtype for tensor " + name);
    const auto shape = e["shape"].get<std::vector<int64_t>>();
    const uint64_t offset = e["offset"].get<uint64_t>();
    const uint64_t nbytes = e["nbytes"].get<uint64_t>();
    auto t = torch::empty(shape, torch::kFloat32);
    if (static_cast<uint64_t>(t.numel()) * 4 != nbytes)
      throw FormatError("manifest nbytes mismatch for tensor " + name);
    blob.seekg(static_cast<std::streamoff>(offset));
    blob.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(nbytes));
    if (blob.gcount() != static_cast<std::streamsize>(nbytes))
      throw FormatError("blob truncated while reading tensor " + name);
    ck.tensors[name] = t;
  }
  return ck;
}

uint64_t Checkpoint::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : tensors) {
    h = fnv1a64(name.data(), name.size(), h);
    auto flat = t.detach().to(torch::kFloat32).contiguous().cpu();
    h = fnv1a64(flat.data_ptr<float>(), static_cast<size_t>(flat.numel()) * 4, h);
  }
  return h;
}

}  // namespace ghfeat
