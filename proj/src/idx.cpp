#include "ghfeat/idx.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

namespace ghfeat {

namespace {

uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError(path + ": truncated IDX header");
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

void write_be32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

torch::Tensor load_idx(const std::string& path, IdxKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path + ": file not found");

  const uint32_t magic = read_be32(in, path);
  const uint32_t expected = (kind == IdxKind::Images) ? kIdxImagesMagic : kIdxLabelsMagic;
  if (magic != expected)
    throw FormatError(path + ": wrong IDX magic " + std::to_string(magic) + ", expected " +
                      std::to_string(expected));

  std::vector<int64_t> shape;
  shape.push_back(read_be32(in, path));
  if (kind == IdxKind::Images) {
    shape.push_back(read_be32(in, path));
    shape.push_back(read_be32(in, path));
  }

  int64_t numel = 1;
  for (int64_t d : shape) numel *= d;

  auto data = torch::empty(shape, torch::kUInt8);
  in.read(reinterpret_cast<char*>(data.data_ptr<uint8_t>()), numel);
  if (in.gcount() != numel)
    throw FormatError(path + ": truncated IDX payload, expected " + std::to_string(numel) +
                      " bytes, got " + std::to_string(in.gcount()));
  return data;
}

void save_idx(const std::string& path, const torch::Tensor& data, IdxKind kind) {
  if (data.scalar_type() != torch::kUInt8) throw FormatError("save_idx expects uint8 data");
  const int expected_dim = (kind == IdxKind::Images) ? 3 : 1;
  if (data.dim() != expected_dim)
    throw ShapeError("save_idx: expected " + std::to_string(expected_dim) + "-d tensor, got " +
                     std::to_string(data.dim()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path + ": cannot open for writing");
  write_be32(out, kind == IdxKind::Images ? kIdxImagesMagic : kIdxLabelsMagic);
  for (int64_t d : data.sizes()) write_be32(out, static_cast<uint32_t>(d));
  auto contig = data.contiguous();
  out.write(reinterpret_cast<const char*>(contig.data_ptr<uint8_t>()), contig.numel());
  if (!out) throw FormatError(path + ": short write");
}

}  // namespace ghfeat
