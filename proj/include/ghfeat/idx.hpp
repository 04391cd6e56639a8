#pragma once

#include <torch/torch.h>

#include <string>

#include "ghfeat/common.hpp"

namespace ghfeat {

enum class IdxKind { Images, Labels };

// IDX, bit-exact: 4-byte big-endian magic (0x00000803 for images,
// 0x00000801 for labels), big-endian dimension sizes, then row-major
// unsigned bytes.
inline constexpr uint32_t kIdxImagesMagic = 2051;
inline constexpr uint32_t kIdxLabelsMagic = 2049;

// Reads an IDX file. Images come back as uint8 [N, rows, cols], labels as
// uint8 [N]. Throws FormatError on a wrong magic for the requested kind and
// on a payload shorter than the header promises.
torch::Tensor load_idx(const std::string& path, IdxKind kind);

// Writes tensors back out in the same format (uint8 input required).
void save_idx(const std::string& path, const torch::Tensor& data, IdxKind kind);

}  // namespace ghfeat
