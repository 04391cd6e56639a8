#include "ghfeat/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

namespace ghfeat {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};

}  // namespace

torch::Tensor read_png(const std::string& path) {
  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: failed to decode " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("png: unsupported channel count in " + path);
  }

  auto out = channels == 1
                 ? torch::empty({height, width}, torch::kUInt8)
                 : torch::empty({height, width, 3}, torch::kUInt8);
  std::vector<png_bytep> rows(height);
  auto* base = out.data_ptr<uint8_t>();
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = base + y * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::string& path, const torch::Tensor& image) {
  if (image.scalar_type() != torch::kUInt8) throw FormatError("write_png expects uint8");
  const bool gray = image.dim() == 2;
  if (!gray && (image.dim() != 3 || image.size(2) != 3))
    throw ShapeError("write_png expects [H, W] or [H, W, 3]");

  auto img = image.contiguous();
  const int64_t height = img.size(0);
  const int64_t width = img.size(1);
  const int channels = gray ? 1 : 3;

  std::unique_ptr<FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw FormatError("png: cannot open for writing " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("png: failed to encode " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               gray ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  auto* base = img.data_ptr<uint8_t>();
  for (int64_t y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(base + y * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

torch::Tensor to_byte_image(const torch::Tensor& img) {
  auto x = img;
  if (x.dim() == 4) x = x.squeeze(0);
  if (x.dim() != 3) throw ShapeError("to_byte_image expects [C, H, W]");
  auto bytes = ((x.clamp(-1, 1) + 1.0f) * (255.0f / 2.0f)).round().to(torch::kUInt8);
  if (bytes.size(0) == 1) return bytes.squeeze(0);           // [H, W]
  return bytes.permute({1, 2, 0}).contiguous();              // [H, W, 3]
}

torch::Tensor make_grid(const torch::Tensor& batch, int64_t cols) {
  if (batch.dim() != 4) throw ShapeError("make_grid expects [N, C, H, W]");
  const int64_t n = batch.size(0);
  const int64_t c = batch.size(1);
  const int64_t h = batch.size(2);
  const int64_t w = batch.size(3);
  cols = std::max<int64_t>(1, std::min(cols, n));
  const int64_t rows = (n + cols - 1) / cols;
  const int64_t pad = 2;
  auto canvas = torch::full({c, rows * (h + pad) - pad, cols * (w + pad) - pad}, -1.0f);
  for (int64_t i = 0; i < n; ++i) {
    const int64_t r = i / cols;
    const int64_t col = i % cols;
    canvas.index_put_({torch::indexing::Slice(),
                       torch::indexing::Slice(r * (h + pad), r * (h + pad) + h),
                       torch::indexing::Slice(col * (w + pad), col * (w + pad) + w)},
                      batch[i]);
  }
  return to_byte_image(canvas);
}

torch::Tensor from_byte_image(const torch::Tensor& bytes, int64_t channels) {
  torch::Tensor x;
  if (bytes.dim() == 2) {
    x = bytes.unsqueeze(0);  // [1, H, W]
  } else if (bytes.dim() == 3 && bytes.size(2) == 3) {
    x = bytes.permute({2, 0, 1});
  } else {
    throw ShapeError("from_byte_image expects [H, W] or [H, W, 3]");
  }
  if (channels == 1 && x.size(0) == 3) x = x.to(torch::kFloat32).mean(0, /*keepdim=*/true);
  if (channels == 3 && x.size(0) == 1) x = x.repeat({3, 1, 1});
  auto f = x.to(torch::kFloat32) * (2.0f / 255.0f) - 1.0f;
  return f.unsqueeze(0).contiguous();
}

}  // namespace ghfeat
