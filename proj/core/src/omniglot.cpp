#include <png.h>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <vector>

#include "metagree/tasks.hpp"

namespace metagree {

namespace fs = std::filesystem;

namespace {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<unsigned char> pixels;
};

class FileHandle {
 public:
  explicit FileHandle(const fs::path& p) : f_(std::fopen(p.c_str(), "rb")) {}
  ~FileHandle() {
    if (f_) std::fclose(f_);
  }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;
  FILE* get() const { return f_; }

 private:
  FILE* f_;
};

bool decode_png_gray(const fs::path& path, GrayImage& out) {
  FileHandle file(path);
  if (!file.get()) return false;

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8) return false;
  if (png_sig_cmp(header, 0, 8) != 0) return false;

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
      color_type == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  if (out.width == 0 || out.height == 0 ||
      png_get_rowbytes(png, info) != out.width) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  out.pixels.assign(out.width * out.height, 0);
  row_ptrs.resize(out.height);
  for (std::size_t y = 0; y < out.height; ++y)
    row_ptrs[y] = out.pixels.data() + y * out.width;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

// Bilinear resample, then invert so strokes (dark in the source) end up
// near 1 and background near 0.
std::vector<double> downsample_invert(const GrayImage& img, std::size_t side) {
  std::vector<double> out(side * side);
  const double sx = static_cast<double>(img.width) / static_cast<double>(side);
  const double sy = static_cast<double>(img.height) / static_cast<double>(side);
  for (std::size_t oy = 0; oy < side; ++oy) {
    const double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    const double cy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const std::size_t y0 = static_cast<std::size_t>(cy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = cy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < side; ++ox) {
      const double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      const double cx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const std::size_t x0 = static_cast<std::size_t>(cx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = cx - static_cast<double>(x0);
      const double top = (1.0 - wx) * img.pixels[y0 * img.width + x0] +
                         wx * img.pixels[y0 * img.width + x1];
      const double bot = (1.0 - wx) * img.pixels[y1 * img.width + x0] +
                         wx * img.pixels[y1 * img.width + x1];
      const double v = (1.0 - wy) * top + wy * bot;
      out[oy * side + ox] = std::clamp(1.0 - v / 255.0, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool dirs_only) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (dirs_only ? e.is_directory() : e.is_regular_file()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

OmniglotStore load_omniglot(const fs::path& root, std::size_t image_side) {
  if (image_side == 0) throw ShapeError("load_omniglot: image_side must be >= 1");
  if (!fs::is_directory(root)) {
    throw ConfigError("load_omniglot: not a directory: " + root.string());
  }

  OmniglotStore store;
  store.image_side = image_side;
  for (const fs::path& alphabet : sorted_entries(root, /*dirs_only=*/true)) {
    for (const fs::path& character : sorted_entries(alphabet, /*dirs_only=*/true)) {
      std::vector<std::vector<double>> imgs;
      for (const fs::path& file : sorted_entries(character, /*dirs_only=*/false)) {
        if (file.extension() != ".png") continue;
        GrayImage img;
        if (!decode_png_gray(file, img)) {
          std::cerr << "warning: skipping unreadable image " << file.string() << "\n";
          ++store.skipped_files;
          continue;
        }
        imgs.push_back(downsample_invert(img, image_side));
      }
      if (!imgs.empty()) {
        store.class_ids.push_back(alphabet.filename().string() + "/" +
                                  character.filename().string());
        store.images.push_back(std::move(imgs));
      }
    }
  }
  if (store.class_ids.empty()) {
    throw ConfigError("load_omniglot: no readable images under " + root.string());
  }
  return store;
}

}  // namespace metagree
