#include "fixtures.hpp"

#include <png.h>

#include <cstdio>
#include <stdexcept>
#include <string>

namespace metagree::testing {

namespace fs = std::filesystem;

void write_gray_png(const fs::path& path, const std::vector<unsigned char>& pixels,
                    std::size_t width, std::size_t height) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for write: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw std::runtime_error("png write failed: " + path.string());
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels.data() + y * width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

void make_omniglot_tree(const fs::path& root, std::size_t alphabets,
                        std::size_t chars_per_alphabet, std::size_t images_per_char,
                        std::size_t side) {
  fs::create_directories(root);
  std::size_t class_index = 0;
  for (std::size_t a = 0; a < alphabets; ++a) {
    for (std::size_t c = 0; c < chars_per_alphabet; ++c, ++class_index) {
      const fs::path dir =
          root / ("alphabet" + std::to_string(a)) / ("char" + std::to_string(c));
      fs::create_directories(dir);
      for (std::size_t i = 0; i < images_per_char; ++i) {
        std::vector<unsigned char> pixels(side * side, 255);
        // Distinct stroke layout per (class, image).
        pixels[(class_index * 7 + i) % (side * side)] = 0;
        pixels[(class_index * 13 + i * 3 + 1) % (side * side)] = 0;
        char name[32];
        std::snprintf(name, sizeof(name), "img%02zu.png", i);
        write_gray_png(dir / name, pixels, side, side);
      }
    }
  }
}

}  // namespace metagree::testing
