#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace depthgan {

struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB triples
};

struct Gray16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

void write_png_rgb8(const std::string& path, const Rgb8Image& img);
Rgb8Image read_png_rgb8(const std::string& path);

void write_png_gray16(const std::string& path, const Gray16Image& img);
Gray16Image read_png_gray16(const std::string& path);

}  // namespace depthgan
