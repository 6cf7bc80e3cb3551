#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/pngio.hpp"

namespace depthgan {

struct PlotColor {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Minimal raster canvas backing the chart output: filled rectangles, 1px
// lines and a built-in 5x7 bitmap font (digits, lowercase, . , - + _ : /).
class Canvas {
 public:
  Canvas(int width, int height, PlotColor background);

  int width() const { return img_.width; }
  int height() const { return img_.height; }

  void set(int x, int y, PlotColor c);
  void fill_rect(int x0, int y0, int x1, int y1, PlotColor c);  // inclusive corners
  void line(int x0, int y0, int x1, int y1, PlotColor c);
  void text(int x, int y, const std::string& s, PlotColor c);  // (x,y) = top-left

  static int text_width(const std::string& s) { return static_cast<int>(s.size()) * 6; }
  static constexpr int text_height() { return 7; }

  void save(const std::string& path) const { write_png_rgb8(path, img_); }
  const Rgb8Image& image() const { return img_; }

 private:
  Rgb8Image img_;
};

// Line chart of selected curves.csv columns against the row order (training
// chronology); phase changes get a vertical marker. Empty `columns` plots
// every loss column (everything except iter, phase and lr). Throws IoError
// on unreadable or malformed CSV, ValidationError on unknown column names.
void plot_curves(const std::string& curves_csv, const std::string& out_png,
                 const std::vector<std::string>& columns = {});

// Bar chart of a histogram CSV with header bin_left,bin_right,count.
void plot_histogram(const std::string& hist_csv, const std::string& out_png);

}  // namespace depthgan
