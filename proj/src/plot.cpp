#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "depthgan/common.hpp"
#include "depthgan/plot.hpp"

namespace depthgan {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits, bit 4 = leftmost pixel.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
    {'b', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x1E}},
    {'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
    {'d', {0x01, 0x01, 0x0F, 0x11, 0x11, 0x11, 0x0F}},
    {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
    {'f', {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08}},
    {'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
    {'h', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x11}},
    {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
    {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
    {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
    {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x11}},
    {'n', {0x00, 0x00, 0x1E, 0x11, 0x11, 0x11, 0x11}},
    {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
    {'p', {0x00, 0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10}},
    {'q', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x01}},
    {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
    {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
    {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
    {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
    {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'w', {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A}},
    {'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
    {'y', {0x00, 0x11, 0x11, 0x0F, 0x01, 0x11, 0x0E}},
    {'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
};

const std::uint8_t* glyph_rows(char ch) {
  for (const Glyph& g : kFont)
    if (g.ch == ch) return g.rows;
  static const std::uint8_t box[7] = {0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};
  return box;
}

std::string fmt_num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

constexpr PlotColor kBlack{0, 0, 0};
constexpr PlotColor kWhite{255, 255, 255};
constexpr PlotColor kGrid{210, 210, 210};
constexpr PlotColor kPhase{150, 150, 150};

const PlotColor kPalette[] = {
    {214, 69, 65},  {31, 119, 180}, {44, 160, 44},   {255, 127, 14}, {148, 103, 189},
    {140, 86, 75},  {227, 119, 194}, {0, 140, 140},  {188, 189, 34}, {100, 100, 100},
};
constexpr int kPaletteSize = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Csv read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("plot: cannot open " + path);
  Csv out;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (is.peek() == std::char_traits<char>::eof()) break;
      throw IoError("plot: blank line in " + path);
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      out.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != out.header.size())
        throw IoError("plot: ragged row in " + path + ": " + line);
      out.rows.push_back(std::move(cells));
    }
  }
  if (first) throw IoError("plot: empty file " + path);
  return out;
}

double parse_num(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v))
      throw IoError("plot: bad numeric cell '" + s + "' in " + path);
    return v;
  } catch (const IoError&) {
    throw;
  } catch (const std::exception&) {
    throw IoError("plot: bad numeric cell '" + s + "' in " + path);
  }
}

struct AxisMap {
  double lo = 0, hi = 1;
  int p0 = 0, p1 = 1;  // pixel range (p0 maps lo)

  int px(double v) const {
    const double t = (v - lo) / (hi - lo);
    return p0 + static_cast<int>(std::lround(t * (p1 - p0)));
  }
};

void pad_range(double& lo, double& hi) {
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
    return;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

void draw_frame(Canvas& cv, int left, int top, int right, int bottom, const AxisMap& xm,
                const AxisMap& ym) {
  cv.fill_rect(left, top, right, bottom, kWhite);
  for (int i = 0; i <= 4; ++i) {
    const double ty = ym.lo + (ym.hi - ym.lo) * i / 4.0;
    const int y = ym.px(ty);
    cv.line(left, y, right, y, kGrid);
    const std::string lab = fmt_num(ty);
    cv.text(left - Canvas::text_width(lab) - 4, y - 3, lab, kBlack);
    const double tx = xm.lo + (xm.hi - xm.lo) * i / 4.0;
    const int x = xm.px(tx);
    cv.line(x, top, x, bottom, kGrid);
    const std::string xlab = fmt_num(tx);
    cv.text(x - Canvas::text_width(xlab) / 2, bottom + 5, xlab, kBlack);
  }
  cv.line(left, top, right, top, kBlack);
  cv.line(left, bottom, right, bottom, kBlack);
  cv.line(left, top, left, bottom, kBlack);
  cv.line(right, top, right, bottom, kBlack);
}

}  // namespace

Canvas::Canvas(int width, int height, PlotColor background) {
  check(width >= 1 && height >= 1, "canvas: size must be positive");
  img_.width = width;
  img_.height = height;
  img_.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < img_.pixels.size(); i += 3) {
    img_.pixels[i] = background.r;
    img_.pixels[i + 1] = background.g;
    img_.pixels[i + 2] = background.b;
  }
}

void Canvas::set(int x, int y, PlotColor c) {
  if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * img_.width + x) * 3;
  img_.pixels[i] = c.r;
  img_.pixels[i + 1] = c.g;
  img_.pixels[i + 2] = c.b;
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, PlotColor c) {
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) set(x, y, c);
}

void Canvas::line(int x0, int y0, int x1, int y1, PlotColor c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::text(int x, int y, const std::string& s, PlotColor c) {
  for (char ch : s) {
    const std::uint8_t* rows = glyph_rows(ch);
    for (int r = 0; r < 7; ++r)
      for (int b = 0; b < 5; ++b)
        if (rows[r] & (0x10 >> b)) set(x + b, y + r, c);
    x += 6;
  }
}

void plot_curves(const std::string& curves_csv, const std::string& out_png,
                 const std::vector<std::string>& columns) {
  const Csv csv = read_csv(curves_csv);
  if (csv.header.size() < 3 || csv.header[0] != "iter" || csv.header[1] != "phase")
    throw IoError("plot: " + curves_csv + " is not a curves file (header must start iter,phase)");
  if (csv.rows.empty()) throw IoError("plot: no data rows in " + curves_csv);

  std::vector<std::size_t> cols;
  if (columns.empty()) {
    for (std::size_t i = 2; i < csv.header.size(); ++i)
      if (csv.header[i] != "lr") cols.push_back(i);
  } else {
    for (const std::string& want : columns) {
      const auto it = std::find(csv.header.begin(), csv.header.end(), want);
      if (it == csv.header.end() || it - csv.header.begin() < 2)
        throw ValidationError("plot: unknown curves column '" + want + "'");
      cols.push_back(static_cast<std::size_t>(it - csv.header.begin()));
    }
  }
  check(!cols.empty(), "plot: no columns selected");

  const std::size_t n = csv.rows.size();
  std::vector<std::vector<double>> series(cols.size(), std::vector<double>(n));
  double ylo = 0, yhi = 0;
  bool any = false;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t s = 0; s < cols.size(); ++s) {
      const double v = parse_num(csv.rows[r][cols[s]], curves_csv);
      series[s][r] = v;
      if (!any) {
        ylo = yhi = v;
        any = true;
      } else {
        ylo = std::min(ylo, v);
        yhi = std::max(yhi, v);
      }
    }
  pad_range(ylo, yhi);

  const int W = 800, H = 480, left = 70, right = W - 15, top = 20, bottom = H - 35;
  Canvas cv(W, H, kWhite);
  AxisMap xm{0.0, static_cast<double>(n > 1 ? n - 1 : 1), left, right};
  AxisMap ym{ylo, yhi, bottom, top};  // y grows upward
  draw_frame(cv, left, top, right, bottom, xm, ym);

  // Vertical marker wherever the phase column switches.
  for (std::size_t r = 1; r < n; ++r)
    if (csv.rows[r][1] != csv.rows[r - 1][1]) {
      const int x = xm.px(static_cast<double>(r));
      cv.line(x, top, x, bottom, kPhase);
    }

  for (std::size_t s = 0; s < cols.size(); ++s) {
    const PlotColor c = kPalette[s % kPaletteSize];
    if (n == 1) {
      cv.set(xm.px(0.0), ym.px(series[s][0]), c);
      continue;
    }
    for (std::size_t r = 1; r < n; ++r)
      cv.line(xm.px(static_cast<double>(r - 1)), ym.px(series[s][r - 1]),
              xm.px(static_cast<double>(r)), ym.px(series[s][r]), c);
  }

  int ly = top + 6;
  for (std::size_t s = 0; s < cols.size(); ++s) {
    const PlotColor c = kPalette[s % kPaletteSize];
    cv.fill_rect(left + 8, ly, left + 20, ly + 6, c);
    cv.text(left + 25, ly, csv.header[cols[s]], kBlack);
    ly += 11;
  }
  cv.text(right - Canvas::text_width("row") - 2, bottom + 16, "row", kBlack);
  cv.save(out_png);
}

void plot_histogram(const std::string& hist_csv, const std::string& out_png) {
  const Csv csv = read_csv(hist_csv);
  if (csv.header != std::vector<std::string>{"bin_left", "bin_right", "count"})
    throw IoError("plot: " + hist_csv + " is not a histogram file");
  if (csv.rows.empty()) throw IoError("plot: no data rows in " + hist_csv);

  std::vector<double> lefts, rights;
  std::vector<double> counts;
  double cmax = 0;
  for (const auto& row : csv.rows) {
    const double l = parse_num(row[0], hist_csv);
    const double r = parse_num(row[1], hist_csv);
    const double c = parse_num(row[2], hist_csv);
    if (r <= l) throw IoError("plot: non-increasing bin edges in " + hist_csv);
    if (c < 0) throw IoError("plot: negative count in " + hist_csv);
    lefts.push_back(l);
    rights.push_back(r);
    counts.push_back(c);
    cmax = std::max(cmax, c);
  }

  const int W = 640, H = 400, left = 70, right = W - 15, top = 20, bottom = H - 35;
  Canvas cv(W, H, kWhite);
  double xlo = lefts.front(), xhi = rights.back();
  if (xlo == xhi) xhi = xlo + 1.0;
  double ylo = 0, yhi = cmax > 0 ? cmax * 1.05 : 1.0;
  AxisMap xm{xlo, xhi, left, right};
  AxisMap ym{ylo, yhi, bottom, top};
  draw_frame(cv, left, top, right, bottom, xm, ym);

  const PlotColor bar{100, 140, 200};
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int x0 = xm.px(lefts[i]), x1 = xm.px(rights[i]);
    const int y = ym.px(counts[i]);
    if (counts[i] > 0) {
      cv.fill_rect(x0, y, x1, bottom - 1, bar);
      cv.line(x0, y, x1, y, kBlack);
      cv.line(x0, y, x0, bottom - 1, kBlack);
      cv.line(x1, y, x1, bottom - 1, kBlack);
    }
  }
  cv.text(right - Canvas::text_width("count") - 2, top + 6, "count", kBlack);
  cv.save(out_png);
}

}  // namespace depthgan
