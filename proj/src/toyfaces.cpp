#include "depthgan/toyfaces.hpp"

#include <algorithm>
#include <cmath>

namespace depthgan {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("face spec: " + msg);
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

enum Region : std::uint8_t { kBackground, kSkin, kEye, kBrow, kLips };

}  // namespace

void validate(const FaceSpec& s) {
  require(s.width >= 16 && s.width <= 512 && s.height >= 16 && s.height <= 512,
          "canvas must be between 16 and 512 pixels");
  require(s.ax >= 4.0 && s.ay >= 4.0, "head semi-axes must be at least 4 pixels");
  require(s.cx - s.ax >= 1.0 && s.cx + s.ax <= s.width - 1.0 && s.cy - s.ay >= 1.0 &&
              s.cy + s.ay <= s.height - 1.0,
          "head ellipse leaves the canvas");
  require(s.cz >= 0.4 && s.cz <= 1.0, "depth amplitude cz must be in [0.4, 1]");
  for (double c : {s.eye_carve, s.brow_carve, s.mouth_carve})
    require(c >= 0.0 && c <= 0.3, "carve depths must be in [0, 0.3]");
  require(s.eye_r >= 0.0, "eye radius must be non-negative");
  if (s.eye_r > 0.0) {
    require((s.eye_dx + s.eye_r) / s.ax <= 0.7, "eyes leave the face horizontally");
    require((std::abs(s.eye_y) + s.eye_r) / s.ay <= 0.7, "eyes leave the face vertically");
  }
  if (s.brow_carve > 0.0) {
    require(s.brow_len > 0.0 && s.brow_th > 0.0, "brow band needs positive extent");
    require((s.eye_dx + s.brow_len) / s.ax <= 0.8, "brows leave the face horizontally");
    require((std::abs(s.eye_y + s.brow_y) + s.brow_th + std::abs(s.brow_tilt)) / s.ay <= 0.85,
            "brows leave the face vertically");
    if (s.eye_r > 0.0)
      require(s.brow_y + s.brow_th <= -(s.eye_r + 0.5), "brows overlap the eyes");
  }
  if (s.mouth_carve > 0.0) {
    require(s.mouth_hw > 0.0 && s.mouth_halfth > 0.0, "mouth band needs positive extent");
    require(s.mouth_hw / s.ax <= 0.85, "mouth too wide for the face");
    require(s.mouth_y > 0.0, "mouth must sit below the face center");
    require((s.mouth_y + s.mouth_halfth + std::abs(s.mouth_curve)) / s.ay <= 0.88,
            "mouth leaves the face vertically");
  }
  require(s.ambient >= 0.0 && s.diffuse >= 0.0 && s.ambient + s.diffuse <= 1.0 + 1e-9,
          "ambient + diffuse must stay within [0, 1]");
  double ln = std::sqrt(s.light[0] * s.light[0] + s.light[1] * s.light[1] + s.light[2] * s.light[2]);
  require(ln > 1e-9 && s.light[2] > 0.0, "light must be a camera-facing direction");
  for (const double* a : {s.albedo_skin, s.albedo_lips, s.albedo_eye, s.albedo_brow})
    for (int c = 0; c < 3; ++c) require(a[c] >= 0.0 && a[c] <= 1.0, "albedo outside [0,1]");
  require(s.albedo_bg >= 0.0 && s.albedo_bg <= 1.0, "background albedo outside [0,1]");
}

NormalMap normals_from_depth(const DepthMap& depth) {
  if (depth.rank() != 3 || depth.dim(0) != 1)
    throw ShapeError("normals_from_depth expects [1,H,W], got " + depth.shape_str());
  int H = depth.dim(1), W = depth.dim(2);
  if (H < 2 || W < 2) throw ShapeError("normals_from_depth needs at least 2x2");
  NormalMap n({3, H, W});
  auto z = [&](int y, int x) { return static_cast<double>(depth.at(0, 0, y, x)); };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double zx = x == 0       ? z(y, 1) - z(y, 0)
                  : x == W - 1 ? z(y, W - 1) - z(y, W - 2)
                               : 0.5 * (z(y, x + 1) - z(y, x - 1));
      double zy = y == 0       ? z(1, x) - z(0, x)
                  : y == H - 1 ? z(H - 1, x) - z(H - 2, x)
                               : 0.5 * (z(y + 1, x) - z(y - 1, x));
      double norm = std::sqrt(zx * zx + zy * zy + 1.0);
      n.at(0, 0, y, x) = static_cast<float>(-zx / norm);
      n.at(0, 1, y, x) = static_cast<float>(-zy / norm);
      n.at(0, 2, y, x) = static_cast<float>(1.0 / norm);
    }
  return n;
}

RenderResult render_toy_face(const FaceSpec& s) {
  validate(s);
  int W = s.width, H = s.height;
  DepthMap depth({1, H, W});
  std::vector<Region> region(static_cast<std::size_t>(H) * W, kBackground);

  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double px = x + 0.5, py = y + 0.5;
      double u = (px - s.cx) / s.ax, v = (py - s.cy) / s.ay;
      double rr = u * u + v * v;
      std::size_t idx = static_cast<std::size_t>(y) * W + x;
      if (rr > 1.0) {
        depth.at(0, 0, y, x) = -1.0f;
        continue;
      }
      double z = s.cz * std::sqrt(1.0 - rr);
      Region reg = kSkin;
      if (s.eye_r > 0.0 && s.eye_carve > 0.0)
        for (int side : {-1, 1}) {
          double dx = px - (s.cx + side * s.eye_dx), dy = py - (s.cy + s.eye_y);
          double d2 = (dx * dx + dy * dy) / (s.eye_r * s.eye_r);
          if (d2 < 1.0) {
            z -= s.eye_carve * (1.0 - d2);
            reg = kEye;
          }
        }
      if (s.brow_carve > 0.0)
        for (int side : {-1, 1}) {
          double lam = (px - (s.cx + side * s.eye_dx)) / s.brow_len;
          if (std::abs(lam) > 1.0) continue;
          double yc = s.cy + s.eye_y + s.brow_y - s.brow_tilt * lam * side;
          double dy = std::abs(py - yc);
          if (dy < s.brow_th) {
            double w = (1.0 - (dy / s.brow_th) * (dy / s.brow_th)) * (1.0 - lam * lam * lam * lam);
            z -= s.brow_carve * w;
            reg = kBrow;
          }
        }
      if (s.mouth_carve > 0.0) {
        double t = (px - s.cx) / s.mouth_hw;
        if (std::abs(t) <= 1.0) {
          double yc = s.cy + s.mouth_y - s.mouth_curve * t * t;
          double dy = std::abs(py - yc);
          if (dy < s.mouth_halfth) {
            double w = (1.0 - (dy / s.mouth_halfth) * (dy / s.mouth_halfth)) * (1.0 - t * t * t * t);
            z -= s.mouth_carve * w;
            reg = kLips;
          }
        }
      }
      depth.at(0, 0, y, x) = static_cast<float>(z);
      region[idx] = reg;
    }

  NormalMap normals = normals_from_depth(depth);

  double ln = std::sqrt(s.light[0] * s.light[0] + s.light[1] * s.light[1] + s.light[2] * s.light[2]);
  double L[3] = {s.light[0] / ln, s.light[1] / ln, s.light[2] / ln};
  RgbImage rgb({3, H, W});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double* alb = nullptr;
      double bg[3] = {s.albedo_bg, s.albedo_bg, s.albedo_bg};
      switch (region[static_cast<std::size_t>(y) * W + x]) {
        case kBackground: alb = bg; break;
        case kSkin: alb = s.albedo_skin; break;
        case kEye: alb = s.albedo_eye; break;
        case kBrow: alb = s.albedo_brow; break;
        case kLips: alb = s.albedo_lips; break;
      }
      double ndl = 0.0;
      for (int c = 0; c < 3; ++c) ndl += static_cast<double>(normals.at(0, c, y, x)) * L[c];
      double shade = clamp01(s.ambient + s.diffuse * std::max(0.0, ndl));
      for (int c = 0; c < 3; ++c)
        rgb.at(0, c, y, x) = static_cast<float>(2.0 * clamp01(alb[c] * shade) - 1.0);
    }

  return {std::move(rgb), std::move(depth), std::move(normals)};
}

FaceSpec expression_to_spec(const ExpressionLabel& label, std::uint64_t seed, int width,
                            int height) {
  validate_label(label);
  Rng rng = Rng(seed).stream("facespec");
  FaceSpec s;
  s.width = width;
  s.height = height;
  s.seed = seed;
  double sx = width / 64.0, sy = height / 64.0;

  // Nuisance draws come first and in a fixed order for every class, so two
  // labels with the same seed share pose, lighting and albedo exactly.
  s.cx = width * 0.5 + rng.uniform(-2.0, 2.0) * sx;
  s.cy = height * 0.5 + rng.uniform(-2.0, 2.0) * sy;
  s.ax = 0.36 * width * rng.uniform(0.92, 1.08);
  s.ay = 0.40 * height * rng.uniform(0.90, 1.03);
  s.cz = rng.uniform(0.55, 0.8);
  s.eye_dx = 0.38 * s.ax * rng.uniform(0.9, 1.1);
  s.eye_y = -0.22 * s.ay * rng.uniform(0.9, 1.1);
  s.eye_r = 0.10 * s.ax * rng.uniform(0.85, 1.15);
  s.eye_carve = rng.uniform(0.10, 0.16);
  s.brow_len = 0.14 * s.ax * rng.uniform(0.9, 1.1);
  s.brow_th = std::max(0.9, 0.045 * s.ay) * rng.uniform(0.9, 1.1);
  s.brow_carve = rng.uniform(0.10, 0.16);
  s.brow_y = -(s.eye_r + s.brow_th + rng.uniform(1.0, 2.0) * sy);
  s.mouth_y = 0.42 * s.ay * rng.uniform(0.92, 1.08);
  s.mouth_hw = 0.30 * s.ax * rng.uniform(0.9, 1.1);
  s.mouth_carve = rng.uniform(0.12, 0.20);
  for (int c = 0; c < 3; ++c) s.albedo_skin[c] = clamp01(s.albedo_skin[c] * rng.uniform(0.92, 1.06));
  s.albedo_bg = 0.12 * rng.uniform(0.8, 1.2);
  s.light[0] = rng.uniform(-0.35, 0.35);
  s.light[1] = -0.35;
  s.light[2] = 1.0;
  s.ambient = rng.uniform(0.25, 0.35);
  s.diffuse = 1.0 - s.ambient - rng.uniform(0.0, 0.05);

  // Expression parameters: one uniform draw each, mapped into a class range.
  double u_curv = rng.uniform(), u_open = rng.uniform(), u_tilt = rng.uniform();
  int K = label.num_classes, idx = label.index;
  double curve_max = 0.16 * s.ay;
  double sign = (idx % 2 == 0) ? 1.0 : -1.0;
  s.mouth_curve = sign * (0.55 + 0.35 * u_curv) * curve_max;
  bool open = ((idx >> 1) & 1) != 0;
  s.mouth_halfth = (open ? 0.11 + 0.05 * u_open : 0.040 + 0.025 * u_open) * s.ay;
  double center = -1.0 + 2.0 * (idx + 0.5) / K;
  double tilt_norm = center + (2.0 * u_tilt - 1.0) * (0.3 / K);
  s.brow_tilt = tilt_norm * 0.09 * s.ay;

  validate(s);
  return s;
}

}  // namespace depthgan
