#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "depthgan/toyfaces.hpp"

using namespace depthgan;

namespace {

// Head-only spec: no eyes, brows or mouth, so the surface is exactly the
// analytic ellipsoid cap.
FaceSpec plain_spec() {
  FaceSpec s;
  s.width = 64;
  s.height = 64;
  s.cx = 32.5;
  s.cy = 32.5;
  s.ax = 20.0;
  s.ay = 22.0;
  s.cz = 0.7;
  s.eye_r = 0.0;
  s.eye_carve = 0.0;
  s.brow_carve = 0.0;
  s.mouth_carve = 0.0;
  return s;
}

double angle_deg(double ax, double ay, double az, double bx, double by, double bz) {
  double dot = ax * bx + ay * by + az * bz;
  double na = std::sqrt(ax * ax + ay * ay + az * az);
  double nb = std::sqrt(bx * bx + by * by + bz * bz);
  double c = std::min(1.0, std::max(-1.0, dot / (na * nb)));
  return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace

TEST_CASE("featureless head matches the analytic ellipsoid") {
  FaceSpec s = plain_spec();
  RenderResult r = render_toy_face(s);
  // center pixel (32,32) has its center exactly at (cx, cy)
  CHECK(r.depth.at(0, 0, 32, 32) == doctest::Approx(s.cz).epsilon(1e-6));
  int interior = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      double u = (x + 0.5 - s.cx) / s.ax, v = (y + 0.5 - s.cy) / s.ay;
      double rr = u * u + v * v;
      double got = r.depth.at(0, 0, y, x);
      if (rr > 1.0) {
        CHECK(got == -1.0f);
      } else {
        ++interior;
        CHECK(std::abs(got - s.cz * std::sqrt(1.0 - rr)) < 1e-6);
      }
    }
  CHECK(interior > 800);
}

TEST_CASE("rendering is deterministic") {
  FaceSpec s = expression_to_spec({2, 4}, 99);
  RenderResult a = render_toy_face(s);
  RenderResult b = render_toy_face(s);
  CHECK(a.rgb.v == b.rgb.v);
  CHECK(a.depth.v == b.depth.v);
  CHECK(a.normals.v == b.normals.v);
}

TEST_CASE("normals of a constant depth map point at the camera") {
  DepthMap d({1, 5, 7}, -0.3f);
  NormalMap n = normals_from_depth(d);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) {
      CHECK(n.at(0, 0, y, x) == 0.0f);
      CHECK(n.at(0, 1, y, x) == 0.0f);
      CHECK(n.at(0, 2, y, x) == 1.0f);
    }
}

TEST_CASE("normals of a unit ramp") {
  DepthMap d({1, 4, 6});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) d.at(0, 0, y, x) = static_cast<float>(x);
  NormalMap n = normals_from_depth(d);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) {
      CHECK(n.at(0, 0, y, x) == doctest::Approx(-0.70710678).epsilon(1e-6));
      CHECK(n.at(0, 1, y, x) == doctest::Approx(0.0));
      CHECK(n.at(0, 2, y, x) == doctest::Approx(0.70710678).epsilon(1e-6));
    }
}

TEST_CASE("rendered normals agree with analytic ellipsoid normals") {
  FaceSpec s = plain_spec();
  RenderResult r = render_toy_face(s);
  double sum = 0.0, worst = 0.0;
  int count = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      double u = (x + 0.5 - s.cx) / s.ax, v = (y + 0.5 - s.cy) / s.ay;
      double rr = u * u + v * v;
      if (rr > 0.6) continue;
      double root = std::sqrt(1.0 - rr);
      double zx = -s.cz * u / (s.ax * root);  // dz per pixel step in x
      double zy = -s.cz * v / (s.ay * root);
      double a = angle_deg(-zx, -zy, 1.0, r.normals.at(0, 0, y, x), r.normals.at(0, 1, y, x),
                           r.normals.at(0, 2, y, x));
      sum += a;
      worst = std::max(worst, a);
      ++count;
    }
  CHECK(count > 500);
  CHECK(sum / count < 1.0);
  CHECK(worst < 3.0);
}

TEST_CASE("rendered maps satisfy the shared invariants") {
  for (int cls = 0; cls < 4; ++cls) {
    FaceSpec s = expression_to_spec({cls, 4}, 1234 + cls);
    RenderResult r = render_toy_face(s);
    validate_rgb(r.rgb, "render");
    validate_depth(r.depth, "render");
    validate_normals(r.normals, "render");
    // background stays at the -1 plane
    CHECK(r.depth.at(0, 0, 0, 0) == -1.0f);
    CHECK(r.depth.at(0, 0, 63, 63) == -1.0f);
  }
}

TEST_CASE("expression_to_spec is deterministic and class-sensitive") {
  FaceSpec a = expression_to_spec({1, 4}, 42);
  FaceSpec b = expression_to_spec({1, 4}, 42);
  CHECK(a.mouth_curve == b.mouth_curve);
  CHECK(a.brow_tilt == b.brow_tilt);
  CHECK(a.cx == b.cx);
  CHECK(a.cz == b.cz);

  // same seed, different label: nuisance identical, expression different
  FaceSpec c = expression_to_spec({2, 4}, 42);
  CHECK(c.cx == a.cx);
  CHECK(c.cy == a.cy);
  CHECK(c.cz == a.cz);
  CHECK(c.ambient == a.ambient);
  CHECK(c.albedo_bg == a.albedo_bg);
  CHECK(c.brow_tilt != a.brow_tilt);
  bool mouth_differs = c.mouth_curve != a.mouth_curve || c.mouth_halfth != a.mouth_halfth;
  CHECK(mouth_differs);

  FaceSpec d = expression_to_spec({1, 4}, 43);
  CHECK(d.cx != a.cx);
}

TEST_CASE("expression encoding follows the class bits") {
  for (std::uint64_t seed : {5u, 6u, 7u}) {
    // bit 0: mouth curvature sign (class 0 smiles)
    CHECK(expression_to_spec({0, 4}, seed).mouth_curve > 0.0);
    CHECK(expression_to_spec({1, 4}, seed).mouth_curve < 0.0);
    // bit 1: mouth opening level
    CHECK(expression_to_spec({2, 4}, seed).mouth_halfth >
          expression_to_spec({0, 4}, seed).mouth_halfth * 1.5);
    // tilt ladder is strictly increasing with class index
    double prev = -1e9;
    for (int cls = 0; cls < 4; ++cls) {
      double t = expression_to_spec({cls, 4}, seed).brow_tilt /
                 expression_to_spec({cls, 4}, seed).ay;
      CHECK(t > prev);
      prev = t;
    }
  }
}

TEST_CASE("invalid specs and labels are rejected") {
  CHECK_THROWS_AS(expression_to_spec({4, 4}, 0), ValidationError);
  CHECK_THROWS_AS(expression_to_spec({0, 1}, 0), ValidationError);
  FaceSpec s = plain_spec();
  s.cx = 60.0;  // pushes the ellipse off the canvas
  CHECK_THROWS_AS(render_toy_face(s), ValidationError);
  FaceSpec s2 = plain_spec();
  s2.mouth_carve = 0.5;
  CHECK_THROWS_AS(render_toy_face(s2), ValidationError);
}

TEST_CASE("classes are linearly separable from expression parameters") {
  const int K = 4, per_class = 250, D = 3;
  std::vector<std::array<double, D>> xs;
  std::vector<int> ys;
  for (int cls = 0; cls < K; ++cls)
    for (int j = 0; j < per_class; ++j) {
      std::uint64_t seed = Rng(404).stream("sep", static_cast<std::uint64_t>(cls * per_class + j)).seed();
      FaceSpec s = expression_to_spec({cls, K}, seed);
      xs.push_back({s.mouth_curve / s.ay, s.mouth_halfth / s.ay, s.brow_tilt / s.ay});
      ys.push_back(cls);
    }
  // multiclass perceptron (argmax of per-class affine scores)
  std::array<std::array<double, D + 1>, K> w{};
  auto predict = [&](const std::array<double, D>& x) {
    int best = 0;
    double bs = -1e300;
    for (int k = 0; k < K; ++k) {
      double sc = w[static_cast<std::size_t>(k)][D];
      for (int d = 0; d < D; ++d) sc += w[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
      if (sc > bs) {
        bs = sc;
        best = k;
      }
    }
    return best;
  };
  int errs = -1;
  for (int epoch = 0; epoch < 3000 && errs != 0; ++epoch) {
    errs = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      int p = predict(xs[i]);
      if (p == ys[i]) continue;
      ++errs;
      for (int d = 0; d < D; ++d) {
        w[static_cast<std::size_t>(ys[i])][static_cast<std::size_t>(d)] += xs[i][static_cast<std::size_t>(d)];
        w[static_cast<std::size_t>(p)][static_cast<std::size_t>(d)] -= xs[i][static_cast<std::size_t>(d)];
      }
      w[static_cast<std::size_t>(ys[i])][D] += 1.0;
      w[static_cast<std::size_t>(p)][D] -= 1.0;
    }
  }
  CHECK(errs == 0);  // converged, i.e. 100% on all 1000 specs
}

TEST_CASE("labels are recoverable from depth statistics of the mouth region") {
  const int K = 4, per_class = 100;
  const int H = 64, W = 64;
  constexpr int kF = 2;
  auto features = [&](const DepthMap& d) {
    // Carve residual (9x9 box blur minus depth) isolates the mouth dent from
    // head-shape nuisance. Weighted moments of the residual are invariant to
    // where exactly the mouth sits: total mass and vertical spread encode the
    // opening, corner-vs-center height encodes the curvature sign.
    int y0 = static_cast<int>(0.48 * H), y1 = static_cast<int>(0.86 * H);
    int x0 = static_cast<int>(0.28 * W), x1 = static_cast<int>(0.72 * W);
    std::vector<double> res;
    std::vector<int> rx, ry;
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        double s = 0.0;
        int n = 0;
        bool interior = true;  // skip pixels whose kernel touches the rim
        for (int dy = -4; dy <= 4 && interior; ++dy)
          for (int dx = -4; dx <= 4; ++dx) {
            int yy = std::min(H - 1, std::max(0, y + dy));
            int xx = std::min(W - 1, std::max(0, x + dx));
            float z = d.at(0, 0, yy, xx);
            if (z <= -0.999f) {
              interior = false;
              break;
            }
            s += z;
            ++n;
          }
        if (!interior) continue;
        double r = s / n - d.at(0, 0, y, x) - 0.02;
        if (r > 0.0) {
          res.push_back(r);
          rx.push_back(x);
          ry.push_back(y);
        }
      }
    std::array<double, kF> f{};
    double mass = 0.0, xbar = 0.0, ybar = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      mass += res[i];
      xbar += res[i] * rx[i];
      ybar += res[i] * ry[i];
    }
    if (mass < 1e-9) return f;
    xbar /= mass;
    ybar /= mass;
    double vy = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      vy += res[i] * (ry[i] - ybar) * (ry[i] - ybar);
      sx += res[i] * (rx[i] - xbar) * (rx[i] - xbar);
    }
    vy = std::sqrt(vy / mass);
    sx = std::sqrt(std::max(1e-9, sx / mass));
    double ym = 0.0, mm = 0.0, yc = 0.0, mc = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      if (std::abs(rx[i] - xbar) <= 0.6 * sx) {
        ym += res[i] * ry[i];
        mm += res[i];
      } else {
        yc += res[i] * ry[i];
        mc += res[i];
      }
    }
    double curv = (mm > 1e-9 && mc > 1e-9) ? ym / mm - yc / mc : 0.0;
    f = {vy, curv};
    return f;
  };
  std::vector<std::array<double, kF>> train, test;
  std::vector<int> train_y, test_y;
  for (int cls = 0; cls < K; ++cls)
    for (int j = 0; j < per_class; ++j) {
      std::uint64_t seed = Rng(505).stream("mouth", static_cast<std::uint64_t>(cls * per_class + j)).seed();
      RenderResult r = render_toy_face(expression_to_spec({cls, K}, seed, W, H));
      if (j < per_class / 2) {
        train.push_back(features(r.depth));
        train_y.push_back(cls);
      } else {
        test.push_back(features(r.depth));
        test_y.push_back(cls);
      }
    }
  // z-score each dimension with train statistics
  std::array<double, kF> mu{}, sd{};
  for (const auto& f : train)
    for (int d = 0; d < kF; ++d) mu[static_cast<std::size_t>(d)] += f[static_cast<std::size_t>(d)];
  for (int d = 0; d < kF; ++d) mu[static_cast<std::size_t>(d)] /= static_cast<double>(train.size());
  for (const auto& f : train)
    for (int d = 0; d < kF; ++d) {
      double c = f[static_cast<std::size_t>(d)] - mu[static_cast<std::size_t>(d)];
      sd[static_cast<std::size_t>(d)] += c * c;
    }
  for (int d = 0; d < kF; ++d)
    sd[static_cast<std::size_t>(d)] = std::max(1e-9, std::sqrt(sd[static_cast<std::size_t>(d)] / static_cast<double>(train.size())));
  auto zscore = [&](std::array<double, kF>& f) {
    for (int d = 0; d < kF; ++d)
      f[static_cast<std::size_t>(d)] = (f[static_cast<std::size_t>(d)] - mu[static_cast<std::size_t>(d)]) / sd[static_cast<std::size_t>(d)];
  };
  for (auto& f : train) zscore(f);
  for (auto& f : test) zscore(f);

  std::array<std::array<double, kF>, K> centroid{};
  std::array<int, K> counts{};
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (int d = 0; d < kF; ++d) centroid[static_cast<std::size_t>(train_y[i])][static_cast<std::size_t>(d)] += train[i][static_cast<std::size_t>(d)];
    counts[static_cast<std::size_t>(train_y[i])]++;
  }
  for (int k = 0; k < K; ++k)
    for (int d = 0; d < kF; ++d) centroid[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)] /= counts[static_cast<std::size_t>(k)];
  int hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    int best = 0;
    double bd = 1e300;
    for (int k = 0; k < K; ++k) {
      double dist = 0.0;
      for (int d = 0; d < kF; ++d) {
        double diff = test[i][static_cast<std::size_t>(d)] - centroid[static_cast<std::size_t>(k)][static_cast<std::size_t>(d)];
        dist += diff * diff;
      }
      if (dist < bd) {
        bd = dist;
        best = k;
      }
    }
    if (best == test_y[i]) ++hits;
  }
  double acc = static_cast<double>(hits) / test.size();
  INFO("mouth-window depth accuracy: " << acc);
  CHECK(acc > 0.9);
}
