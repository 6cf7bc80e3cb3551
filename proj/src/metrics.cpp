#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "depthgan/metrics.hpp"

namespace depthgan {

Tensor<float> shift_to_unit(const Tensor<float>& t) {
  Tensor<float> out = t;
  for (auto& v : out.v) v = 0.5f * (v + 1.0f);
  return out;
}

double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak) {
  require_same_shape(a, b, "psnr");
  check(peak > 0, "psnr: peak must be positive");
  check(a.numel() > 0, "psnr: empty image");
  double se = 0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.numel());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor<float>& a, const Tensor<float>& b, int window, double L, double sigma) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 3) throw ShapeError("ssim expects [C,H,W], got " + a.shape_str());
  check(window >= 3 && window % 2 == 1, "ssim: window must be odd and >= 3");
  check(L > 0 && sigma > 0, "ssim: L and sigma must be positive");
  const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
  if (H < window || W < window)
    throw ShapeError("ssim: image " + a.shape_str() + " smaller than window " +
                     std::to_string(window));

  std::vector<double> g(static_cast<std::size_t>(window));
  const int half = window / 2;
  double gsum = 0;
  for (int i = 0; i < window; ++i) {
    g[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - half) * (i - half) / (sigma * sigma));
    gsum += g[static_cast<std::size_t>(i)];
  }
  for (auto& x : g) x /= gsum;

  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  double acc = 0;
  std::int64_t windows = 0;
  for (int c = 0; c < C; ++c) {
    const float* pa = a.data() + static_cast<std::int64_t>(c) * H * W;
    const float* pb = b.data() + static_cast<std::int64_t>(c) * H * W;
    for (int y = 0; y + window <= H; ++y) {
      for (int x = 0; x + window <= W; ++x) {
        double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
        for (int i = 0; i < window; ++i) {
          const double wy = g[static_cast<std::size_t>(i)];
          const float* ra = pa + static_cast<std::int64_t>(y + i) * W + x;
          const float* rb = pb + static_cast<std::int64_t>(y + i) * W + x;
          for (int j = 0; j < window; ++j) {
            const double w = wy * g[static_cast<std::size_t>(j)];
            const double va = ra[j], vb = rb[j];
            ma += w * va;
            mb += w * vb;
            maa += w * va * va;
            mbb += w * vb * vb;
            mab += w * va * vb;
          }
        }
        const double va = maa - ma * ma;
        const double vb = mbb - mb * mb;
        const double cov = mab - ma * mb;
        acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
        ++windows;
      }
    }
  }
  return acc / static_cast<double>(windows);
}

GaussianStats gaussian_stats(const Eigen::MatrixXd& rows) {
  const auto n = rows.rows();
  check(n >= 2, "gaussian_stats: need at least 2 rows");
  GaussianStats s;
  s.mu = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(n - 1);
  return s;
}

namespace {

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  check(es.info() == Eigen::Success, "frechet: eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = std::sqrt(std::max(0.0, lam[i]));
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

void check_stats(const GaussianStats& s, const char* who) {
  check(s.mu.allFinite() && s.sigma.allFinite(), std::string(who) + ": non-finite stats");
  check(s.sigma.rows() == s.sigma.cols() && s.sigma.rows() == s.mu.size(),
        std::string(who) + ": covariance shape mismatch");
  const double asym = (s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff();
  check(asym <= 1e-9 * std::max(1.0, s.sigma.cwiseAbs().maxCoeff()),
        std::string(who) + ": covariance is not symmetric");
}

}  // namespace

double frechet_distance(const GaussianStats& s1, const GaussianStats& s2) {
  check_stats(s1, "frechet");
  check_stats(s2, "frechet");
  check(s1.mu.size() == s2.mu.size(), "frechet: dimension mismatch");
  const Eigen::MatrixXd sym1 = 0.5 * (s1.sigma + s1.sigma.transpose());
  const Eigen::MatrixXd sym2 = 0.5 * (s2.sigma + s2.sigma.transpose());
  const Eigen::MatrixXd root1 = sqrt_psd(sym1);
  Eigen::MatrixXd inner = root1 * sym2 * root1;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  check(es.info() == Eigen::Success, "frechet: eigendecomposition failed");
  double tr_sqrt = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    tr_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()[i]));
  const double d2 = (s1.mu - s2.mu).squaredNorm() + sym1.trace() + sym2.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, d2);
}

double fid(const Eigen::MatrixXd& features_real, const Eigen::MatrixXd& features_fake) {
  check(features_real.cols() == features_fake.cols(), "fid: feature dimension mismatch");
  const auto d = features_real.cols();
  if (features_real.rows() <= d || features_fake.rows() <= d)
    std::fprintf(stderr,
                 "fid: warning: fewer samples than feature dimensions (%lld/%lld vs %lld); "
                 "covariance estimate is rank-deficient\n",
                 static_cast<long long>(features_real.rows()),
                 static_cast<long long>(features_fake.rows()), static_cast<long long>(d));
  return frechet_distance(gaussian_stats(features_real), gaussian_stats(features_fake));
}

Eigen::MatrixXd pooled_features(FeatureExtractorNet<float>& v,
                                const std::vector<Tensor<float>>& images) {
  check(!images.empty(), "pooled_features: no images");
  std::int64_t dim = 0;
  for (int w : v.cfg.widths) dim += w;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), dim);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Tensor<float>& img = images[i];
    if (img.rank() != 3) throw ShapeError("pooled_features expects [C,H,W] images");
    Tensor<float> batched({1, img.dim(0), img.dim(1), img.dim(2)});
    std::copy(img.v.begin(), img.v.end(), batched.data());
    const std::vector<Tensor<float>> feats = extract_features(v, batched);
    Eigen::Index col = 0;
    for (const Tensor<float>& f : feats) {
      const int C = f.dim(1);
      const std::int64_t plane = static_cast<std::int64_t>(f.dim(2)) * f.dim(3);
      for (int c = 0; c < C; ++c) {
        double acc = 0;
        const float* p = f.data() + c * plane;
        for (std::int64_t k = 0; k < plane; ++k) acc += p[k];
        out(static_cast<Eigen::Index>(i), col++) = acc / static_cast<double>(plane);
      }
    }
    check(col == dim, "pooled_features: width bookkeeping mismatch");
  }
  return out;
}

IdentityDistribution identity_distance_distribution(
    FeatureExtractorNet<float>& v,
    const std::vector<std::pair<Tensor<float>, Tensor<float>>>& pairs, int bins, double hi) {
  check(!pairs.empty(), "identity_distance_distribution: empty pairs");
  check(bins >= 1, "identity_distance_distribution: bins must be >= 1");
  IdentityDistribution out;
  out.distances.reserve(pairs.size());
  for (const auto& [real, fake] : pairs) {
    require_same_shape(real, fake, "identity_distance_distribution");
    Tensor<float> ra({1, real.dim(0), real.dim(1), real.dim(2)});
    Tensor<float> fa = ra;
    std::copy(real.v.begin(), real.v.end(), ra.data());
    std::copy(fake.v.begin(), fake.v.end(), fa.data());
    const std::vector<Tensor<float>> fr = extract_features(v, ra);
    const std::vector<Tensor<float>> ff = extract_features(v, fa);
    double se = 0;
    for (std::size_t l = 0; l < fr.size(); ++l)
      for (std::int64_t k = 0; k < fr[l].numel(); ++k) {
        const double d = static_cast<double>(fr[l][k]) - static_cast<double>(ff[l][k]);
        se += d * d;
      }
    out.distances.push_back(std::sqrt(se));
  }

  double top = hi;
  if (top <= 0) {
    top = *std::max_element(out.distances.begin(), out.distances.end());
    if (top <= 0) top = 1e-12;  // all-identical pairs: keep bin widths positive
  }
  const double width = top / bins;
  out.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) out.bin_edges[static_cast<std::size_t>(i)] = width * i;
  out.counts.assign(static_cast<std::size_t>(bins), 0);
  double sum = 0;
  for (double d : out.distances) {
    int b = static_cast<int>(d / width);
    b = std::min(std::max(b, 0), bins - 1);
    ++out.counts[static_cast<std::size_t>(b)];
    sum += d;
  }
  out.mean = sum / static_cast<double>(out.distances.size());
  std::vector<double> sorted = out.distances;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  out.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return out;
}

}  // namespace depthgan
