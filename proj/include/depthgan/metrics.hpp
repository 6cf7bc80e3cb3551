#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "depthgan/image.hpp"
#include "depthgan/nets.hpp"

namespace depthgan {

// Images arrive in the repo-wide [-1,1] convention; PSNR/SSIM are defined on
// [0,1] with peak/L = 1, so shift first.
Tensor<float> shift_to_unit(const Tensor<float>& t);

// 10*log10(peak^2 / MSE); identical images return +infinity.
double psnr(const Tensor<float>& a, const Tensor<float>& b, double peak);

// Mean structural similarity over valid Gaussian-weighted windows (default
// 11 taps, sigma 1.5), averaged across channels. Expects [C,H,W].
double ssim(const Tensor<float>& a, const Tensor<float>& b, int window = 11, double L = 1.0,
            double sigma = 1.5);

struct GaussianStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

// Sample mean and unbiased covariance of row vectors (N x D, N >= 2).
GaussianStats gaussian_stats(const Eigen::MatrixXd& rows);

// ||mu1-mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}), square roots taken by
// eigendecomposition with negative eigenvalues clipped to zero.
double frechet_distance(const GaussianStats& s1, const GaussianStats& s2);

double fid(const Eigen::MatrixXd& features_real, const Eigen::MatrixXd& features_fake);

// One row per image: each extractor layer is average-pooled per channel and
// the pools concatenated (D = sum of layer widths).
Eigen::MatrixXd pooled_features(FeatureExtractorNet<float>& v,
                                const std::vector<Tensor<float>>& images);

struct IdentityDistribution {
  std::vector<double> bin_edges;  // bins+1 ascending edges
  std::vector<std::int64_t> counts;
  std::vector<double> distances;  // per pair, in input order
  double mean = 0;
  double median = 0;
};

// L2 distance between concatenated extractor features of each (real,
// synthesized) pair, pooled into a fixed-bin histogram. hi <= 0 sizes the
// bins from the largest observed distance.
IdentityDistribution identity_distance_distribution(
    FeatureExtractorNet<float>& v,
    const std::vector<std::pair<Tensor<float>, Tensor<float>>>& pairs, int bins = 20,
    double hi = 0.0);

}  // namespace depthgan
