#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/common.hpp"
#include "depthgan/graph.hpp"
#include "depthgan/nets.hpp"
#include "depthgan/tensor.hpp"

namespace depthgan {

constexpr double kScoreEps = 1e-7;  // clamp inside log() terms

struct LossWeights {
  double lambda_adv = 1.0;
  double lambda_cls = 1.0;
  double lambda_rec = 10.0;
  double lambda_pixel = 1.0;       // pretraining-only supervision terms
  double lambda_perceptual = 1.0;
  double depth_weight = 0.3;  // scales the depth-network loss when it reaches G_rgb
  double beta = 0.1;          // confidence-penalty strength on the depth classifier

  void validate() const {
    check(lambda_adv >= 0 && lambda_cls >= 0 && lambda_rec >= 0 && lambda_pixel >= 0 &&
              lambda_perceptual >= 0,
          "loss weights: lambdas must be >= 0");
    check(depth_weight >= 0, "loss weights: depth_weight must be >= 0");
    check(beta >= 0 && beta < 1, "loss weights: beta must be in [0,1)");
  }
};

struct LossBreakdown {
  double adv_d = 0;
  double adv_g = 0;
  double cls_real = 0;
  double cls_fake = 0;
  double rec = 0;
  double pixel = 0;
  double perceptual = 0;
  double entropy = 0;
  double total = 0;
};

// ---------------------------------------------------------------------------
// Plain double-precision forms (reporting, tests, oracles)
// ---------------------------------------------------------------------------

inline double entropy(const std::vector<double>& p) {
  check(!p.empty(), "entropy: empty distribution");
  double sum = 0, h = 0;
  for (double x : p) {
    if (!(x >= 0)) throw ValidationError("entropy: probabilities must be >= 0");
    sum += x;
    if (x > 0) h -= x * std::log(x);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ValidationError("entropy: probabilities sum to " + std::to_string(sum) + ", not 1");
  return h;
}

namespace lossdetail {

inline double log_sum_exp(const std::vector<double>& logits) {
  check(!logits.empty(), "log_sum_exp: empty logits");
  double mx = logits[0];
  for (double l : logits) {
    if (!std::isfinite(l)) throw ValidationError("logits must be finite");
    mx = std::max(mx, l);
  }
  double s = 0;
  for (double l : logits) s += std::exp(l - mx);
  return mx + std::log(s);
}

// H(softmax(logits)) = lse - sum_i p_i * l_i, stable in the logits.
inline double softmax_entropy(const std::vector<double>& logits) {
  double lse = log_sum_exp(logits);
  double h = lse;
  for (double l : logits) h -= std::exp(l - lse) * l;
  return std::max(0.0, h);
}

inline double clamp_score(double s) {
  return std::min(1.0 - kScoreEps, std::max(kScoreEps, s));
}

}  // namespace lossdetail

inline double categorical_cross_entropy(const std::vector<double>& logits, int target) {
  if (target < 0 || target >= static_cast<int>(logits.size()))
    throw ValidationError("cross entropy: target " + std::to_string(target) + " outside [0," +
                          std::to_string(logits.size()) + ")");
  return lossdetail::log_sum_exp(logits) - logits[static_cast<std::size_t>(target)];
}

inline double classification_loss_with_confidence_penalty(const std::vector<double>& logits,
                                                          int target, double beta) {
  check(beta >= 0 && beta < 1, "confidence penalty: beta must be in [0,1)");
  double ce = categorical_cross_entropy(logits, target);
  if (beta == 0) return ce;
  return ce - beta * lossdetail::softmax_entropy(logits);
}

inline double adversarial_loss_d(const std::vector<double>& real_adv,
                                 const std::vector<double>& fake_adv) {
  check(!real_adv.empty() && !fake_adv.empty(), "adversarial loss: empty score list");
  double lr = 0, lf = 0;
  for (double s : real_adv) lr += std::log(lossdetail::clamp_score(s));
  for (double s : fake_adv) lf += std::log1p(-lossdetail::clamp_score(s));
  return -(lr / static_cast<double>(real_adv.size()) + lf / static_cast<double>(fake_adv.size()));
}

// Non-saturating: -mean ln(s), minimized as fakes look real. Saturating form
// (the literal minimax generator term) is +mean ln(1-s).
inline double adversarial_loss_g(const std::vector<double>& fake_adv, bool saturating = false) {
  check(!fake_adv.empty(), "adversarial loss: empty score list");
  double acc = 0;
  for (double s : fake_adv)
    acc += saturating ? std::log1p(-lossdetail::clamp_score(s))
                      : std::log(lossdetail::clamp_score(s));
  return (saturating ? acc : -acc) / static_cast<double>(fake_adv.size());
}

template <typename T>
double cycle_reconstruction_loss(const Tensor<T>& original, const Tensor<T>& reconstructed) {
  require_same_shape(original, reconstructed, "cycle_reconstruction_loss");
  double s = 0;
  for (std::int64_t i = 0; i < original.numel(); ++i)
    s += std::abs(static_cast<double>(original[i]) - static_cast<double>(reconstructed[i]));
  return s / static_cast<double>(original.numel());
}

template <typename T>
double pixel_loss(const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same_shape(pred, gt, "pixel_loss");
  double s = 0;
  for (std::int64_t i = 0; i < pred.numel(); ++i)
    s += std::abs(static_cast<double>(pred[i]) - static_cast<double>(gt[i]));
  return s / static_cast<double>(pred.numel());
}

template <typename T>
double perceptual_loss(FeatureExtractorNet<T>& v, const Tensor<T>& pred, const Tensor<T>& gt) {
  require_same_shape(pred, gt, "perceptual_loss");
  std::vector<Tensor<T>> fa = extract_features(v, pred);
  std::vector<Tensor<T>> fb = extract_features(v, gt);
  double total = 0;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    double s = 0;
    for (std::int64_t i = 0; i < fa[l].numel(); ++i)
      s += std::abs(static_cast<double>(fa[l][i]) - static_cast<double>(fb[l][i]));
    total += s / static_cast<double>(fa[l].numel());
  }
  return total;
}

inline double total_rgb_loss(double adv, double cls, double rec, const LossWeights& w) {
  w.validate();
  return w.lambda_adv * adv + w.lambda_cls * cls + w.lambda_rec * rec;
}

inline double total_depth_loss(double adv, double cls, double rec, const LossWeights& w) {
  w.validate();
  return w.lambda_adv * adv + w.lambda_cls * cls + w.lambda_rec * rec;
}

inline double combined_objective(double rgb_total, double depth_total, double depth_weight) {
  check(depth_weight >= 0, "combined objective: depth_weight must be >= 0");
  return rgb_total + depth_weight * depth_total;
}

// ---------------------------------------------------------------------------
// Graph forms (training). Adversarial scores must come through a clamped
// sigmoid so the logs stay finite; patch maps contribute per-element logs.
// ---------------------------------------------------------------------------

template <typename T>
Var adversarial_loss_d(Graph<T>& g, Var real_scores, Var fake_scores) {
  return g.wsum({{T(1), g.neg_mean_log(real_scores)}, {T(1), g.neg_mean_log1m(fake_scores)}});
}

template <typename T>
Var adversarial_loss_g(Graph<T>& g, Var fake_scores, bool saturating = false) {
  if (saturating) return g.wsum({{T(-1), g.neg_mean_log1m(fake_scores)}});
  return g.neg_mean_log(fake_scores);
}

template <typename T>
Var classification_loss(Graph<T>& g, Var logits, const std::vector<int>& targets) {
  return g.cross_entropy_mean(logits, targets);
}

template <typename T>
Var classification_loss_with_confidence_penalty(Graph<T>& g, Var logits,
                                                const std::vector<int>& targets, double beta) {
  check(beta >= 0 && beta < 1, "confidence penalty: beta must be in [0,1)");
  Var ce = g.cross_entropy_mean(logits, targets);
  if (beta == 0) return ce;
  return g.wsum({{T(1), ce}, {static_cast<T>(-beta), g.entropy_mean(logits)}});
}

template <typename T>
Var cycle_reconstruction_loss(Graph<T>& g, Var original, Var reconstructed) {
  return g.l1_mean(original, reconstructed);
}

template <typename T>
Var pixel_loss(Graph<T>& g, Var pred, Var gt) {
  return g.l1_mean(pred, gt);
}

template <typename T>
Var perceptual_loss(Graph<T>& g, FeatureExtractorNet<T>& v, Var pred, Var gt) {
  std::vector<Var> fa = v.extract(g, pred);
  std::vector<Var> fb = v.extract(g, gt);
  std::vector<std::pair<T, Var>> terms;
  terms.reserve(fa.size());
  for (std::size_t l = 0; l < fa.size(); ++l) terms.push_back({T(1), g.l1_mean(fa[l], fb[l])});
  return g.wsum(terms);
}

}  // namespace depthgan
