#pragma once

#include "depthgan/tensor.hpp"

namespace depthgan {

// Image value conventions used everywhere:
//   RgbImage  [3,H,W], values in [-1,1]
//   DepthMap  [1,H,W], values in [-1,1], background plane at -1
//   NormalMap [3,H,W], unit vectors with non-negative z
using RgbImage = Tensor<float>;
using DepthMap = Tensor<float>;
using NormalMap = Tensor<float>;

struct ExpressionLabel {
  int index = 0;
  int num_classes = 0;
};

inline void validate_label(const ExpressionLabel& l) {
  if (l.num_classes < 2) throw ValidationError("expression label needs at least 2 classes");
  if (l.index < 0 || l.index >= l.num_classes)
    throw ValidationError("expression index " + std::to_string(l.index) + " outside [0," +
                          std::to_string(l.num_classes) + ")");
}

struct Sample {
  int id = 0;
  ExpressionLabel label;
  RgbImage rgb;
  DepthMap depth;
  NormalMap normals;
};

struct DatasetMeta {
  int schema_version = 1;
  int num_classes = 0;
  int height = 0;
  int width = 0;
  std::uint64_t seed = 0;
};

inline void validate_rgb(const RgbImage& t, const std::string& who) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError(who + ": rgb must be [3,H,W], got " + t.shape_str());
  for (float v : t.v)
    if (v < -1.0f || v > 1.0f || !std::isfinite(v))
      throw ValidationError(who + ": rgb value " + std::to_string(v) + " outside [-1,1]");
}

inline void validate_depth(const DepthMap& t, const std::string& who) {
  if (t.rank() != 3 || t.dim(0) != 1)
    throw ShapeError(who + ": depth must be [1,H,W], got " + t.shape_str());
  for (float v : t.v)
    if (v < -1.0f || v > 1.0f || !std::isfinite(v))
      throw ValidationError(who + ": depth value " + std::to_string(v) + " outside [-1,1]");
}

inline void validate_normals(const NormalMap& t, const std::string& who) {
  if (t.rank() != 3 || t.dim(0) != 3)
    throw ShapeError(who + ": normals must be [3,H,W], got " + t.shape_str());
  std::int64_t plane = static_cast<std::int64_t>(t.dim(1)) * t.dim(2);
  for (std::int64_t i = 0; i < plane; ++i) {
    double nx = t[i], ny = t[plane + i], nz = t[2 * plane + i];
    double n = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (std::abs(n - 1.0) > 1e-5)
      throw ValidationError(who + ": normal norm " + std::to_string(n) + " not unit");
    if (nz < 0.0) throw ValidationError(who + ": normal z component negative");
  }
}

}  // namespace depthgan
