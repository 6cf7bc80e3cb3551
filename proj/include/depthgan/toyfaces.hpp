#pragma once

#include "depthgan/common.hpp"
#include "depthgan/image.hpp"

namespace depthgan {

// Parametric face used by the procedural dataset. The head is an ellipsoid
// cap; expression features (mouth, eyebrows) and eyes are smooth carvings in
// the depth surface. Lengths are in pixels, depths in the canonical [-1,1]
// depth units (background plane at -1). Rendering is a pure function of the
// fields; `seed` records which draw produced the spec and is not consumed.
struct FaceSpec {
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;

  // head ellipsoid: center, semi-axes (pixels), depth amplitude
  double cx = 32.0, cy = 32.0;
  double ax = 24.0, ay = 28.0;
  double cz = 0.7;

  // eyes (disabled when eye_r == 0)
  double eye_dx = 9.0;    // horizontal offset of each eye from cx
  double eye_y = -6.0;    // vertical offset from cy (negative = above center)
  double eye_r = 2.5;
  double eye_carve = 0.12;

  // eyebrows: short bands above the eyes; tilt is the signed vertical rise
  // (pixels) of the outer end across the half-length
  double brow_y = -4.5;   // offset above eye centers
  double brow_len = 3.5;  // half-length
  double brow_th = 1.2;   // half-thickness
  double brow_tilt = 0.0;
  double brow_carve = 0.12;

  // mouth: curved band below center. Positive curve lifts the corners.
  double mouth_y = 11.0;    // offset below cy
  double mouth_hw = 7.0;    // half-width
  double mouth_curve = 0.0; // corner lift in pixels (signed)
  double mouth_halfth = 1.5;
  double mouth_carve = 0.16;

  // Lambertian shading
  double light[3] = {0.0, -0.35, 1.0};
  double ambient = 0.3;
  double diffuse = 0.65;
  double albedo_skin[3] = {0.85, 0.62, 0.48};
  double albedo_lips[3] = {0.65, 0.20, 0.25};
  double albedo_eye[3] = {0.15, 0.15, 0.18};
  double albedo_brow[3] = {0.22, 0.15, 0.10};
  double albedo_bg = 0.12;
};

// Throws ValidationError when geometry leaves the canvas or depth carvings
// could undercut the background plane.
void validate(const FaceSpec& spec);

struct RenderResult {
  RgbImage rgb;
  DepthMap depth;
  NormalMap normals;
};

RenderResult render_toy_face(const FaceSpec& spec);

// Finite-difference surface normals of a depth image: central differences in
// the interior, one-sided at the borders, unit output with z > 0.
NormalMap normals_from_depth(const DepthMap& depth);

// Draws a face spec for a class label. Nuisance parameters (head pose, size,
// lighting, albedo) depend only on the seed; expression parameters (mouth
// curvature and opening, eyebrow tilt) are mapped into disjoint per-class
// ranges, so the label is recoverable from geometry alone.
FaceSpec expression_to_spec(const ExpressionLabel& label, std::uint64_t seed, int width = 64,
                            int height = 64);

}  // namespace depthgan
