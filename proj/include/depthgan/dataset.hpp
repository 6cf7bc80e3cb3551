#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/image.hpp"
#include "depthgan/pngio.hpp"

namespace depthgan {

struct MakeDatasetOptions {
  std::string out_dir;
  int per_class = 50;
  int num_classes = 4;
  int height = 64;
  int width = 64;
  std::uint64_t seed = 0;
  bool force = false;  // allow writing into an existing non-empty directory
};

struct Dataset {
  DatasetMeta meta;
  std::vector<Sample> samples;
};

// Renders per_class faces for each class and writes images plus
// manifest.json. RGB and normals go to 8-bit PNG; depth goes to 16-bit
// grayscale PNG with per-sample min/max recorded in the manifest. Returns the
// number of samples written. Identical options produce byte-identical trees.
int make_dataset(const MakeDatasetOptions& opts);

// Reads a dataset directory back, verifying the manifest schema, per-file
// sha256 checksums and image dimensions. Throws MissingFileError,
// ChecksumError, SchemaVersionError or ShapeError accordingly.
Dataset load_dataset(const std::string& dir);

// 16-bit quantization against a [lo, hi] range.
std::uint16_t quantize16(float x, float lo, float hi);
float dequantize16(std::uint16_t q, float lo, float hi);

// [-1,1] float [3,H,W] <-> 8-bit RGB, clamped and rounded.
Rgb8Image to_rgb8(const Tensor<float>& t);
Tensor<float> from_rgb8(const Rgb8Image& img);

// Hex-encoded SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace depthgan
