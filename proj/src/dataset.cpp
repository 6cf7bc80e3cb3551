#include "depthgan/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "depthgan/pngio.hpp"
#include "depthgan/toyfaces.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace depthgan {

std::uint16_t quantize16(float x, float lo, float hi) {
  float range = hi - lo;
  if (range <= 0.0f) return 0;
  double t = (static_cast<double>(x) - lo) / range;
  t = std::min(1.0, std::max(0.0, t));
  return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

float dequantize16(std::uint16_t q, float lo, float hi) {
  return lo + static_cast<float>(q) * (hi - lo) / 65535.0f;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open for hashing: " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("EVP_MD_CTX_new failed");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 init failed");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(got)) != 1) {
      EVP_MD_CTX_free(ctx);
      throw Error("sha256 update failed");
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 final failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Rgb8Image to_rgb8(const Tensor<float>& t) {
  Rgb8Image img;
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = (static_cast<double>(t.at(0, c, y, x)) + 1.0) * 0.5 * 255.0;
        v = std::min(255.0, std::max(0.0, v));
        img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v));
      }
  return img;
}

Tensor<float> from_rgb8(const Rgb8Image& img) {
  Tensor<float> t({3, img.height, img.width});
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.at(0, c, y, x) = static_cast<float>(
            img.pixels[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] / 255.0 * 2.0 - 1.0);
  return t;
}

namespace {

std::string zero_pad(int v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

void renormalize(NormalMap& n) {
  std::int64_t plane = static_cast<std::int64_t>(n.dim(1)) * n.dim(2);
  for (std::int64_t i = 0; i < plane; ++i) {
    double nx = n[i], ny = n[plane + i], nz = std::max(0.0f, n[2 * plane + i]);
    double len = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (len < 1e-9) {
      nx = 0.0;
      ny = 0.0;
      nz = 1.0;
      len = 1.0;
    }
    n[i] = static_cast<float>(nx / len);
    n[plane + i] = static_cast<float>(ny / len);
    n[2 * plane + i] = static_cast<float>(nz / len);
  }
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw SchemaVersionError("manifest missing field '" + std::string(key) + "' in " + where);
  return *it;
}

}  // namespace

int make_dataset(const MakeDatasetOptions& opts) {
  if (opts.per_class < 1) throw ConfigError("per_class must be >= 1");
  if (opts.num_classes < 2 || opts.num_classes > 8)
    throw ConfigError("num_classes must be in [2, 8]");
  if (opts.height < 16 || opts.width < 16 || opts.height > 512 || opts.width > 512)
    throw ConfigError("dataset image size must be in [16, 512]");
  if (opts.out_dir.empty()) throw ConfigError("output directory is required");

  fs::path root(opts.out_dir);
  if (fs::exists(root) && !fs::is_empty(root) && !opts.force)
    throw IoError("output directory exists and is not empty (use force): " + opts.out_dir);
  fs::create_directories(root / "images");

  json manifest;
  manifest["schema_version"] = 1;
  manifest["num_classes"] = opts.num_classes;
  manifest["height"] = opts.height;
  manifest["width"] = opts.width;
  manifest["seed"] = opts.seed;
  manifest["samples"] = json::array();

  for (int cls = 0; cls < opts.num_classes; ++cls)
    for (int j = 0; j < opts.per_class; ++j) {
      int id = cls * opts.per_class + j;
      std::uint64_t sample_seed = Rng(opts.seed).stream("sample", static_cast<std::uint64_t>(id)).seed();
      FaceSpec spec = expression_to_spec({cls, opts.num_classes}, sample_seed, opts.width, opts.height);
      RenderResult r = render_toy_face(spec);

      std::string stem = zero_pad(id, 5);
      std::string rgb_rel = "images/" + stem + "_rgb.png";
      std::string depth_rel = "images/" + stem + "_depth.png";
      std::string normals_rel = "images/" + stem + "_normals.png";

      write_png_rgb8((root / rgb_rel).string(), to_rgb8(r.rgb));

      float dmin = r.depth.v[0], dmax = r.depth.v[0];
      for (float v : r.depth.v) {
        dmin = std::min(dmin, v);
        dmax = std::max(dmax, v);
      }
      Gray16Image d16;
      d16.width = opts.width;
      d16.height = opts.height;
      d16.pixels.resize(r.depth.v.size());
      for (std::size_t i = 0; i < r.depth.v.size(); ++i)
        d16.pixels[i] = quantize16(r.depth.v[i], dmin, dmax);
      write_png_gray16((root / depth_rel).string(), d16);

      write_png_rgb8((root / normals_rel).string(), to_rgb8(r.normals));

      json entry;
      entry["id"] = id;
      entry["class_index"] = cls;
      entry["rgb"] = rgb_rel;
      entry["depth"] = depth_rel;
      entry["normals"] = normals_rel;
      entry["depth_min"] = dmin;
      entry["depth_max"] = dmax;
      entry["sha256_rgb"] = sha256_file((root / rgb_rel).string());
      entry["sha256_depth"] = sha256_file((root / depth_rel).string());
      entry["sha256_normals"] = sha256_file((root / normals_rel).string());
      manifest["samples"].push_back(std::move(entry));
    }

  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write manifest.json in " + opts.out_dir);
  out << manifest.dump(2) << "\n";
  out.close();
  return opts.num_classes * opts.per_class;
}

Dataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  fs::path mpath = root / "manifest.json";
  if (!fs::exists(mpath)) throw MissingFileError("no manifest.json in " + dir);
  std::ifstream in(mpath);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw SchemaVersionError("manifest.json is not valid JSON: " + std::string(e.what()));
  }

  int schema = field(manifest, "schema_version", "manifest").get<int>();
  if (schema != 1)
    throw SchemaVersionError("unsupported manifest schema_version " + std::to_string(schema) +
                             " (expected 1)");
  Dataset ds;
  ds.meta.schema_version = schema;
  ds.meta.num_classes = field(manifest, "num_classes", "manifest").get<int>();
  ds.meta.height = field(manifest, "height", "manifest").get<int>();
  ds.meta.width = field(manifest, "width", "manifest").get<int>();
  ds.meta.seed = field(manifest, "seed", "manifest").get<std::uint64_t>();
  if (ds.meta.num_classes < 2) throw SchemaVersionError("manifest num_classes must be >= 2");

  for (const json& e : field(manifest, "samples", "manifest")) {
    Sample s;
    s.id = field(e, "id", "sample").get<int>();
    std::string where = "sample " + std::to_string(s.id);
    s.label.index = field(e, "class_index", where).get<int>();
    s.label.num_classes = ds.meta.num_classes;
    validate_label(s.label);

    auto checked = [&](const char* pathkey, const char* hashkey) {
      std::string rel = field(e, pathkey, where).get<std::string>();
      fs::path p = root / rel;
      if (!fs::exists(p)) throw MissingFileError("missing file: " + p.string());
      std::string want = field(e, hashkey, where).get<std::string>();
      std::string got = sha256_file(p.string());
      if (want != got)
        throw ChecksumError("checksum mismatch for " + p.string() + ": manifest " + want +
                            ", actual " + got);
      return p.string();
    };

    Rgb8Image rgb = read_png_rgb8(checked("rgb", "sha256_rgb"));
    if (rgb.width != ds.meta.width || rgb.height != ds.meta.height)
      throw ShapeError("rgb size mismatch in " + where);
    s.rgb = from_rgb8(rgb);

    Gray16Image d16 = read_png_gray16(checked("depth", "sha256_depth"));
    if (d16.width != ds.meta.width || d16.height != ds.meta.height)
      throw ShapeError("depth size mismatch in " + where);
    float dmin = field(e, "depth_min", where).get<float>();
    float dmax = field(e, "depth_max", where).get<float>();
    s.depth = DepthMap({1, ds.meta.height, ds.meta.width});
    for (std::size_t i = 0; i < d16.pixels.size(); ++i)
      s.depth.v[i] = std::min(1.0f, std::max(-1.0f, dequantize16(d16.pixels[i], dmin, dmax)));

    Rgb8Image n8 = read_png_rgb8(checked("normals", "sha256_normals"));
    if (n8.width != ds.meta.width || n8.height != ds.meta.height)
      throw ShapeError("normals size mismatch in " + where);
    s.normals = from_rgb8(n8);
    renormalize(s.normals);

    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace depthgan
