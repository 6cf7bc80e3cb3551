#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "depthgan/common.hpp"
#include "depthgan/graph.hpp"
#include "depthgan/tensor.hpp"

namespace depthgan {

// ---------------------------------------------------------------------------
// Parameter storage and optimizer
// ---------------------------------------------------------------------------

template <typename T>
struct ParamEntry {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;  // Adam first moment
  Tensor<T> v;  // Adam second moment
};

template <typename T>
class ParamStore {
 public:
  int add(const std::string& name, std::vector<int> shape) {
    if (find(name) >= 0) throw ConfigError("duplicate parameter name: " + name);
    ParamEntry<T> e;
    e.name = name;
    e.value = Tensor<T>(shape);
    e.grad = Tensor<T>(shape);
    e.m = Tensor<T>(shape);
    e.v = Tensor<T>(std::move(shape));
    entries_.push_back(std::move(e));
    return static_cast<int>(entries_.size()) - 1;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  ParamEntry<T>& at(int i) { return entries_.at(static_cast<std::size_t>(i)); }
  const ParamEntry<T>& at(int i) const { return entries_.at(static_cast<std::size_t>(i)); }

  int find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (entries_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_) e.grad.fill(T(0));
  }

  bool values_finite() const {
    for (const auto& e : entries_)
      if (!e.value.all_finite()) return false;
    return true;
  }

  std::vector<ParamEntry<T>>& entries() { return entries_; }
  const std::vector<ParamEntry<T>>& entries() const { return entries_; }

 private:
  std::vector<ParamEntry<T>> entries_;
};

struct AdamConfig {
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments live inside the ParamStore entries so checkpoints capture them with
// the values; the optimizer itself only carries the step counter.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore<T>& ps, double lr) {
    check(lr > 0, "adam: learning rate must be positive");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& e : ps.entries()) {
      for (std::int64_t i = 0; i < e.value.numel(); ++i) {
        const double g = static_cast<double>(e.grad[i]);
        const double m = cfg_.beta1 * static_cast<double>(e.m[i]) + (1.0 - cfg_.beta1) * g;
        const double v = cfg_.beta2 * static_cast<double>(e.v[i]) + (1.0 - cfg_.beta2) * g * g;
        e.m[i] = static_cast<T>(m);
        e.v[i] = static_cast<T>(v);
        const double upd = lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
        e.value[i] = static_cast<T>(static_cast<double>(e.value[i]) - upd);
      }
    }
  }

  const AdamConfig& config() const { return cfg_; }
  std::int64_t t() const { return t_; }
  void set_t(std::int64_t t) { t_ = t; }

 private:
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Shared building blocks
// ---------------------------------------------------------------------------

// Maps a parameter-entry index to a graph leaf. The default binding attaches
// the store's value/grad tensors; gradient tests substitute their own leaves.
template <typename T>
using LeafFn = std::function<Var(Graph<T>&, int)>;

template <typename T>
LeafFn<T> bound_leaves(ParamStore<T>& ps, bool trainable) {
  return [&ps, trainable](Graph<T>& g, int id) {
    ParamEntry<T>& e = ps.at(id);
    return g.param(e.value, trainable ? &e.grad : nullptr, trainable);
  };
}

namespace netdetail {

struct ConvIds {
  int w = -1, b = -1;
};
struct NormIds {
  int g = -1, b = -1;
};
struct ResIds {
  ConvIds c1, c2;
  NormIds n1, n2;
};

template <typename T>
void fill_normal(Tensor<T>& t, Rng& rng, double stddev) {
  for (T& x : t.v) x = static_cast<T>(rng.normal() * stddev);
}

// He-style init: stddev = gain / sqrt(cin * k * k), gain sqrt(2) before ReLU
// layers and 1 for output heads.
template <typename T>
ConvIds add_conv(ParamStore<T>& ps, const std::string& name, int cout, int cin, int k, Rng& rng,
                 double gain) {
  ConvIds ids;
  ids.w = ps.add(name + ".w", {cout, cin, k, k});
  ids.b = ps.add(name + ".b", {cout});
  fill_normal(ps.at(ids.w).value, rng, gain / std::sqrt(static_cast<double>(cin) * k * k));
  return ids;
}

// Transposed conv weights are stored [cin, cout, k, k].
template <typename T>
ConvIds add_convT(ParamStore<T>& ps, const std::string& name, int cin, int cout, int k, Rng& rng,
                  double gain) {
  ConvIds ids;
  ids.w = ps.add(name + ".w", {cin, cout, k, k});
  ids.b = ps.add(name + ".b", {cout});
  fill_normal(ps.at(ids.w).value, rng, gain / std::sqrt(static_cast<double>(cin) * k * k));
  return ids;
}

template <typename T>
NormIds add_norm(ParamStore<T>& ps, const std::string& name, int c) {
  NormIds ids;
  ids.g = ps.add(name + ".g", {c});
  ids.b = ps.add(name + ".b", {c});
  ps.at(ids.g).value.fill(T(1));
  return ids;
}

}  // namespace netdetail

// One-hot label maps tiled over the spatial grid, [B, num_classes, H, W].
template <typename T>
Tensor<T> one_hot_maps(const std::vector<int>& labels, int num_classes, int h, int w) {
  check(num_classes >= 2, "one_hot_maps: need at least 2 classes");
  Tensor<T> t({static_cast<int>(labels.size()), num_classes, h, w});
  for (std::size_t b = 0; b < labels.size(); ++b) {
    int lab = labels[b];
    if (lab < 0 || lab >= num_classes)
      throw ValidationError("label " + std::to_string(lab) + " outside [0," +
                            std::to_string(num_classes) + ")");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) t.at(static_cast<int>(b), lab, y, x) = T(1);
  }
  return t;
}

enum class DepthDirection { rgb_to_depth = 0, depth_to_rgb = 1 };

template <typename T>
Tensor<T> direction_maps(DepthDirection dir, int batch, int h, int w) {
  return one_hot_maps<T>(std::vector<int>(static_cast<std::size_t>(batch), static_cast<int>(dir)),
                         2, h, w);
}

// ---------------------------------------------------------------------------
// Generator: conditional encoder / residual bottleneck / decoder
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  int in_ch = 3;
  int cond_ch = 0;   // K one-hot channels for the RGB net, 2 domain flags for depth
  int base_width = 16;
  int n_down = 2;
  int n_res = 2;
  std::vector<int> head_channels = {3};  // one tanh-bounded output conv per head

  void validate() const {
    check(in_ch >= 1, "generator: in_ch must be >= 1");
    check(cond_ch >= 0, "generator: cond_ch must be >= 0");
    check(base_width >= 1, "generator: base_width must be >= 1");
    check(n_down >= 0 && n_down <= 6, "generator: n_down must be in [0,6]");
    check(n_res >= 0, "generator: n_res must be >= 0");
    check(!head_channels.empty(), "generator: need at least one output head");
    for (int c : head_channels) check(c >= 1, "generator: head channels must be >= 1");
  }
};

template <typename T>
class GeneratorNet {
 public:
  GeneratorConfig cfg;
  ParamStore<T> params;

  void build(Rng rng) {
    cfg.validate();
    if (params.size() > 0) throw ConfigError("generator already built");
    using namespace netdetail;
    const double g2 = std::sqrt(2.0);
    int w = cfg.base_width;
    enc_ = add_conv(params, "enc", w, cfg.in_ch + cfg.cond_ch, 3, rng, g2);
    enc_n_ = add_norm<T>(params, "enc.n", w);
    for (int i = 0; i < cfg.n_down; ++i) {
      std::string nm = "down" + std::to_string(i);
      down_.push_back(add_conv(params, nm, w << (i + 1), w << i, 4, rng, g2));
      down_n_.push_back(add_norm<T>(params, nm + ".n", w << (i + 1)));
    }
    int wb = w << cfg.n_down;
    for (int j = 0; j < cfg.n_res; ++j) {
      std::string nm = "res" + std::to_string(j);
      ResIds r;
      r.c1 = add_conv(params, nm + ".c1", wb, wb, 3, rng, g2);
      r.n1 = add_norm<T>(params, nm + ".n1", wb);
      r.c2 = add_conv(params, nm + ".c2", wb, wb, 3, rng, g2);
      r.n2 = add_norm<T>(params, nm + ".n2", wb);
      res_.push_back(r);
    }
    for (int i = cfg.n_down - 1; i >= 0; --i) {
      std::string nm = "up" + std::to_string(cfg.n_down - 1 - i);
      up_.push_back(add_convT(params, nm, w << (i + 1), w << i, 4, rng, g2));
      up_n_.push_back(add_norm<T>(params, nm + ".n", w << i));
    }
    for (std::size_t h = 0; h < cfg.head_channels.size(); ++h)
      heads_.push_back(
          add_conv(params, "head" + std::to_string(h), cfg.head_channels[h], w, 3, rng, 1.0));
  }

  int num_heads() const { return static_cast<int>(heads_.size()); }

  // content: [B, in_ch, H, W]; cond: [B, cond_ch, H, W] (ignored if cond_ch == 0).
  // Output: [B, head_channels[head], H, W], tanh-bounded.
  Var forward_with(Graph<T>& g, Var content, Var cond, int head, const LeafFn<T>& leaf) {
    const Tensor<T>& x0 = g.v(content);
    if (x0.rank() != 4 || x0.dim(1) != cfg.in_ch)
      throw ShapeError("generator expects [B," + std::to_string(cfg.in_ch) + ",H,W], got " +
                       x0.shape_str());
    const int H = x0.dim(2), W = x0.dim(3), div = 1 << cfg.n_down;
    if (H % div != 0 || W % div != 0)
      throw ShapeError("generator input " + x0.shape_str() + " not divisible by stride " +
                       std::to_string(div));
    if (head < 0 || head >= num_heads())
      throw ConfigError("generator head " + std::to_string(head) + " out of range");

    Var x = content;
    if (cfg.cond_ch > 0) {
      const Tensor<T>& c0 = g.v(cond);
      if (c0.rank() != 4 || c0.dim(0) != x0.dim(0) || c0.dim(1) != cfg.cond_ch ||
          c0.dim(2) != H || c0.dim(3) != W)
        throw ShapeError("generator condition shape " + c0.shape_str() + " does not match input " +
                         x0.shape_str());
      x = g.concat_channels(content, cond);
    }
    x = g.relu(g.instance_norm(g.conv2d(x, leaf(g, enc_.w), leaf(g, enc_.b), 1, 1),
                               leaf(g, enc_n_.g), leaf(g, enc_n_.b)));
    for (std::size_t i = 0; i < down_.size(); ++i)
      x = g.relu(g.instance_norm(g.conv2d(x, leaf(g, down_[i].w), leaf(g, down_[i].b), 2, 1),
                                 leaf(g, down_n_[i].g), leaf(g, down_n_[i].b)));
    for (const auto& r : res_) {
      Var y = g.relu(g.instance_norm(g.conv2d(x, leaf(g, r.c1.w), leaf(g, r.c1.b), 1, 1),
                                     leaf(g, r.n1.g), leaf(g, r.n1.b)));
      y = g.instance_norm(g.conv2d(y, leaf(g, r.c2.w), leaf(g, r.c2.b), 1, 1), leaf(g, r.n2.g),
                          leaf(g, r.n2.b));
      x = g.add(x, y);
    }
    for (std::size_t i = 0; i < up_.size(); ++i)
      x = g.relu(
          g.instance_norm(g.conv_transpose2d(x, leaf(g, up_[i].w), leaf(g, up_[i].b), 2, 1),
                          leaf(g, up_n_[i].g), leaf(g, up_n_[i].b)));
    return g.tanh_act(g.conv2d(x, leaf(g, heads_[static_cast<std::size_t>(head)].w),
                               leaf(g, heads_[static_cast<std::size_t>(head)].b), 1, 1));
  }

  Var forward(Graph<T>& g, Var content, Var cond, int head, bool trainable) {
    return forward_with(g, content, cond, head, bound_leaves(params, trainable));
  }

 private:
  netdetail::ConvIds enc_;
  netdetail::NormIds enc_n_;
  std::vector<netdetail::ConvIds> down_, up_;
  std::vector<netdetail::NormIds> down_n_, up_n_;
  std::vector<netdetail::ResIds> res_;
  std::vector<netdetail::ConvIds> heads_;
};

// ---------------------------------------------------------------------------
// Discriminator: strided trunk, patch adversarial head, K-class head
// ---------------------------------------------------------------------------

struct DiscOut {
  Var adv;  // [B, 1, h, w] scores strictly inside (0,1)
  Var cls;  // [B, K] logits
};

struct DiscriminatorConfig {
  int in_ch = 3;
  int num_classes = 4;
  int base_width = 16;
  int n_layers = 4;
  int input_h = 64;
  int input_w = 64;

  int final_map() const {
    int h = input_h;
    for (int i = 0; i < n_layers; ++i) h = conv_out_dim(h, 4, 2, 1);
    return h;
  }

  void validate() const {
    check(in_ch >= 1, "discriminator: in_ch must be >= 1");
    check(num_classes >= 2, "discriminator: num_classes must be >= 2");
    check(base_width >= 1, "discriminator: base_width must be >= 1");
    check(n_layers >= 1 && n_layers <= 7, "discriminator: n_layers must be in [1,7]");
    check(input_h == input_w, "discriminator: input must be square");
    final_map();  // throws if the trunk shrinks the map away
  }
};

template <typename T>
class DiscriminatorNet {
 public:
  DiscriminatorConfig cfg;
  ParamStore<T> params;

  void build(Rng rng) {
    cfg.validate();
    if (params.size() > 0) throw ConfigError("discriminator already built");
    using namespace netdetail;
    const double g2 = std::sqrt(2.0);
    int cin = cfg.in_ch;
    for (int i = 0; i < cfg.n_layers; ++i) {
      int cout = cfg.base_width << i;
      trunk_.push_back(add_conv(params, "conv" + std::to_string(i), cout, cin, 4, rng, g2));
      cin = cout;
    }
    adv_ = add_conv(params, "adv", 1, cin, 3, rng, 1.0);
    cls_ = add_conv(params, "cls", cfg.num_classes, cin, cfg.final_map(), rng, 1.0);
  }

  DiscOut forward_with(Graph<T>& g, Var x, const LeafFn<T>& leaf) {
    const Tensor<T>& x0 = g.v(x);
    if (x0.rank() != 4 || x0.dim(1) != cfg.in_ch || x0.dim(2) != cfg.input_h ||
        x0.dim(3) != cfg.input_w)
      throw ShapeError("discriminator expects [B," + std::to_string(cfg.in_ch) + "," +
                       std::to_string(cfg.input_h) + "," + std::to_string(cfg.input_w) +
                       "], got " + x0.shape_str());
    const int B = x0.dim(0);
    for (const auto& c : trunk_)
      x = g.leaky_relu(g.conv2d(x, leaf(g, c.w), leaf(g, c.b), 2, 1), T(0.01));
    Var adv = g.sigmoid_clamped(g.conv2d(x, leaf(g, adv_.w), leaf(g, adv_.b), 1, 1), T(1e-7));
    Var cls = g.reshape(g.conv2d(x, leaf(g, cls_.w), leaf(g, cls_.b), 1, 0),
                        {B, cfg.num_classes});
    return {adv, cls};
  }

  DiscOut forward(Graph<T>& g, Var x, bool trainable) {
    return forward_with(g, x, bound_leaves(params, trainable));
  }

 private:
  std::vector<netdetail::ConvIds> trunk_;
  netdetail::ConvIds adv_, cls_;
};

// ---------------------------------------------------------------------------
// Frozen random feature extractor used by the perceptual loss and metrics
// ---------------------------------------------------------------------------

struct FeatureExtractorConfig {
  std::vector<int> widths = {8, 16, 32};
  std::uint64_t seed = 77;
  int stride = 2;

  void validate() const {
    check(!widths.empty(), "feature extractor: need at least one layer");
    for (int w : widths) check(w >= 1, "feature extractor: widths must be >= 1");
    check(stride == 1 || stride == 2, "feature extractor: stride must be 1 or 2");
  }
};

template <typename T>
class FeatureExtractorNet {
 public:
  FeatureExtractorConfig cfg;
  ParamStore<T> params;

  void build() {
    cfg.validate();
    if (params.size() > 0) throw ConfigError("feature extractor already built");
    using namespace netdetail;
    Rng rng = Rng(cfg.seed).stream("init/v");
    int cin = 3;
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
      layers_.push_back(
          add_conv(params, "conv" + std::to_string(i), cfg.widths[i], cin, 3, rng, std::sqrt(2.0)));
      cin = cfg.widths[i];
    }
  }

  int num_layers() const { return static_cast<int>(layers_.size()); }

  // Accepts [B,1,H,W] (replicated to 3 channels) or [B,3,H,W]. Weights are
  // always frozen; gradients still flow to the input.
  std::vector<Var> extract(Graph<T>& g, Var x) {
    const Tensor<T>& x0 = g.v(x);
    if (x0.rank() != 4) throw ShapeError("feature extractor expects [B,C,H,W], got " + x0.shape_str());
    if (x0.dim(1) == 1)
      x = g.replicate_channel(x, 3);
    else if (x0.dim(1) != 3)
      throw ShapeError("feature extractor expects 1 or 3 channels, got " + x0.shape_str());
    std::vector<Var> feats;
    feats.reserve(layers_.size());
    for (const auto& c : layers_) {
      Var w = g.param(params.at(c.w).value, nullptr, false);
      Var b = g.param(params.at(c.b).value, nullptr, false);
      x = g.relu(g.conv2d(x, w, b, cfg.stride, 1));
      feats.push_back(x);
    }
    return feats;
  }

 private:
  std::vector<netdetail::ConvIds> layers_;
};

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

struct ArchConfig {
  int height = 64;
  int width = 64;
  int num_classes = 4;
  int g_base = 16;
  int g_down = 2;
  int g_res = 2;
  int d_base = 16;
  int d_layers = 4;
  std::vector<int> v_widths = {8, 16, 32};
  std::uint64_t v_seed = 77;

  void validate() const {
    check(height >= 8 && height <= 512 && width >= 8 && width <= 512,
          "arch: image size out of range");
    check(height == width, "arch: training expects square images");
    check(num_classes >= 2 && num_classes <= 8, "arch: num_classes must be in [2,8]");
    check(g_base >= 1 && d_base >= 1, "arch: base widths must be >= 1");
    check(g_down >= 0 && g_res >= 0, "arch: generator depths must be >= 0");
    int div = 1 << g_down;
    check(height % div == 0 && width % div == 0,
          "arch: image size must be divisible by 2^g_down");
    DiscriminatorConfig d;
    d.in_ch = 3;
    d.num_classes = num_classes;
    d.base_width = d_base;
    d.n_layers = d_layers;
    d.input_h = height;
    d.input_w = width;
    d.validate();
  }
};

template <typename T>
struct ModelBundle {
  ArchConfig arch;
  GeneratorNet<T> g_rgb;     // heads: {3ch RGB}
  GeneratorNet<T> g_depth;   // heads: {1ch depth (rgb->depth), 3ch RGB (depth->rgb)}
  DiscriminatorNet<T> d_rgb;
  DiscriminatorNet<T> d_depth;
  FeatureExtractorNet<T> v;

  void build(std::uint64_t seed) {
    arch.validate();
    Rng root(seed);
    g_rgb.cfg = GeneratorConfig{3, arch.num_classes, arch.g_base, arch.g_down, arch.g_res, {3}};
    g_rgb.build(root.stream("init/g_rgb"));
    g_depth.cfg = GeneratorConfig{3, 2, arch.g_base, arch.g_down, arch.g_res, {1, 3}};
    g_depth.build(root.stream("init/g_depth"));
    d_rgb.cfg = DiscriminatorConfig{3, arch.num_classes, arch.d_base, arch.d_layers, arch.height,
                                    arch.width};
    d_rgb.build(root.stream("init/d_rgb"));
    d_depth.cfg = DiscriminatorConfig{1, arch.num_classes, arch.d_base, arch.d_layers, arch.height,
                                      arch.width};
    d_depth.build(root.stream("init/d_depth"));
    v.cfg = FeatureExtractorConfig{arch.v_widths, arch.v_seed};
    v.build();
  }

  std::uint64_t arch_hash() const {
    std::string d = "depthgan.arch.v1";
    auto num = [&d](const char* k, std::int64_t x) {
      d += ";";
      d += k;
      d += "=" + std::to_string(x);
    };
    num("h", arch.height);
    num("w", arch.width);
    num("k", arch.num_classes);
    num("vseed", static_cast<std::int64_t>(arch.v_seed));
    auto store = [&d](const char* tag, const auto& ps) {
      d += ";";
      d += tag;
      for (const auto& e : ps.entries()) d += "|" + e.name + Tensor<float>::shape_str(e.value.shape);
    };
    store("g_rgb", g_rgb.params);
    store("g_depth", g_depth.params);
    store("d_rgb", d_rgb.params);
    store("d_depth", d_depth.params);
    store("v", v.params);
    return fnv1a64(d);
  }
};

// ---------------------------------------------------------------------------
// Whole-tensor inference helpers (no gradients)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> generate_rgb(GeneratorNet<T>& net, const Tensor<T>& images,
                       const std::vector<int>& targets) {
  if (images.rank() != 4)
    throw ShapeError("generate_rgb expects [B,C,H,W], got " + images.shape_str());
  check(static_cast<int>(targets.size()) == images.dim(0),
        "generate_rgb: one target label per image required");
  Graph<T> g;
  Var x = g.constant(images);
  Var c = g.constant(one_hot_maps<T>(targets, net.cfg.cond_ch, images.dim(2), images.dim(3)));
  return g.v(net.forward(g, x, c, 0, false));
}

template <typename T>
Tensor<T> generate_depth(GeneratorNet<T>& net, const Tensor<T>& input, DepthDirection dir) {
  if (input.rank() != 4)
    throw ShapeError("generate_depth expects [B,C,H,W], got " + input.shape_str());
  const int want = dir == DepthDirection::rgb_to_depth ? 3 : 1;
  if (input.dim(1) != want)
    throw ShapeError("generate_depth: direction expects " + std::to_string(want) +
                     " channel(s), got " + input.shape_str());
  Graph<T> g;
  Var x = g.constant(input);
  if (dir == DepthDirection::depth_to_rgb) x = g.replicate_channel(x, 3);
  Var c = g.constant(direction_maps<T>(dir, input.dim(0), input.dim(2), input.dim(3)));
  return g.v(net.forward(g, x, c, static_cast<int>(dir), false));
}

template <typename T>
struct DiscResult {
  Tensor<T> adv;
  Tensor<T> logits;
};

template <typename T>
DiscResult<T> discriminate(DiscriminatorNet<T>& net, const Tensor<T>& input) {
  Graph<T> g;
  DiscOut out = net.forward(g, g.constant(input), false);
  return {g.v(out.adv), g.v(out.cls)};
}

template <typename T>
std::vector<Tensor<T>> extract_features(FeatureExtractorNet<T>& net, const Tensor<T>& input) {
  Graph<T> g;
  std::vector<Var> feats = net.extract(g, g.constant(input));
  std::vector<Tensor<T>> out;
  out.reserve(feats.size());
  for (Var f : feats) out.push_back(g.v(f));
  return out;
}

}  // namespace depthgan
