#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "depthgan/classifier.hpp"
#include "depthgan/losses.hpp"

namespace depthgan {

void ClassifierConfig::validate() const {
  DiscriminatorConfig d;
  d.in_ch = 3;
  d.num_classes = num_classes;
  d.base_width = base_width;
  d.n_layers = n_layers;
  d.input_h = height;
  d.input_w = width;
  d.validate();
  check(lr > 0, "classifier: lr must be positive");
  check(batch >= 1, "classifier: batch must be >= 1");
  check(iters >= 0, "classifier: iters must be >= 0");
}

void Classifier::build() {
  cfg.validate();
  net.cfg = DiscriminatorConfig{3, cfg.num_classes, cfg.base_width, cfg.n_layers, cfg.height,
                                cfg.width};
  net.build(Rng(cfg.seed).stream("init/classifier"));
}

std::vector<int> Classifier::classify(const Tensor<float>& images) {
  const DiscResult<float> r = discriminate(net, images);
  const int B = r.logits.dim(0), K = r.logits.dim(1);
  std::vector<int> out(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (r.logits[b * K + k] > r.logits[b * K + best]) best = k;
    out[static_cast<std::size_t>(b)] = best;
  }
  return out;
}

Classifier train_classifier(const Dataset& ds, const ClassifierConfig& cfg) {
  check(!ds.samples.empty(), "train_classifier: empty dataset");
  check(ds.meta.height == cfg.height && ds.meta.width == cfg.width,
        "train_classifier: dataset size does not match classifier config");
  check(ds.meta.num_classes == cfg.num_classes,
        "train_classifier: dataset class count does not match classifier config");
  Classifier c;
  c.cfg = cfg;
  c.build();
  Adam<float> opt(AdamConfig{0.9, 0.999, 1e-8});
  Rng rng = Rng(cfg.seed).stream("classifier/train");
  const int n = static_cast<int>(ds.samples.size());
  const int H = cfg.height, W = cfg.width;
  Tensor<float> batch({cfg.batch, 3, H, W});
  std::vector<int> labels(static_cast<std::size_t>(cfg.batch));
  const std::int64_t plane = 3LL * H * W;
  for (int it = 0; it < cfg.iters; ++it) {
    for (int b = 0; b < cfg.batch; ++b) {
      const Sample& s = ds.samples[static_cast<std::size_t>(rng.uniform_int(n))];
      std::copy(s.rgb.v.begin(), s.rgb.v.end(), batch.data() + b * plane);
      labels[static_cast<std::size_t>(b)] = s.label.index;
    }
    Graph<float> g;
    DiscOut out = c.net.forward(g, g.constant(batch), true);
    Var loss = classification_loss(g, out.cls, labels);
    const double val = g.v(loss)[0];
    if (!std::isfinite(val)) throw NumericError("classifier: non-finite training loss");
    c.net.params.zero_grads();
    g.backward(loss);
    opt.step(c.net.params, cfg.lr);
  }
  return c;
}

double classifier_accuracy(Classifier& c, const Dataset& ds) {
  check(!ds.samples.empty(), "classifier_accuracy: empty dataset");
  const int H = c.cfg.height, W = c.cfg.width;
  std::int64_t hits = 0;
  Tensor<float> one({1, 3, H, W});
  for (const Sample& s : ds.samples) {
    std::copy(s.rgb.v.begin(), s.rgb.v.end(), one.data());
    if (c.classify(one)[0] == s.label.index) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ds.samples.size());
}

namespace {
constexpr char kMagic[4] = {'D', 'G', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_classifier(const std::string& path, const Classifier& c) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("classifier: cannot write " + tmp.string());
    os.write(kMagic, 4);
    auto put = [&os](auto x) { os.write(reinterpret_cast<const char*>(&x), sizeof x); };
    put(kVersion);
    put(static_cast<std::int32_t>(c.cfg.height));
    put(static_cast<std::int32_t>(c.cfg.width));
    put(static_cast<std::int32_t>(c.cfg.num_classes));
    put(static_cast<std::int32_t>(c.cfg.base_width));
    put(static_cast<std::int32_t>(c.cfg.n_layers));
    put(c.cfg.lr);
    put(static_cast<std::int32_t>(c.cfg.batch));
    put(static_cast<std::int32_t>(c.cfg.iters));
    put(c.cfg.seed);
    put(static_cast<std::uint32_t>(c.net.params.size()));
    for (const auto& e : c.net.params.entries()) {
      put(static_cast<std::uint32_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put(static_cast<std::uint32_t>(e.value.rank()));
      for (int d = 0; d < e.value.rank(); ++d) put(static_cast<std::int32_t>(e.value.shape[d]));
      os.write(reinterpret_cast<const char*>(e.value.data()),
               static_cast<std::streamsize>(e.value.numel() * sizeof(float)));
    }
    os.flush();
    if (!os) throw IoError("classifier: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

Classifier load_classifier(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("classifier: cannot open " + path);
  auto get_bytes = [&is](void* p, std::size_t l) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(l));
    if (!is) throw CheckpointError("classifier: truncated file");
  };
  char magic[4];
  get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("classifier: bad magic");
  auto get_u32 = [&]() { std::uint32_t x; get_bytes(&x, sizeof x); return x; };
  auto get_i32 = [&]() { std::int32_t x; get_bytes(&x, sizeof x); return x; };
  const std::uint32_t version = get_u32();
  if (version != kVersion)
    throw SchemaVersionError("classifier: unsupported version " + std::to_string(version));
  Classifier c;
  c.cfg.height = get_i32();
  c.cfg.width = get_i32();
  c.cfg.num_classes = get_i32();
  c.cfg.base_width = get_i32();
  c.cfg.n_layers = get_i32();
  get_bytes(&c.cfg.lr, sizeof c.cfg.lr);
  c.cfg.batch = get_i32();
  c.cfg.iters = get_i32();
  get_bytes(&c.cfg.seed, sizeof c.cfg.seed);
  c.build();
  const std::uint32_t count = get_u32();
  if (count != static_cast<std::uint32_t>(c.net.params.size()))
    throw CheckpointError("classifier: entry count mismatch");
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& e = c.net.params.at(static_cast<int>(i));
    const std::uint32_t name_len = get_u32();
    std::string name(name_len, '\0');
    if (name_len > 0) get_bytes(name.data(), name_len);
    const std::uint32_t rank = get_u32();
    std::vector<int> shape(rank);
    for (auto& d : shape) d = get_i32();
    if (name != e.name || shape != e.value.shape)
      throw CheckpointError("classifier: layout mismatch at " + e.name);
    get_bytes(e.value.data(), static_cast<std::size_t>(e.value.numel()) * sizeof(float));
  }
  return c;
}

GenerationRate expression_generation_rate(Classifier& c, const Tensor<float>& images,
                                          const std::vector<int>& intended,
                                          const std::vector<int>& exclude) {
  if (images.rank() != 4) throw ShapeError("expression_generation_rate expects [B,C,H,W]");
  check(static_cast<int>(intended.size()) == images.dim(0),
        "expression_generation_rate: one intended label per image required");
  const int K = c.cfg.num_classes;
  std::set<int> skip;
  for (int e : exclude) {
    check(e >= 0 && e < K, "expression_generation_rate: excluded class out of range");
    skip.insert(e);
  }
  GenerationRate out;
  out.confusion.assign(static_cast<std::size_t>(K),
                       std::vector<std::int64_t>(static_cast<std::size_t>(K), 0));
  const std::vector<int> pred = c.classify(images);
  std::int64_t used = 0, hits = 0;
  for (std::size_t i = 0; i < intended.size(); ++i) {
    const int want = intended[i];
    check(want >= 0 && want < K, "expression_generation_rate: intended label out of range");
    if (skip.count(want)) continue;
    ++used;
    ++out.confusion[static_cast<std::size_t>(want)][static_cast<std::size_t>(pred[i])];
    if (pred[i] == want) ++hits;
  }
  check(used > 0, "expression_generation_rate: no samples left after exclusion");
  out.accuracy = static_cast<double>(hits) / static_cast<double>(used);
  return out;
}

}  // namespace depthgan
