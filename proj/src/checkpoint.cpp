#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depthgan/training.hpp"

namespace depthgan {
namespace {

constexpr char kMagic[4] = {'D', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void put(std::ostream& os, T x) {
  put_bytes(os, &x, sizeof x);
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  put_bytes(os, s.data(), s.size());
}

void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw CheckpointError("checkpoint: truncated file");
}

template <typename T>
T get(std::istream& is) {
  T x;
  get_bytes(is, &x, sizeof x);
  return x;
}

std::string get_string(std::istream& is) {
  const auto n = get<std::uint64_t>(is);
  if (n > (1u << 30)) throw CheckpointError("checkpoint: implausible string length");
  std::string s(static_cast<std::size_t>(n), '\0');
  if (n > 0) get_bytes(is, s.data(), static_cast<std::size_t>(n));
  return s;
}

void put_store(std::ostream& os, const ParamStore<float>& ps) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ps.size()));
  for (const auto& e : ps.entries()) {
    put_string(os, e.name);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.value.rank()));
    for (int d = 0; d < e.value.rank(); ++d) put<std::int32_t>(os, e.value.shape[d]);
    const std::size_t n = static_cast<std::size_t>(e.value.numel());
    put_bytes(os, e.value.data(), n * sizeof(float));
    put_bytes(os, e.m.data(), n * sizeof(float));
    put_bytes(os, e.v.data(), n * sizeof(float));
  }
}

struct StoreBlob {
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> value, m, v;
  };
  std::vector<Entry> entries;
};

StoreBlob get_store(std::istream& is) {
  StoreBlob sb;
  const auto count = get<std::uint32_t>(is);
  sb.entries.resize(count);
  for (auto& e : sb.entries) {
    e.name = get_string(is);
    const auto rank = get<std::uint32_t>(is);
    if (rank > 8) throw CheckpointError("checkpoint: implausible tensor rank");
    e.shape.resize(rank);
    std::int64_t n = 1;
    for (auto& d : e.shape) {
      d = get<std::int32_t>(is);
      if (d <= 0) throw CheckpointError("checkpoint: bad tensor dim");
      n *= d;
    }
    e.value.resize(static_cast<std::size_t>(n));
    e.m.resize(static_cast<std::size_t>(n));
    e.v.resize(static_cast<std::size_t>(n));
    get_bytes(is, e.value.data(), e.value.size() * sizeof(float));
    get_bytes(is, e.m.data(), e.m.size() * sizeof(float));
    get_bytes(is, e.v.data(), e.v.size() * sizeof(float));
  }
  return sb;
}

void apply_store(const StoreBlob& sb, ParamStore<float>& ps, const char* which) {
  if (sb.entries.size() != static_cast<std::size_t>(ps.size()))
    throw CheckpointError(std::string("checkpoint: ") + which + ": entry count mismatch");
  for (std::size_t i = 0; i < sb.entries.size(); ++i) {
    const auto& src = sb.entries[i];
    auto& dst = ps.at(static_cast<int>(i));
    if (src.name != dst.name || src.shape != dst.value.shape)
      throw CheckpointError(std::string("checkpoint: ") + which + ": layout mismatch at " + dst.name);
    std::copy(src.value.begin(), src.value.end(), dst.value.data());
    std::copy(src.m.begin(), src.m.end(), dst.m.data());
    std::copy(src.v.begin(), src.v.end(), dst.v.data());
  }
}

struct FileHeader {
  std::uint64_t arch_hash = 0;
  std::int64_t iter_pretrain = 0;
  std::int64_t iter_end2end = 0;
  std::int64_t t_g_rgb = 0, t_d_rgb = 0, t_g_depth = 0, t_d_depth = 0;
  std::string rng_pretrain, rng_e2e, config_json;
};

FileHeader read_header(std::istream& is) {
  char magic[4];
  get_bytes(is, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion)
    throw SchemaVersionError("checkpoint: unsupported version " + std::to_string(version));
  FileHeader h;
  h.arch_hash = get<std::uint64_t>(is);
  h.iter_pretrain = get<std::int64_t>(is);
  h.iter_end2end = get<std::int64_t>(is);
  h.t_g_rgb = get<std::int64_t>(is);
  h.t_d_rgb = get<std::int64_t>(is);
  h.t_g_depth = get<std::int64_t>(is);
  h.t_d_depth = get<std::int64_t>(is);
  h.rng_pretrain = get_string(is);
  h.rng_e2e = get_string(is);
  h.config_json = get_string(is);
  return h;
}

std::ifstream open_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw MissingFileError("checkpoint: cannot open " + path);
  return is;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& st) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot write " + tmp.string());
    put_bytes(os, kMagic, 4);
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, st.model.arch_hash());
    put<std::int64_t>(os, st.iter_pretrain);
    put<std::int64_t>(os, st.iter_end2end);
    put<std::int64_t>(os, st.opt_g_rgb.t());
    put<std::int64_t>(os, st.opt_d_rgb.t());
    put<std::int64_t>(os, st.opt_g_depth.t());
    put<std::int64_t>(os, st.opt_d_depth.t());
    put_string(os, st.rng_pretrain.serialize());
    put_string(os, st.rng_e2e.serialize());
    put_string(os, st.cfg.to_json_text());
    put_store(os, st.model.g_rgb.params);
    put_store(os, st.model.g_depth.params);
    put_store(os, st.model.d_rgb.params);
    put_store(os, st.model.d_depth.params);
    put_store(os, st.model.v.params);
    os.flush();
    if (!os) throw IoError("checkpoint: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

void load_checkpoint(const std::string& path, TrainState& st) {
  auto is = open_checkpoint(path);
  const FileHeader h = read_header(is);
  if (h.arch_hash != st.model.arch_hash())
    throw CheckpointError("checkpoint: architecture hash mismatch");
  const StoreBlob g_rgb = get_store(is);
  const StoreBlob g_depth = get_store(is);
  const StoreBlob d_rgb = get_store(is);
  const StoreBlob d_depth = get_store(is);
  const StoreBlob v = get_store(is);
  apply_store(g_rgb, st.model.g_rgb.params, "g_rgb");
  apply_store(g_depth, st.model.g_depth.params, "g_depth");
  apply_store(d_rgb, st.model.d_rgb.params, "d_rgb");
  apply_store(d_depth, st.model.d_depth.params, "d_depth");
  apply_store(v, st.model.v.params, "v");
  st.iter_pretrain = h.iter_pretrain;
  st.iter_end2end = h.iter_end2end;
  st.opt_g_rgb.set_t(h.t_g_rgb);
  st.opt_d_rgb.set_t(h.t_d_rgb);
  st.opt_g_depth.set_t(h.t_g_depth);
  st.opt_d_depth.set_t(h.t_d_depth);
  st.rng_pretrain = Rng::deserialize(h.rng_pretrain);
  st.rng_e2e = Rng::deserialize(h.rng_e2e);
}

RunConfig checkpoint_config(const std::string& path) {
  auto is = open_checkpoint(path);
  const FileHeader h = read_header(is);
  return RunConfig::from_json_text(h.config_json);
}

TrainState load_train_state(const std::string& path) {
  TrainState st = make_train_state(checkpoint_config(path));
  load_checkpoint(path, st);
  return st;
}

void warm_start_depth(TrainState& st, const std::string& path) {
  auto is = open_checkpoint(path);
  const FileHeader h = read_header(is);
  if (h.arch_hash != st.model.arch_hash())
    throw CheckpointError("checkpoint: architecture hash mismatch for warm start");
  const StoreBlob g_rgb = get_store(is);
  const StoreBlob g_depth = get_store(is);
  const StoreBlob d_rgb = get_store(is);
  const StoreBlob d_depth = get_store(is);
  apply_store(g_depth, st.model.g_depth.params, "g_depth");
  apply_store(d_depth, st.model.d_depth.params, "d_depth");
  st.opt_g_depth.set_t(h.t_g_depth);
  st.opt_d_depth.set_t(h.t_d_depth);
  st.iter_pretrain = h.iter_pretrain;
}

}  // namespace depthgan
