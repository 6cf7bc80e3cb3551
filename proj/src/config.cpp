#include "depthgan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace depthgan {

namespace {

using json = nlohmann::ordered_json;

// Tracks which keys were consumed so leftovers can be reported by path.
class StrictObj {
 public:
  StrictObj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected a JSON object");
  }

  template <typename F>
  void field(const char* key, F&& read) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      read(j_.at(key));
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void num(const char* key, double& out) {
    field(key, [&](const json& v) {
      if (!v.is_number()) throw ConfigError(path_ + "." + std::string(key) + ": expected number");
      out = v.get<double>();
    });
  }
  void num(const char* key, int& out) {
    field(key, [&](const json& v) {
      if (!v.is_number_integer())
        throw ConfigError(path_ + "." + std::string(key) + ": expected integer");
      out = v.get<int>();
    });
  }
  void num(const char* key, std::uint64_t& out) {
    field(key, [&](const json& v) {
      if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(path_ + "." + std::string(key) + ": expected unsigned integer");
      out = v.get<std::uint64_t>();
    });
  }
  void flag(const char* key, bool& out) {
    field(key, [&](const json& v) {
      if (!v.is_boolean()) throw ConfigError(path_ + "." + std::string(key) + ": expected bool");
      out = v.get<bool>();
    });
  }
  void str(const char* key, std::string& out) {
    field(key, [&](const json& v) {
      if (!v.is_string()) throw ConfigError(path_ + "." + std::string(key) + ": expected string");
      out = v.get<std::string>();
    });
  }
  void ints(const char* key, std::vector<int>& out) {
    field(key, [&](const json& v) {
      if (!v.is_array()) throw ConfigError(path_ + "." + std::string(key) + ": expected array");
      out.clear();
      for (const auto& x : v) {
        if (!x.is_number_integer())
          throw ConfigError(path_ + "." + std::string(key) + ": expected integer array");
        out.push_back(x.get<int>());
      }
    });
  }

  const json* object(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown config key: " + path_ + "." + it.key());
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_arch(const json& j, ArchConfig& a) {
  StrictObj o(j, "arch");
  o.num("height", a.height);
  o.num("width", a.width);
  o.num("num_classes", a.num_classes);
  o.num("g_base", a.g_base);
  o.num("g_down", a.g_down);
  o.num("g_res", a.g_res);
  o.num("d_base", a.d_base);
  o.num("d_layers", a.d_layers);
  o.ints("v_widths", a.v_widths);
  o.num("v_seed", a.v_seed);
  o.finish();
}

void read_train(const json& j, TrainConfig& t) {
  StrictObj o(j, "train");
  o.num("lr_initial", t.lr_initial);
  o.num("decay_interval", t.decay_interval);
  o.num("decay_factor", t.decay_factor);
  o.num("lr_floor", t.lr_floor);
  o.num("batch_pretrain", t.batch_pretrain);
  o.num("batch_end2end", t.batch_end2end);
  o.num("n_critic", t.n_critic);
  o.num("iters_pretrain", t.iters_pretrain);
  o.num("iters_end2end", t.iters_end2end);
  o.num("adam_beta1", t.adam_beta1);
  o.num("adam_beta2", t.adam_beta2);
  o.num("seed", t.seed);
  o.num("checkpoint_interval", t.checkpoint_interval);
  o.flag("freeze_depth", t.freeze_depth);
  o.flag("no_pretrain", t.no_pretrain);
  o.flag("saturating_adv_g", t.saturating_adv_g);
  o.flag("force_depth_side", t.force_depth_side);
  o.str("init_from", t.init_from);
  o.finish();
}

void read_loss(const json& j, LossWeights& w) {
  StrictObj o(j, "loss");
  o.num("lambda_adv", w.lambda_adv);
  o.num("lambda_cls", w.lambda_cls);
  o.num("lambda_rec", w.lambda_rec);
  o.num("lambda_pixel", w.lambda_pixel);
  o.num("lambda_perceptual", w.lambda_perceptual);
  o.num("depth_weight", w.depth_weight);
  o.num("beta", w.beta);
  o.finish();
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  StrictObj root(j, "config");
  root.num("schema_version", cfg.schema_version);
  if (const json* a = root.object("arch")) read_arch(*a, cfg.arch);
  if (const json* t = root.object("train")) read_train(*t, cfg.train);
  if (const json* l = root.object("loss")) read_loss(*l, cfg.loss);
  root.finish();
  cfg.validate();
  return cfg;
}

std::string RunConfig::to_json_text() const {
  json j;
  j["schema_version"] = schema_version;
  json& a = j["arch"];
  a["height"] = arch.height;
  a["width"] = arch.width;
  a["num_classes"] = arch.num_classes;
  a["g_base"] = arch.g_base;
  a["g_down"] = arch.g_down;
  a["g_res"] = arch.g_res;
  a["d_base"] = arch.d_base;
  a["d_layers"] = arch.d_layers;
  a["v_widths"] = arch.v_widths;
  a["v_seed"] = arch.v_seed;
  json& t = j["train"];
  t["lr_initial"] = train.lr_initial;
  t["decay_interval"] = train.decay_interval;
  t["decay_factor"] = train.decay_factor;
  t["lr_floor"] = train.lr_floor;
  t["batch_pretrain"] = train.batch_pretrain;
  t["batch_end2end"] = train.batch_end2end;
  t["n_critic"] = train.n_critic;
  t["iters_pretrain"] = train.iters_pretrain;
  t["iters_end2end"] = train.iters_end2end;
  t["adam_beta1"] = train.adam_beta1;
  t["adam_beta2"] = train.adam_beta2;
  t["seed"] = train.seed;
  t["checkpoint_interval"] = train.checkpoint_interval;
  t["freeze_depth"] = train.freeze_depth;
  t["no_pretrain"] = train.no_pretrain;
  t["saturating_adv_g"] = train.saturating_adv_g;
  t["force_depth_side"] = train.force_depth_side;
  t["init_from"] = train.init_from;
  json& l = j["loss"];
  l["lambda_adv"] = loss.lambda_adv;
  l["lambda_cls"] = loss.lambda_cls;
  l["lambda_rec"] = loss.lambda_rec;
  l["lambda_pixel"] = loss.lambda_pixel;
  l["lambda_perceptual"] = loss.lambda_perceptual;
  l["depth_weight"] = loss.depth_weight;
  l["beta"] = loss.beta;
  return j.dump(2) + "\n";
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return RunConfig::from_json_text(ss.str());
}

void save_config_file(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write config file: " + path);
  out << cfg.to_json_text();
  if (!out.good()) throw IoError("failed writing config file: " + path);
}

}  // namespace depthgan
