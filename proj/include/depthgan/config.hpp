#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "depthgan/common.hpp"
#include "depthgan/losses.hpp"
#include "depthgan/nets.hpp"

namespace depthgan {

struct TrainConfig {
  double lr_initial = 1e-4;
  int decay_interval = 1000;
  double decay_factor = 0.98;
  double lr_floor = 1e-6;
  int batch_pretrain = 15;
  int batch_end2end = 8;
  int n_critic = 5;
  int iters_pretrain = 2000;
  int iters_end2end = 2000;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  std::uint64_t seed = 0;
  int checkpoint_interval = 500;
  bool freeze_depth = false;      // keep depth nets fixed during end-to-end
  bool no_pretrain = false;       // allow end-to-end from scratch
  bool saturating_adv_g = false;  // literal minimax generator term
  bool force_depth_side = false;  // run the depth pathway even at depth_weight 0
  std::string init_from;          // checkpoint to warm-start the depth nets from

  void validate() const {
    check(lr_initial > 0, "train: lr_initial must be positive");
    check(decay_interval > 0, "train: decay_interval must be positive");
    check(decay_factor > 0 && decay_factor <= 1, "train: decay_factor must be in (0,1]");
    check(lr_floor > 0 && lr_floor <= lr_initial, "train: lr_floor must be in (0, lr_initial]");
    check(batch_pretrain >= 1 && batch_end2end >= 1, "train: batch sizes must be >= 1");
    check(n_critic >= 1, "train: n_critic must be >= 1");
    check(iters_pretrain >= 0 && iters_end2end >= 0, "train: iteration counts must be >= 0");
    check(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1,
          "train: adam betas must be in [0,1)");
    check(checkpoint_interval >= 1, "train: checkpoint_interval must be >= 1");
  }
};

// lr_initial * decay_factor^floor(iter / decay_interval), floored.
inline double lr_schedule(const TrainConfig& cfg, std::int64_t iter) {
  check(iter >= 0, "lr_schedule: iter must be >= 0");
  double lr = cfg.lr_initial *
              std::pow(cfg.decay_factor, static_cast<double>(iter / cfg.decay_interval));
  return std::max(lr, cfg.lr_floor);
}

struct RunConfig {
  int schema_version = 1;
  ArchConfig arch;
  TrainConfig train;
  LossWeights loss;

  void validate() const {
    check(schema_version == 1, "config: unsupported schema_version");
    arch.validate();
    train.validate();
    loss.validate();
  }

  // Strict JSON: unknown keys are rejected with their full path, types are
  // enforced, missing keys keep defaults.
  static RunConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& cfg);

}  // namespace depthgan
