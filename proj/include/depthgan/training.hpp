#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/config.hpp"
#include "depthgan/dataset.hpp"
#include "depthgan/losses.hpp"
#include "depthgan/nets.hpp"

namespace depthgan {

// Recent LossBreakdowns, capped; diagnostic only, not checkpointed.
class HistoryRing {
 public:
  explicit HistoryRing(std::size_t cap = 256) : cap_(cap) {}
  void push(const LossBreakdown& b) {
    if (rows_.size() < cap_) {
      rows_.push_back(b);
    } else {
      rows_[next_] = b;
      next_ = (next_ + 1) % cap_;
    }
  }
  std::size_t size() const { return rows_.size(); }
  std::size_t capacity() const { return cap_; }

 private:
  std::size_t cap_;
  std::size_t next_ = 0;
  std::vector<LossBreakdown> rows_;
};

// One optimizer per network; the depth side never perturbs the RGB side's
// random streams, so disabling it (depth_weight 0) leaves the RGB trajectory
// untouched.
struct TrainState {
  RunConfig cfg;
  ModelBundle<float> model;
  Adam<float> opt_g_rgb, opt_d_rgb, opt_g_depth, opt_d_depth;
  std::int64_t iter_pretrain = 0;
  std::int64_t iter_end2end = 0;
  Rng rng_pretrain{0};
  Rng rng_e2e{0};
  HistoryRing history;
};

TrainState make_train_state(const RunConfig& cfg);

struct Batch {
  Tensor<float> rgb;    // [B,3,H,W]
  Tensor<float> depth;  // [B,1,H,W]
  std::vector<int> labels;
};

Batch make_batch(const Dataset& ds, const std::vector<int>& indices);

enum class TrainPhase { pretrain, e2e_rgb, e2e_depth };

const char* phase_name(TrainPhase p);

// The pinned reporting identity: LossBreakdown.total always equals this
// combination of its recorded parts.
//   pretrain:  adv terms + cls terms - beta*entropy (all under their lambdas)
//              + lambda_rec*rec + lambda_pixel*pixel + lambda_perceptual*perceptual
//   e2e_rgb:   lambda_adv*(adv_d+adv_g) + lambda_cls*(cls_real+cls_fake) + lambda_rec*rec
//   e2e_depth: same as e2e_rgb minus lambda_cls*beta*entropy
double breakdown_total(const LossBreakdown& parts, const LossWeights& w, TrainPhase phase);

// One discriminator update; every n_critic-th call also updates the
// generator. Values are measured on this call's batch: D-side terms before
// the D update, G-side terms from whichever graph computed them last.
LossBreakdown pretrain_depth_step(TrainState& st, const Batch& batch);

struct E2eStepResult {
  LossBreakdown rgb;
  LossBreakdown depth;
  bool depth_active = false;
};

E2eStepResult end2end_step(TrainState& st, const Batch& batch, const std::vector<int>& targets);

struct TrainResult {
  std::string checkpoint_path;
  std::string curves_path;
};

// Runs the pretrain phase then the end-to-end phase, appending per-iteration
// rows to curves.csv (one row per pretrain iter; an e2e iter adds an e2e_rgb
// row plus an e2e_depth row when the depth pathway is active) and writing
// periodic + final checkpoints under out_dir.
TrainResult train(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Checkpoints: "DGCK" binary container, atomic write, refuses hash mismatch.
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const TrainState& st);
void load_checkpoint(const std::string& path, TrainState& st);  // model must match arch
RunConfig checkpoint_config(const std::string& path);           // embedded config only
TrainState load_train_state(const std::string& path);           // rebuild + load
void warm_start_depth(TrainState& st, const std::string& path);  // depth nets + moments only

// ---------------------------------------------------------------------------
// Inference on single images
// ---------------------------------------------------------------------------

RgbImage translate(ModelBundle<float>& m, const RgbImage& img, int target);
DepthMap estimate_depth(ModelBundle<float>& m, const RgbImage& img);

}  // namespace depthgan
