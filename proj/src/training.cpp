#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depthgan/training.hpp"

namespace depthgan {
namespace {

double need_finite(double x, const char* term) {
  if (!std::isfinite(x))
    throw NumericError(std::string("non-finite loss term: ") + term + " = " + std::to_string(x));
  return x;
}

// Forward direction flags for the depth generator, shared by every step.
Tensor<float> fwd_cond(int batch, int h, int w) {
  return direction_maps<float>(DepthDirection::rgb_to_depth, batch, h, w);
}

Tensor<float> bwd_cond(int batch, int h, int w) {
  return direction_maps<float>(DepthDirection::depth_to_rgb, batch, h, w);
}

}  // namespace

TrainState make_train_state(const RunConfig& cfg) {
  cfg.validate();
  TrainState st;
  st.cfg = cfg;
  st.model.arch = cfg.arch;
  st.model.build(cfg.train.seed);
  const AdamConfig ac{cfg.train.adam_beta1, cfg.train.adam_beta2, 1e-8};
  st.opt_g_rgb = Adam<float>(ac);
  st.opt_d_rgb = Adam<float>(ac);
  st.opt_g_depth = Adam<float>(ac);
  st.opt_d_depth = Adam<float>(ac);
  const Rng root(cfg.train.seed);
  st.rng_pretrain = root.stream("train/pretrain");
  st.rng_e2e = root.stream("train/e2e");
  return st;
}

Batch make_batch(const Dataset& ds, const std::vector<int>& indices) {
  check(!indices.empty(), "make_batch: empty index list");
  const int B = static_cast<int>(indices.size());
  const int H = ds.meta.height, W = ds.meta.width;
  Batch b{Tensor<float>({B, 3, H, W}), Tensor<float>({B, 1, H, W}), {}};
  b.labels.reserve(indices.size());
  const std::int64_t rgb_plane = 3LL * H * W;
  const std::int64_t depth_plane = 1LL * H * W;
  for (int i = 0; i < B; ++i) {
    const int idx = indices[static_cast<std::size_t>(i)];
    check(idx >= 0 && idx < static_cast<int>(ds.samples.size()), "make_batch: index out of range");
    const Sample& s = ds.samples[static_cast<std::size_t>(idx)];
    require_shape(s.rgb, {3, H, W}, "make_batch rgb");
    require_shape(s.depth, {1, H, W}, "make_batch depth");
    std::copy(s.rgb.v.begin(), s.rgb.v.end(), b.rgb.data() + i * rgb_plane);
    std::copy(s.depth.v.begin(), s.depth.v.end(), b.depth.data() + i * depth_plane);
    b.labels.push_back(s.label.index);
  }
  return b;
}

const char* phase_name(TrainPhase p) {
  switch (p) {
    case TrainPhase::pretrain: return "pretrain";
    case TrainPhase::e2e_rgb: return "e2e_rgb";
    case TrainPhase::e2e_depth: return "e2e_depth";
  }
  throw ValidationError("phase_name: bad phase");
}

double breakdown_total(const LossBreakdown& parts, const LossWeights& w, TrainPhase phase) {
  const double adv = w.lambda_adv * (parts.adv_d + parts.adv_g);
  switch (phase) {
    case TrainPhase::pretrain:
      return adv + w.lambda_cls * (parts.cls_real + parts.cls_fake - w.beta * parts.entropy) +
             w.lambda_rec * parts.rec + w.lambda_pixel * parts.pixel +
             w.lambda_perceptual * parts.perceptual;
    case TrainPhase::e2e_rgb:
      return adv + w.lambda_cls * (parts.cls_real + parts.cls_fake) + w.lambda_rec * parts.rec;
    case TrainPhase::e2e_depth:
      return adv + w.lambda_cls * (parts.cls_real + parts.cls_fake - w.beta * parts.entropy) +
             w.lambda_rec * parts.rec;
  }
  throw ValidationError("breakdown_total: bad phase");
}

LossBreakdown pretrain_depth_step(TrainState& st, const Batch& batch) {
  check(batch.rgb.dim(0) >= 1, "pretrain step: empty batch");
  const LossWeights& w = st.cfg.loss;
  const TrainConfig& tc = st.cfg.train;
  const int B = batch.rgb.dim(0), H = batch.rgb.dim(2), W = batch.rgb.dim(3);
  const double lr = lr_schedule(tc, st.iter_pretrain);
  const bool g_update = (st.iter_pretrain + 1) % tc.n_critic == 0;

  LossBreakdown out;

  {
    // Discriminator step: the depth generator runs frozen, so backward never
    // enters it.
    Graph<float> g;
    Var x = g.constant(batch.rgb);
    Var d_real = g.constant(batch.depth);
    Var cond = g.constant(fwd_cond(B, H, W));
    Var d_hat = st.model.g_depth.forward(g, x, cond, 0, false);
    DiscOut real = st.model.d_depth.forward(g, d_real, true);
    DiscOut fake = st.model.d_depth.forward(g, d_hat, true);
    Var adv_d = adversarial_loss_d(g, real.adv, fake.adv);
    Var cls_real = classification_loss(g, real.cls, batch.labels);
    Var ent_real = g.entropy_mean(real.cls);
    Var d_loss = g.wsum({{static_cast<float>(w.lambda_adv), adv_d},
                         {static_cast<float>(w.lambda_cls), cls_real},
                         {static_cast<float>(-w.lambda_cls * w.beta), ent_real}});
    out.adv_d = need_finite(g.v(adv_d)[0], "pretrain/adv_d");
    out.cls_real = need_finite(g.v(cls_real)[0], "pretrain/cls_real");
    out.entropy = need_finite(g.v(ent_real)[0], "pretrain/entropy");
    // Free measurements from the same forward (overwritten on generator
    // iterations below).
    out.adv_g = need_finite(g.v(adversarial_loss_g(g, fake.adv, tc.saturating_adv_g))[0],
                            "pretrain/adv_g");
    out.cls_fake =
        need_finite(g.v(classification_loss(g, fake.cls, batch.labels))[0], "pretrain/cls_fake");
    out.pixel = need_finite(g.v(pixel_loss(g, d_hat, d_real))[0], "pretrain/pixel");
    st.model.d_depth.params.zero_grads();
    g.backward(d_loss);
    st.opt_d_depth.step(st.model.d_depth.params, lr);
  }

  if (g_update) {
    Graph<float> g;
    Var x = g.constant(batch.rgb);
    Var d_real = g.constant(batch.depth);
    Var cond_f = g.constant(fwd_cond(B, H, W));
    Var cond_b = g.constant(bwd_cond(B, H, W));
    Var d_hat = st.model.g_depth.forward(g, x, cond_f, 0, true);
    DiscOut fake = st.model.d_depth.forward(g, d_hat, false);
    Var adv_g = adversarial_loss_g(g, fake.adv, tc.saturating_adv_g);
    Var cls_fake = classification_loss(g, fake.cls, batch.labels);
    Var back = st.model.g_depth.forward(g, g.replicate_channel(d_hat, 3), cond_b, 1, true);
    Var rec = cycle_reconstruction_loss(g, x, back);
    Var pix = pixel_loss(g, d_hat, d_real);
    Var per = perceptual_loss(g, st.model.v, d_hat, d_real);
    Var g_loss = g.wsum({{static_cast<float>(w.lambda_adv), adv_g},
                         {static_cast<float>(w.lambda_cls), cls_fake},
                         {static_cast<float>(w.lambda_rec), rec},
                         {static_cast<float>(w.lambda_pixel), pix},
                         {static_cast<float>(w.lambda_perceptual), per}});
    out.adv_g = need_finite(g.v(adv_g)[0], "pretrain/adv_g");
    out.cls_fake = need_finite(g.v(cls_fake)[0], "pretrain/cls_fake");
    out.rec = need_finite(g.v(rec)[0], "pretrain/rec");
    out.pixel = need_finite(g.v(pix)[0], "pretrain/pixel");
    out.perceptual = need_finite(g.v(per)[0], "pretrain/perceptual");
    st.model.g_depth.params.zero_grads();
    g.backward(g_loss);
    st.opt_g_depth.step(st.model.g_depth.params, lr);
  }

  out.total = breakdown_total(out, w, TrainPhase::pretrain);
  ++st.iter_pretrain;
  st.history.push(out);
  return out;
}

E2eStepResult end2end_step(TrainState& st, const Batch& batch, const std::vector<int>& targets) {
  check(batch.rgb.dim(0) >= 1, "end2end step: empty batch");
  check(targets.size() == batch.labels.size(), "end2end step: one target per sample required");
  const LossWeights& w = st.cfg.loss;
  const TrainConfig& tc = st.cfg.train;
  const int B = batch.rgb.dim(0), H = batch.rgb.dim(2), W = batch.rgb.dim(3);
  const int K = st.model.arch.num_classes;
  const double lr = lr_schedule(tc, st.iter_end2end);
  const bool g_update = (st.iter_end2end + 1) % tc.n_critic == 0;

  E2eStepResult res;
  res.depth_active = w.depth_weight > 0 || tc.force_depth_side;

  Tensor<float> it_val({1});  // translated batch, reused by the depth critic step
  {
    Graph<float> g;
    Var x = g.constant(batch.rgb);
    Var cond_t = g.constant(one_hot_maps<float>(targets, K, H, W));
    Var i_t = st.model.g_rgb.forward(g, x, cond_t, 0, false);
    DiscOut real = st.model.d_rgb.forward(g, x, true);
    DiscOut fake = st.model.d_rgb.forward(g, i_t, true);
    Var adv_d = adversarial_loss_d(g, real.adv, fake.adv);
    Var cls_real = classification_loss(g, real.cls, batch.labels);
    Var d_loss = g.wsum({{static_cast<float>(w.lambda_adv), adv_d},
                         {static_cast<float>(w.lambda_cls), cls_real}});
    res.rgb.adv_d = need_finite(g.v(adv_d)[0], "e2e_rgb/adv_d");
    res.rgb.cls_real = need_finite(g.v(cls_real)[0], "e2e_rgb/cls_real");
    res.rgb.adv_g = need_finite(g.v(adversarial_loss_g(g, fake.adv, tc.saturating_adv_g))[0],
                                "e2e_rgb/adv_g");
    res.rgb.cls_fake =
        need_finite(g.v(classification_loss(g, fake.cls, targets))[0], "e2e_rgb/cls_fake");
    it_val = g.v(i_t);
    st.model.d_rgb.params.zero_grads();
    g.backward(d_loss);
    st.opt_d_rgb.step(st.model.d_rgb.params, lr);
  }

  if (res.depth_active) {
    // Depth critic step on the translated batch; sees ground-truth depth of
    // the source images as real.
    Graph<float> g;
    const bool update = !tc.freeze_depth;
    Var i_t = g.constant(it_val);
    Var cond_f = g.constant(fwd_cond(B, H, W));
    Var d_t = st.model.g_depth.forward(g, i_t, cond_f, 0, false);
    DiscOut real = st.model.d_depth.forward(g, g.constant(batch.depth), update);
    DiscOut fake = st.model.d_depth.forward(g, d_t, update);
    Var adv_d = adversarial_loss_d(g, real.adv, fake.adv);
    Var cls_real = classification_loss(g, real.cls, batch.labels);
    Var ent_real = g.entropy_mean(real.cls);
    res.depth.adv_d = need_finite(g.v(adv_d)[0], "e2e_depth/adv_d");
    res.depth.cls_real = need_finite(g.v(cls_real)[0], "e2e_depth/cls_real");
    res.depth.entropy = need_finite(g.v(ent_real)[0], "e2e_depth/entropy");
    res.depth.adv_g = need_finite(g.v(adversarial_loss_g(g, fake.adv, tc.saturating_adv_g))[0],
                                  "e2e_depth/adv_g");
    res.depth.cls_fake =
        need_finite(g.v(classification_loss(g, fake.cls, targets))[0], "e2e_depth/cls_fake");
    if (update) {
      Var d_loss = g.wsum({{static_cast<float>(w.lambda_adv), adv_d},
                           {static_cast<float>(w.lambda_cls), cls_real},
                           {static_cast<float>(-w.lambda_cls * w.beta), ent_real}});
      st.model.d_depth.params.zero_grads();
      g.backward(d_loss);
      st.opt_d_depth.step(st.model.d_depth.params, lr);
    }
  }

  if (g_update) {
    // One combined backward so the depth losses reach the RGB generator
    // through the translated image.
    Graph<float> g;
    const bool depth_trainable = res.depth_active && !tc.freeze_depth;
    Var x = g.constant(batch.rgb);
    Var cond_t = g.constant(one_hot_maps<float>(targets, K, H, W));
    Var cond_s = g.constant(one_hot_maps<float>(batch.labels, K, H, W));
    Var i_t = st.model.g_rgb.forward(g, x, cond_t, 0, true);
    DiscOut fake = st.model.d_rgb.forward(g, i_t, false);
    Var adv_g = adversarial_loss_g(g, fake.adv, tc.saturating_adv_g);
    Var cls_fake = classification_loss(g, fake.cls, targets);
    Var i_rec = st.model.g_rgb.forward(g, i_t, cond_s, 0, true);
    Var rec = cycle_reconstruction_loss(g, x, i_rec);
    Var rgb_total = g.wsum({{static_cast<float>(w.lambda_adv), adv_g},
                            {static_cast<float>(w.lambda_cls), cls_fake},
                            {static_cast<float>(w.lambda_rec), rec}});
    res.rgb.adv_g = need_finite(g.v(adv_g)[0], "e2e_rgb/adv_g");
    res.rgb.cls_fake = need_finite(g.v(cls_fake)[0], "e2e_rgb/cls_fake");
    res.rgb.rec = need_finite(g.v(rec)[0], "e2e_rgb/rec");

    Var objective = rgb_total;
    if (res.depth_active) {
      Var cond_f = g.constant(fwd_cond(B, H, W));
      Var cond_b = g.constant(bwd_cond(B, H, W));
      Var d_t = st.model.g_depth.forward(g, i_t, cond_f, 0, depth_trainable);
      DiscOut dfake = st.model.d_depth.forward(g, d_t, false);
      Var adv_g_d = adversarial_loss_g(g, dfake.adv, tc.saturating_adv_g);
      Var cls_fake_d = classification_loss(g, dfake.cls, targets);
      Var back = st.model.g_depth.forward(g, g.replicate_channel(d_t, 3), cond_b, 1,
                                          depth_trainable);
      Var rec_d = cycle_reconstruction_loss(g, i_t, back);
      Var depth_total = g.wsum({{static_cast<float>(w.lambda_adv), adv_g_d},
                                {static_cast<float>(w.lambda_cls), cls_fake_d},
                                {static_cast<float>(w.lambda_rec), rec_d}});
      res.depth.adv_g = need_finite(g.v(adv_g_d)[0], "e2e_depth/adv_g");
      res.depth.cls_fake = need_finite(g.v(cls_fake_d)[0], "e2e_depth/cls_fake");
      res.depth.rec = need_finite(g.v(rec_d)[0], "e2e_depth/rec");
      objective = g.wsum({{1.0f, rgb_total}, {static_cast<float>(w.depth_weight), depth_total}});
    }

    st.model.g_rgb.params.zero_grads();
    if (depth_trainable) st.model.g_depth.params.zero_grads();
    g.backward(objective);
    st.opt_g_rgb.step(st.model.g_rgb.params, lr);
    if (depth_trainable) st.opt_g_depth.step(st.model.g_depth.params, lr);
  }

  res.rgb.total = breakdown_total(res.rgb, w, TrainPhase::e2e_rgb);
  res.depth.total = res.depth_active ? breakdown_total(res.depth, w, TrainPhase::e2e_depth) : 0.0;
  ++st.iter_end2end;
  st.history.push(res.rgb);
  if (res.depth_active) st.history.push(res.depth);
  return res;
}

namespace {

void write_curves_row(std::ofstream& os, std::int64_t iter, TrainPhase phase,
                      const LossBreakdown& b, double lr) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%lld,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                static_cast<long long>(iter), phase_name(phase), b.adv_d, b.adv_g, b.cls_real,
                b.cls_fake, b.rec, b.pixel, b.perceptual, b.entropy, b.total, lr);
  os << buf;
}

std::vector<int> draw_indices(Rng& rng, int count, int n) {
  std::vector<int> idx(static_cast<std::size_t>(count));
  for (auto& i : idx) i = rng.uniform_int(n);
  return idx;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const Dataset& ds, const std::string& out_dir) {
  cfg.validate();
  check(!ds.samples.empty(), "train: empty dataset");
  check(ds.meta.height == cfg.arch.height && ds.meta.width == cfg.arch.width,
        "train: dataset size does not match configured architecture");
  check(ds.meta.num_classes == cfg.arch.num_classes,
        "train: dataset class count does not match configured architecture");
  if (cfg.train.iters_end2end > 0 && cfg.train.iters_pretrain == 0 && !cfg.train.no_pretrain &&
      cfg.train.init_from.empty())
    throw ConfigError(
        "end-to-end training requires a pre-trained depth network; "
        "set iters_pretrain > 0, pass init_from, or enable no_pretrain");

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.dgck").string();
  const std::string curves_path = (fs::path(out_dir) / "curves.csv").string();

  TrainState st = make_train_state(cfg);
  if (!cfg.train.init_from.empty()) warm_start_depth(st, cfg.train.init_from);

  std::ofstream curves(curves_path, std::ios::trunc);
  if (!curves) throw IoError("train: cannot write " + curves_path);
  curves << "iter,phase,adv_d,adv_g,cls_real,cls_fake,rec,pixel,perceptual,entropy,total,lr\n";

  const int n = static_cast<int>(ds.samples.size());
  for (std::int64_t i = 0; i < cfg.train.iters_pretrain; ++i) {
    const double lr = lr_schedule(cfg.train, st.iter_pretrain);
    const Batch batch = make_batch(ds, draw_indices(st.rng_pretrain, cfg.train.batch_pretrain, n));
    const LossBreakdown b = pretrain_depth_step(st, batch);
    write_curves_row(curves, st.iter_pretrain, TrainPhase::pretrain, b, lr);
    if (cfg.train.checkpoint_interval > 0 && st.iter_pretrain % cfg.train.checkpoint_interval == 0)
      save_checkpoint(ckpt_path, st);
  }

  for (std::int64_t i = 0; i < cfg.train.iters_end2end; ++i) {
    const double lr = lr_schedule(cfg.train, st.iter_end2end);
    const std::vector<int> idx = draw_indices(st.rng_e2e, cfg.train.batch_end2end, n);
    const std::vector<int> targets =
        draw_indices(st.rng_e2e, cfg.train.batch_end2end, cfg.arch.num_classes);
    const Batch batch = make_batch(ds, idx);
    const E2eStepResult r = end2end_step(st, batch, targets);
    write_curves_row(curves, st.iter_end2end, TrainPhase::e2e_rgb, r.rgb, lr);
    if (r.depth_active)
      write_curves_row(curves, st.iter_end2end, TrainPhase::e2e_depth, r.depth, lr);
    if (cfg.train.checkpoint_interval > 0 && st.iter_end2end % cfg.train.checkpoint_interval == 0)
      save_checkpoint(ckpt_path, st);
  }

  curves.flush();
  if (!curves) throw IoError("train: write failed for " + curves_path);
  save_checkpoint(ckpt_path, st);
  return {ckpt_path, curves_path};
}

RgbImage translate(ModelBundle<float>& m, const RgbImage& img, int target) {
  validate_rgb(img, "translate");
  check(target >= 0 && target < m.arch.num_classes, "translate: target class out of range");
  Tensor<float> x({1, 3, img.dim(1), img.dim(2)});
  std::copy(img.v.begin(), img.v.end(), x.data());
  Tensor<float> y = generate_rgb(m.g_rgb, x, {target});
  RgbImage out({3, img.dim(1), img.dim(2)});
  std::copy(y.v.begin(), y.v.end(), out.data());
  return out;
}

DepthMap estimate_depth(ModelBundle<float>& m, const RgbImage& img) {
  validate_rgb(img, "estimate_depth");
  Tensor<float> x({1, 3, img.dim(1), img.dim(2)});
  std::copy(img.v.begin(), img.v.end(), x.data());
  Tensor<float> y = generate_depth(m.g_depth, x, DepthDirection::rgb_to_depth);
  DepthMap out({1, img.dim(1), img.dim(2)});
  std::copy(y.v.begin(), y.v.end(), out.data());
  return out;
}

}  // namespace depthgan
