#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "depthgan/classifier.hpp"
#include "depthgan/dataset.hpp"
#include "depthgan/evaluate.hpp"
#include "depthgan/plot.hpp"
#include "depthgan/training.hpp"

namespace fs = std::filesystem;
using namespace depthgan;

namespace {

// ---------------------------------------------------------------------------
// Config resolution: config file < DEPTHGAN_SEED env < explicit flags.
// ---------------------------------------------------------------------------

struct CfgFlags {
  std::string config_path;
  int image_size = 0;
  int classes = 0;
  int g_base = 0, g_down = 0, g_res = 0, d_base = 0, d_layers = 0;
  std::uint64_t seed = 0;
  double lr = 0;
  int n_critic = 0, batch_pretrain = 0, batch_end2end = 0;
  int iters_pretrain = 0, iters_end2end = 0, checkpoint_interval = 0;
  bool freeze_depth = false, no_pretrain = false, saturating_adv_g = false;
  std::string init_from;
  double depth_weight = 0, beta = 0;
  double lambda_adv = 0, lambda_cls = 0, lambda_rec = 0, lambda_pixel = 0, lambda_perceptual = 0;

  CLI::Option* o_image_size = nullptr;
  CLI::Option* o_classes = nullptr;
  CLI::Option* o_g_base = nullptr;
  CLI::Option* o_g_down = nullptr;
  CLI::Option* o_g_res = nullptr;
  CLI::Option* o_d_base = nullptr;
  CLI::Option* o_d_layers = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_lr = nullptr;
  CLI::Option* o_n_critic = nullptr;
  CLI::Option* o_batch_pretrain = nullptr;
  CLI::Option* o_batch_end2end = nullptr;
  CLI::Option* o_iters_pretrain = nullptr;
  CLI::Option* o_iters_end2end = nullptr;
  CLI::Option* o_checkpoint_interval = nullptr;
  CLI::Option* o_freeze_depth = nullptr;
  CLI::Option* o_no_pretrain = nullptr;
  CLI::Option* o_saturating = nullptr;
  CLI::Option* o_init_from = nullptr;
  CLI::Option* o_depth_weight = nullptr;
  CLI::Option* o_beta = nullptr;
  CLI::Option* o_lambda_adv = nullptr;
  CLI::Option* o_lambda_cls = nullptr;
  CLI::Option* o_lambda_rec = nullptr;
  CLI::Option* o_lambda_pixel = nullptr;
  CLI::Option* o_lambda_perceptual = nullptr;
};

void add_cfg_flags(CLI::App* cmd, CfgFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (flags override its values)");
  f.o_image_size = cmd->add_option("--image-size", f.image_size, "square image size");
  f.o_classes = cmd->add_option("--classes", f.classes, "number of expression classes");
  f.o_g_base = cmd->add_option("--g-base", f.g_base, "generator base width");
  f.o_g_down = cmd->add_option("--g-down", f.g_down, "generator downsampling stages");
  f.o_g_res = cmd->add_option("--g-res", f.g_res, "generator residual blocks");
  f.o_d_base = cmd->add_option("--d-base", f.d_base, "discriminator base width");
  f.o_d_layers = cmd->add_option("--d-layers", f.d_layers, "discriminator conv layers");
  f.o_seed = cmd->add_option("--seed", f.seed, "training seed");
  f.o_lr = cmd->add_option("--lr", f.lr, "initial learning rate");
  f.o_n_critic = cmd->add_option("--n-critic", f.n_critic, "discriminator steps per generator step");
  f.o_batch_pretrain = cmd->add_option("--batch-pretrain", f.batch_pretrain, "pretraining batch size");
  f.o_batch_end2end = cmd->add_option("--batch-end2end", f.batch_end2end, "end-to-end batch size");
  f.o_iters_pretrain = cmd->add_option("--iters-pretrain", f.iters_pretrain, "pretraining iterations");
  f.o_iters_end2end = cmd->add_option("--iters-end2end", f.iters_end2end, "end-to-end iterations");
  f.o_checkpoint_interval =
      cmd->add_option("--checkpoint-interval", f.checkpoint_interval, "iterations between saves");
  f.o_freeze_depth = cmd->add_flag("--freeze-depth", f.freeze_depth,
                                   "keep depth networks fixed during end-to-end training");
  f.o_no_pretrain = cmd->add_flag("--no-pretrain", f.no_pretrain,
                                  "allow end-to-end training without depth pretraining");
  f.o_saturating =
      cmd->add_flag("--saturating-adv-g", f.saturating_adv_g, "literal minimax generator term");
  f.o_init_from = cmd->add_option("--init-from", f.init_from, "warm-start depth nets from checkpoint");
  f.o_depth_weight = cmd->add_option("--depth-weight", f.depth_weight,
                                     "weight of the depth loss on the RGB generator");
  f.o_beta = cmd->add_option("--beta", f.beta, "confidence penalty strength");
  f.o_lambda_adv = cmd->add_option("--lambda-adv", f.lambda_adv, "adversarial weight");
  f.o_lambda_cls = cmd->add_option("--lambda-cls", f.lambda_cls, "classification weight");
  f.o_lambda_rec = cmd->add_option("--lambda-rec", f.lambda_rec, "reconstruction weight");
  f.o_lambda_pixel = cmd->add_option("--lambda-pixel", f.lambda_pixel, "pretraining pixel weight");
  f.o_lambda_perceptual =
      cmd->add_option("--lambda-perceptual", f.lambda_perceptual, "pretraining perceptual weight");
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* env = std::getenv("DEPTHGAN_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(env, &pos);
    if (pos != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError(std::string("DEPTHGAN_SEED is not a valid unsigned integer: ") + env);
  }
}

RunConfig resolve_config(const CfgFlags& f) {
  RunConfig cfg;
  bool file_sets_seed = false;
  if (!f.config_path.empty()) {
    std::ifstream is(f.config_path);
    if (!is) throw ConfigError("cannot open config file " + f.config_path);
    const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    cfg = RunConfig::from_json_text(text);
    const nlohmann::json raw = nlohmann::json::parse(text);
    file_sets_seed = raw.contains("train") && raw["train"].contains("seed");
  }
  if (f.o_image_size->count()) cfg.arch.height = cfg.arch.width = f.image_size;
  if (f.o_classes->count()) cfg.arch.num_classes = f.classes;
  if (f.o_g_base->count()) cfg.arch.g_base = f.g_base;
  if (f.o_g_down->count()) cfg.arch.g_down = f.g_down;
  if (f.o_g_res->count()) cfg.arch.g_res = f.g_res;
  if (f.o_d_base->count()) cfg.arch.d_base = f.d_base;
  if (f.o_d_layers->count()) cfg.arch.d_layers = f.d_layers;
  if (f.o_lr->count()) cfg.train.lr_initial = f.lr;
  if (f.o_n_critic->count()) cfg.train.n_critic = f.n_critic;
  if (f.o_batch_pretrain->count()) cfg.train.batch_pretrain = f.batch_pretrain;
  if (f.o_batch_end2end->count()) cfg.train.batch_end2end = f.batch_end2end;
  if (f.o_iters_pretrain->count()) cfg.train.iters_pretrain = f.iters_pretrain;
  if (f.o_iters_end2end->count()) cfg.train.iters_end2end = f.iters_end2end;
  if (f.o_checkpoint_interval->count()) cfg.train.checkpoint_interval = f.checkpoint_interval;
  if (f.o_freeze_depth->count()) cfg.train.freeze_depth = true;
  if (f.o_no_pretrain->count()) cfg.train.no_pretrain = true;
  if (f.o_saturating->count()) cfg.train.saturating_adv_g = true;
  if (f.o_init_from->count()) cfg.train.init_from = f.init_from;
  if (f.o_depth_weight->count()) cfg.loss.depth_weight = f.depth_weight;
  if (f.o_beta->count()) cfg.loss.beta = f.beta;
  if (f.o_lambda_adv->count()) cfg.loss.lambda_adv = f.lambda_adv;
  if (f.o_lambda_cls->count()) cfg.loss.lambda_cls = f.lambda_cls;
  if (f.o_lambda_rec->count()) cfg.loss.lambda_rec = f.lambda_rec;
  if (f.o_lambda_pixel->count()) cfg.loss.lambda_pixel = f.lambda_pixel;
  if (f.o_lambda_perceptual->count()) cfg.loss.lambda_perceptual = f.lambda_perceptual;

  if (f.o_seed->count())
    cfg.train.seed = f.seed;
  else if (!file_sets_seed)
    cfg.train.seed = env_seed_or(cfg.train.seed);

  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Shared evaluation plumbing
// ---------------------------------------------------------------------------

struct EvalFlags {
  std::string classifier_path;
  bool auto_classifier = false;
  int classifier_iters = 300;
  std::vector<int> exclude;
  int bins = 20;
  bool same_label_recon = false;
  int max_samples = 0;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--classifier", f.classifier_path, "trained classifier checkpoint (.dgcl)");
  cmd->add_flag("--auto-classifier", f.auto_classifier,
                "train an expression classifier on the dataset first");
  cmd->add_option("--classifier-iters", f.classifier_iters, "auto-classifier training iterations");
  cmd->add_option("--exclude-classes", f.exclude, "classes dropped from the accuracy average")
      ->delimiter(',');
  cmd->add_option("--bins", f.bins, "identity histogram bins");
  cmd->add_flag("--same-label-recon", f.same_label_recon,
                "score same-label translation instead of the cycle reconstruction");
  cmd->add_option("--max-samples", f.max_samples, "evaluate at most this many samples (0 = all)");
}

Classifier obtain_classifier(const EvalFlags& f, const Dataset& ds, const fs::path& out_dir) {
  if (!f.classifier_path.empty()) return load_classifier(f.classifier_path);
  if (!f.auto_classifier)
    throw MissingFileError("no classifier: pass --classifier FILE or --auto-classifier");
  ClassifierConfig ccfg;
  ccfg.height = ds.meta.height;
  ccfg.width = ds.meta.width;
  ccfg.num_classes = ds.meta.num_classes;
  ccfg.iters = f.classifier_iters;
  std::printf("training classifier: %d iterations on %zu samples\n", ccfg.iters,
              ds.samples.size());
  Classifier c = train_classifier(ds, ccfg);
  const std::string path = (out_dir / "classifier.dgcl").string();
  save_classifier(path, c);
  std::printf("classifier: %s (train accuracy %.3f)\n", path.c_str(),
              classifier_accuracy(c, ds));
  return c;
}

MetricReport run_evaluation(TrainState& st, Classifier& cls, const Dataset& ds,
                            const EvalFlags& f, const fs::path& out_dir) {
  EvaluateOptions opt;
  opt.exclude_classes = f.exclude;
  opt.hist_bins = f.bins;
  opt.cycle_reconstruction = !f.same_label_recon;
  opt.max_samples = f.max_samples;
  const MetricReport r = evaluate_model(st.model, cls, ds, opt);
  write_report(out_dir.string(), r);
  std::printf(
      "report: %s\n  generation_rate %.4f  fid %.4f  psnr %.2f  ssim %.4f  id_mean %.4f\n",
      (out_dir / "report.json").string().c_str(), r.generation_rate, r.fid, r.psnr_mean,
      r.ssim_mean, r.id_mean);
  return r;
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

int cmd_make_dataset(const MakeDatasetOptions& opts_in, bool seed_given) {
  MakeDatasetOptions opts = opts_in;
  if (!seed_given) opts.seed = env_seed_or(opts.seed);
  const int n = make_dataset(opts);
  std::printf("wrote %d samples to %s\n", n, opts.out_dir.c_str());
  return 0;
}

int cmd_train(const CfgFlags& flags, const std::string& data_dir, const std::string& out_dir,
              bool pretrain_only) {
  RunConfig cfg = resolve_config(flags);
  if (pretrain_only) cfg.train.iters_end2end = 0;
  const Dataset ds = load_dataset(data_dir);
  fs::create_directories(out_dir);
  save_config_file((fs::path(out_dir) / "config.json").string(), cfg);
  const TrainResult r = train(cfg, ds, out_dir);
  std::printf("checkpoint: %s\ncurves: %s\n", r.checkpoint_path.c_str(), r.curves_path.c_str());
  return 0;
}

RgbImage load_input_image(const std::string& path, const ArchConfig& arch) {
  const RgbImage img = from_rgb8(read_png_rgb8(path));
  if (img.dim(1) != arch.height || img.dim(2) != arch.width)
    throw ValidationError("input " + path + " is " + std::to_string(img.dim(2)) + "x" +
                          std::to_string(img.dim(1)) + ", model expects " +
                          std::to_string(arch.width) + "x" + std::to_string(arch.height));
  return img;
}

void blit_columns(Tensor<float>& dst, const Tensor<float>& src, int col_offset) {
  const int H = src.dim(1), W = src.dim(2);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < H; ++y)
      std::copy(src.data() + (static_cast<std::int64_t>(c) * H + y) * W,
                src.data() + (static_cast<std::int64_t>(c) * H + y) * W + W,
                dst.data() + (static_cast<std::int64_t>(c) * H + y) * dst.dim(2) + col_offset);
}

int cmd_translate(const std::string& checkpoint, const std::vector<std::string>& inputs,
                  int target, bool target_given, bool grid, const std::string& out_dir) {
  if (grid == target_given)
    throw ConfigError("translate needs exactly one of --target K or --grid");
  TrainState st = load_train_state(checkpoint);
  const int K = st.cfg.arch.num_classes;
  fs::create_directories(out_dir);
  for (const std::string& in : inputs) {
    const RgbImage img = load_input_image(in, st.cfg.arch);
    const std::string stem = fs::path(in).stem().string();
    if (grid) {
      const int H = img.dim(1), W = img.dim(2);
      Tensor<float> montage({3, H, W * (K + 1)});
      blit_columns(montage, img, 0);
      for (int k = 0; k < K; ++k) blit_columns(montage, translate(st.model, img, k), (k + 1) * W);
      const std::string out = (fs::path(out_dir) / (stem + "_grid.png")).string();
      write_png_rgb8(out, to_rgb8(montage));
      std::printf("wrote %s\n", out.c_str());
    } else {
      const RgbImage t = translate(st.model, img, target);
      const std::string out =
          (fs::path(out_dir) / (stem + "_to" + std::to_string(target) + ".png")).string();
      write_png_rgb8(out, to_rgb8(t));
      std::printf("wrote %s\n", out.c_str());
    }
  }
  return 0;
}

int cmd_estimate_depth(const std::string& checkpoint, const std::vector<std::string>& inputs,
                       const std::string& out_dir) {
  TrainState st = load_train_state(checkpoint);
  fs::create_directories(out_dir);
  for (const std::string& in : inputs) {
    const RgbImage img = load_input_image(in, st.cfg.arch);
    const DepthMap d = estimate_depth(st.model, img);
    Gray16Image g16;
    g16.height = d.dim(1);
    g16.width = d.dim(2);
    g16.pixels.resize(d.v.size());
    for (std::size_t i = 0; i < d.v.size(); ++i) g16.pixels[i] = quantize16(d.v[i], -1.0f, 1.0f);
    const std::string out =
        (fs::path(out_dir) / (fs::path(in).stem().string() + "_depth.png")).string();
    write_png_gray16(out, g16);
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& data_dir,
                 const std::string& out_dir, const EvalFlags& ef) {
  TrainState st = load_train_state(checkpoint);
  const Dataset ds = load_dataset(data_dir);
  fs::create_directories(out_dir);
  Classifier cls = obtain_classifier(ef, ds, out_dir);
  run_evaluation(st, cls, ds, ef, out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// Sweep: one axis, one subprocess per value, shared classifier for scoring.
// ---------------------------------------------------------------------------

using ParamSetter = void (*)(RunConfig&, double);

const std::vector<std::pair<std::string, ParamSetter>> kSweepParams = {
    {"depth_weight", [](RunConfig& c, double v) { c.loss.depth_weight = v; }},
    {"beta", [](RunConfig& c, double v) { c.loss.beta = v; }},
    {"lambda_adv", [](RunConfig& c, double v) { c.loss.lambda_adv = v; }},
    {"lambda_cls", [](RunConfig& c, double v) { c.loss.lambda_cls = v; }},
    {"lambda_rec", [](RunConfig& c, double v) { c.loss.lambda_rec = v; }},
    {"lambda_pixel", [](RunConfig& c, double v) { c.loss.lambda_pixel = v; }},
    {"lambda_perceptual", [](RunConfig& c, double v) { c.loss.lambda_perceptual = v; }},
    {"lr_initial", [](RunConfig& c, double v) { c.train.lr_initial = v; }},
    {"n_critic",
     [](RunConfig& c, double v) {
       if (v != std::floor(v)) throw ConfigError("n_critic sweep values must be integers");
       c.train.n_critic = static_cast<int>(v);
     }},
    {"seed",
     [](RunConfig& c, double v) {
       if (v != std::floor(v) || v < 0) throw ConfigError("seed sweep values must be non-negative integers");
       c.train.seed = static_cast<std::uint64_t>(v);
     }},
};

ParamSetter sweep_setter(const std::string& name) {
  for (const auto& [n, fn] : kSweepParams)
    if (n == name) return fn;
  std::string known;
  for (const auto& [n, fn] : kSweepParams) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown sweep parameter '" + name + "' (known: " + known + ")");
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Runs each argv as a child process, at most `jobs` at a time. Returns the
// number of children that failed.
int run_processes(const std::vector<std::vector<std::string>>& commands, int jobs) {
  std::size_t next = 0;
  int active = 0, failures = 0;
  auto spawn = [&](std::size_t i) {
    std::vector<char*> argv;
    for (const std::string& s : commands[i]) argv.push_back(const_cast<char*>(s.c_str()));
    argv.push_back(nullptr);
    const pid_t pid = fork();
    if (pid < 0) throw IoError("sweep: fork failed");
    if (pid == 0) {
      execv(argv[0], argv.data());
      std::perror("execv");
      _exit(127);
    }
    ++active;
  };
  while (next < commands.size() || active > 0) {
    while (active < jobs && next < commands.size()) spawn(next++);
    int status = 0;
    const pid_t pid = waitpid(-1, &status, 0);
    if (pid < 0) throw IoError("sweep: waitpid failed");
    --active;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) ++failures;
  }
  return failures;
}

int cmd_sweep(const CfgFlags& flags, const std::string& param, const std::vector<double>& values,
              const std::string& data_dir, const std::string& out_dir, int jobs,
              const EvalFlags& ef) {
  if (values.empty()) throw ConfigError("sweep: --values must list at least one value");
  if (jobs < 1) throw ConfigError("sweep: --jobs must be >= 1");
  const ParamSetter set = sweep_setter(param);
  const RunConfig base = resolve_config(flags);

  const fs::path out(out_dir);
  fs::create_directories(out);
  const std::string self = fs::read_symlink("/proc/self/exe").string();

  std::vector<fs::path> run_dirs;
  std::vector<std::vector<std::string>> commands;
  for (double v : values) {
    RunConfig cfg = base;
    set(cfg, v);
    try {
      cfg.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("sweep value ") + fmt_value(v) + ": " + e.what());
    }
    const fs::path dir = out / (param + "_" + fmt_value(v));
    fs::create_directories(dir);
    save_config_file((dir / "config.json").string(), cfg);
    run_dirs.push_back(dir);
    commands.push_back({self, "train", "--config", (dir / "config.json").string(), "--data",
                        data_dir, "--out", dir.string()});
  }

  std::printf("sweep: %zu runs (%s), %d at a time\n", commands.size(), param.c_str(), jobs);
  const int failures = run_processes(commands, jobs);
  if (failures > 0) throw IoError("sweep: " + std::to_string(failures) + " run(s) failed");

  const Dataset ds = load_dataset(data_dir);
  Classifier cls = obtain_classifier(ef, ds, out);

  const fs::path table_path = out / "sweep.csv";
  std::ofstream table(table_path, std::ios::trunc);
  if (!table) throw IoError("sweep: cannot write " + table_path.string());
  table << param << ",generation_rate,fid,psnr_mean,ssim_mean,id_mean\n";
  char buf[256];
  for (std::size_t i = 0; i < values.size(); ++i) {
    TrainState st = load_train_state((run_dirs[i] / "checkpoint.dgck").string());
    const MetricReport r = run_evaluation(st, cls, ds, ef, run_dirs[i]);
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", values[i],
                  r.generation_rate, r.fid, r.psnr_mean, r.ssim_mean, r.id_mean);
    table << buf;
  }
  if (!table.good()) throw IoError("sweep: failed writing " + table_path.string());
  std::printf("sweep table: %s\n", table_path.string().c_str());
  return 0;
}

int cmd_plot(const std::string& input, const std::string& out_png,
             const std::vector<std::string>& columns) {
  std::ifstream is(input);
  if (!is) throw IoError("plot: cannot open " + input);
  std::string header;
  std::getline(is, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  is.close();
  if (header.rfind("iter,phase,", 0) == 0)
    plot_curves(input, out_png, columns);
  else if (header == "bin_left,bin_right,count")
    plot_histogram(input, out_png);
  else
    throw IoError("plot: unrecognized CSV header in " + input);
  std::printf("wrote %s\n", out_png.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-guided facial expression translation on a procedural RGB-D toy set"};
  app.require_subcommand(1);

  // make-dataset
  auto* mk = app.add_subcommand("make-dataset", "render a labeled RGB-D toy dataset");
  MakeDatasetOptions mk_opts;
  mk->add_option("--out", mk_opts.out_dir, "output directory")->required();
  mk->add_option("--per-class", mk_opts.per_class, "samples per class");
  mk->add_option("--classes", mk_opts.num_classes, "number of expression classes");
  int mk_size = 64;
  auto* mk_size_opt = mk->add_option("--size", mk_size, "square image size");
  auto* mk_seed = mk->add_option("--seed", mk_opts.seed, "dataset seed");
  mk->add_flag("--force", mk_opts.force, "write into an existing non-empty directory");

  // pretrain / train
  auto* pre = app.add_subcommand("pretrain", "pretrain the depth estimation networks");
  auto* tr = app.add_subcommand("train", "full training (pretraining + end-to-end)");
  CfgFlags pre_flags, tr_flags;
  std::string pre_data, pre_out, tr_data, tr_out;
  pre->add_option("--data", pre_data, "dataset directory")->required();
  pre->add_option("--out", pre_out, "run output directory")->required();
  add_cfg_flags(pre, pre_flags);
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "run output directory")->required();
  add_cfg_flags(tr, tr_flags);

  // translate
  auto* tl = app.add_subcommand("translate", "translate images to target expressions");
  std::string tl_ck, tl_out;
  std::vector<std::string> tl_inputs;
  int tl_target = 0;
  bool tl_grid = false;
  tl->add_option("--checkpoint", tl_ck, "training checkpoint (.dgck)")->required();
  tl->add_option("--out", tl_out, "output directory")->required();
  auto* tl_target_opt = tl->add_option("--target", tl_target, "target class index");
  tl->add_flag("--grid", tl_grid, "write an original-plus-every-class montage per input");
  tl->add_option("inputs", tl_inputs, "input PNG images")->required();

  // estimate-depth
  auto* ed = app.add_subcommand("estimate-depth", "predict depth maps for RGB images");
  std::string ed_ck, ed_out;
  std::vector<std::string> ed_inputs;
  ed->add_option("--checkpoint", ed_ck, "training checkpoint (.dgck)")->required();
  ed->add_option("--out", ed_out, "output directory")->required();
  ed->add_option("inputs", ed_inputs, "input PNG images")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score a checkpoint against a dataset");
  std::string ev_ck, ev_data, ev_out;
  EvalFlags ev_flags;
  ev->add_option("--checkpoint", ev_ck, "training checkpoint (.dgck)")->required();
  ev->add_option("--data", ev_data, "dataset directory")->required();
  ev->add_option("--out", ev_out, "report output directory")->required();
  add_eval_flags(ev, ev_flags);

  // sweep
  auto* sw = app.add_subcommand("sweep", "train and score one run per parameter value");
  CfgFlags sw_flags;
  EvalFlags sw_eval;
  std::string sw_param, sw_data, sw_out;
  std::vector<double> sw_values;
  int sw_jobs = 1;
  sw->add_option("--param", sw_param, "config field to vary")->required();
  sw->add_option("--values", sw_values, "comma-separated values")->required()->delimiter(',');
  sw->add_option("--data", sw_data, "dataset directory")->required();
  sw->add_option("--out", sw_out, "sweep output directory")->required();
  sw->add_option("--jobs", sw_jobs, "parallel training processes");
  add_cfg_flags(sw, sw_flags);
  add_eval_flags(sw, sw_eval);

  // plot
  auto* pl = app.add_subcommand("plot", "render a curves or histogram CSV to PNG");
  std::string pl_input, pl_out;
  std::vector<std::string> pl_columns;
  pl->add_option("input", pl_input, "curves.csv or id_hist.csv")->required();
  pl->add_option("--out", pl_out, "output PNG path")->required();
  pl->add_option("--columns", pl_columns, "curves columns to draw")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mk) {
      if (mk_size_opt->count()) mk_opts.height = mk_opts.width = mk_size;
      return cmd_make_dataset(mk_opts, mk_seed->count() > 0);
    }
    if (*pre) return cmd_train(pre_flags, pre_data, pre_out, true);
    if (*tr) return cmd_train(tr_flags, tr_data, tr_out, false);
    if (*tl)
      return cmd_translate(tl_ck, tl_inputs, tl_target, tl_target_opt->count() > 0, tl_grid,
                           tl_out);
    if (*ed) return cmd_estimate_depth(ed_ck, ed_inputs, ed_out);
    if (*ev) return cmd_evaluate(ev_ck, ev_data, ev_out, ev_flags);
    if (*sw) return cmd_sweep(sw_flags, sw_param, sw_values, sw_data, sw_out, sw_jobs, sw_eval);
    if (*pl) return cmd_plot(pl_input, pl_out, pl_columns);
    std::fprintf(stderr, "no subcommand given\n");
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
