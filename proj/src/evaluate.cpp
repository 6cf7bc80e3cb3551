#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "depthgan/evaluate.hpp"
#include "depthgan/training.hpp"

namespace depthgan {

MetricReport evaluate_model(ModelBundle<float>& m, Classifier& cls, const Dataset& ds,
                            const EvaluateOptions& opt) {
  opt.validate();
  check(!ds.samples.empty(), "evaluate: empty dataset");
  check(ds.meta.height == m.arch.height && ds.meta.width == m.arch.width,
        "evaluate: dataset size does not match model architecture");
  check(ds.meta.num_classes == m.arch.num_classes,
        "evaluate: dataset class count does not match model architecture");
  check(cls.cfg.height == m.arch.height && cls.cfg.width == m.arch.width &&
            cls.cfg.num_classes == m.arch.num_classes,
        "evaluate: classifier geometry does not match model architecture");

  const int K = m.arch.num_classes;
  const std::int64_t n_all = static_cast<std::int64_t>(ds.samples.size());
  const std::int64_t n =
      opt.max_samples > 0 ? std::min<std::int64_t>(opt.max_samples, n_all) : n_all;
  check(n >= 2, "evaluate: need at least 2 samples for feature statistics");

  std::vector<Tensor<float>> real_images;
  std::vector<Tensor<float>> fake_images;
  std::vector<int> intended;
  std::vector<std::pair<Tensor<float>, Tensor<float>>> id_pairs;
  double psnr_sum = 0, ssim_sum = 0;
  std::int64_t psnr_rows = 0;

  for (std::int64_t i = 0; i < n; ++i) {
    const Sample& s = ds.samples[static_cast<std::size_t>(i)];
    real_images.push_back(s.rgb);
    for (int t = 0; t < K; ++t) {
      RgbImage out = translate(m, s.rgb, t);
      intended.push_back(t);
      id_pairs.emplace_back(s.rgb, out);
      fake_images.push_back(std::move(out));
    }
    const RgbImage recon =
        opt.cycle_reconstruction
            ? translate(m, fake_images[fake_images.size() - static_cast<std::size_t>(K) +
                                       static_cast<std::size_t>((s.label.index + 1) % K)],
                        s.label.index)
            : translate(m, s.rgb, s.label.index);
    const Tensor<float> a = shift_to_unit(s.rgb);
    const Tensor<float> b = shift_to_unit(recon);
    const double p = psnr(a, b, 1.0);
    if (std::isfinite(p)) {
      psnr_sum += p;
      ++psnr_rows;
    }
    ssim_sum += ssim(a, b);
  }

  MetricReport r;
  r.samples_evaluated = n;
  r.translations = static_cast<std::int64_t>(fake_images.size());

  const int H = m.arch.height, W = m.arch.width;
  Tensor<float> fake_batch({static_cast<int>(fake_images.size()), 3, H, W});
  const std::int64_t plane = 3LL * H * W;
  for (std::size_t i = 0; i < fake_images.size(); ++i)
    std::copy(fake_images[i].v.begin(), fake_images[i].v.end(),
              fake_batch.data() + static_cast<std::int64_t>(i) * plane);
  const GenerationRate gr =
      expression_generation_rate(cls, fake_batch, intended, opt.exclude_classes);
  r.generation_rate = gr.accuracy;
  r.confusion = gr.confusion;

  r.fid = fid(pooled_features(m.v, real_images), pooled_features(m.v, fake_images));
  r.psnr_mean = psnr_rows > 0 ? psnr_sum / static_cast<double>(psnr_rows)
                              : std::numeric_limits<double>::infinity();
  r.ssim_mean = ssim_sum / static_cast<double>(n);

  const IdentityDistribution id =
      identity_distance_distribution(m.v, id_pairs, opt.hist_bins);
  r.id_bin_edges = id.bin_edges;
  r.id_counts = id.counts;
  r.id_mean = id.mean;
  r.id_median = id.median;
  return r;
}

void write_report(const std::string& out_dir, const MetricReport& r) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  nlohmann::ordered_json j;
  j["schema_version"] = r.schema_version;
  j["fid"] = r.fid;
  j["psnr_mean"] = r.psnr_mean;
  j["ssim_mean"] = r.ssim_mean;
  j["generation_rate"] = r.generation_rate;
  j["confusion"] = r.confusion;
  j["id_bin_edges"] = r.id_bin_edges;
  j["id_counts"] = r.id_counts;
  j["id_mean"] = r.id_mean;
  j["id_median"] = r.id_median;
  j["samples_evaluated"] = r.samples_evaluated;
  j["translations"] = r.translations;
  {
    std::ofstream os(fs::path(out_dir) / "report.json", std::ios::trunc);
    if (!os) throw IoError("write_report: cannot write report.json");
    os << j.dump(2) << "\n";
    if (!os.good()) throw IoError("write_report: failed writing report.json");
  }
  {
    std::ofstream os(fs::path(out_dir) / "confusion.csv", std::ios::trunc);
    if (!os) throw IoError("write_report: cannot write confusion.csv");
    os << "intended";
    for (std::size_t k = 0; k < r.confusion.size(); ++k) os << ",pred_" << k;
    os << "\n";
    for (std::size_t i = 0; i < r.confusion.size(); ++i) {
      os << i;
      for (std::int64_t c : r.confusion[i]) os << "," << c;
      os << "\n";
    }
    if (!os.good()) throw IoError("write_report: failed writing confusion.csv");
  }
  {
    std::ofstream os(fs::path(out_dir) / "id_hist.csv", std::ios::trunc);
    if (!os) throw IoError("write_report: cannot write id_hist.csv");
    os << "bin_left,bin_right,count\n";
    char buf[128];
    for (std::size_t i = 0; i < r.id_counts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%lld\n", r.id_bin_edges[i], r.id_bin_edges[i + 1],
                    static_cast<long long>(r.id_counts[i]));
      os << buf;
    }
    if (!os.good()) throw IoError("write_report: failed writing id_hist.csv");
  }
}

MetricReport read_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("read_report: cannot open " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("read_report: parse error: ") + e.what());
  }
  try {
    MetricReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1)
      throw SchemaVersionError("read_report: unsupported schema_version");
    r.fid = j.at("fid").get<double>();
    r.psnr_mean = j.at("psnr_mean").get<double>();
    r.ssim_mean = j.at("ssim_mean").get<double>();
    r.generation_rate = j.at("generation_rate").get<double>();
    r.confusion = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
    r.id_bin_edges = j.at("id_bin_edges").get<std::vector<double>>();
    r.id_counts = j.at("id_counts").get<std::vector<std::int64_t>>();
    r.id_mean = j.at("id_mean").get<double>();
    r.id_median = j.at("id_median").get<double>();
    r.samples_evaluated = j.at("samples_evaluated").get<std::int64_t>();
    r.translations = j.at("translations").get<std::int64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("read_report: bad report: ") + e.what());
  }
}

}  // namespace depthgan
