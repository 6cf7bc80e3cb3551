#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/classifier.hpp"
#include "depthgan/dataset.hpp"
#include "depthgan/metrics.hpp"
#include "depthgan/nets.hpp"

namespace depthgan {

struct EvaluateOptions {
  std::vector<int> exclude_classes;
  int hist_bins = 20;
  bool cycle_reconstruction = true;  // false: same-label translation instead
  int max_samples = 0;               // 0 = all

  void validate() const {
    check(hist_bins >= 1, "evaluate: hist_bins must be >= 1");
    check(max_samples >= 0, "evaluate: max_samples must be >= 0");
  }
};

struct MetricReport {
  int schema_version = 1;
  double fid = 0;
  double psnr_mean = 0;
  double ssim_mean = 0;
  double generation_rate = 0;
  std::vector<std::vector<std::int64_t>> confusion;
  std::vector<double> id_bin_edges;
  std::vector<std::int64_t> id_counts;
  double id_mean = 0;
  double id_median = 0;
  std::int64_t samples_evaluated = 0;
  std::int64_t translations = 0;
};

// Translates every evaluated sample to every class (intended = target),
// then scores: generation rate + confusion from the classifier, FID between
// pooled extractor features of real vs translated sets, PSNR/SSIM between
// each input and its reconstruction, identity distances between each input
// and each of its translations. Deterministic: no randomness anywhere.
MetricReport evaluate_model(ModelBundle<float>& m, Classifier& cls, const Dataset& ds,
                            const EvaluateOptions& opt);

// report.json plus confusion.csv and id_hist.csv under out_dir.
void write_report(const std::string& out_dir, const MetricReport& r);
MetricReport read_report(const std::string& path);  // the JSON file

}  // namespace depthgan
