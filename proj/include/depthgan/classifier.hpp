#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "depthgan/dataset.hpp"
#include "depthgan/nets.hpp"

namespace depthgan {

// Expression classifier kept fully independent of the GANs: its own
// architecture instance, its own seed, trained only on real samples.
struct ClassifierConfig {
  int height = 64;
  int width = 64;
  int num_classes = 4;
  int base_width = 8;
  int n_layers = 3;
  double lr = 1e-3;
  int batch = 16;
  int iters = 400;
  std::uint64_t seed = 4242;

  void validate() const;
};

struct Classifier {
  ClassifierConfig cfg;
  DiscriminatorNet<float> net;  // only the class head is trained or read

  void build();
  // Argmax class per image; input [B,C,H,W] matching the configured size.
  std::vector<int> classify(const Tensor<float>& images);
};

// Plain cross-entropy + Adam over uniformly drawn real batches; deterministic
// for a given (dataset, config).
Classifier train_classifier(const Dataset& ds, const ClassifierConfig& cfg);

double classifier_accuracy(Classifier& c, const Dataset& ds);

void save_classifier(const std::string& path, const Classifier& c);
Classifier load_classifier(const std::string& path);

struct GenerationRate {
  double accuracy = 0;
  std::vector<std::vector<std::int64_t>> confusion;  // [intended][predicted]
};

// Fraction of translated images whose predicted class matches the intended
// target. Samples whose intended class is listed in exclude are skipped
// (their confusion rows stay zero), mirroring protocols that drop classes
// from the accuracy average.
GenerationRate expression_generation_rate(Classifier& c, const Tensor<float>& images,
                                          const std::vector<int>& intended,
                                          const std::vector<int>& exclude = {});

}  // namespace depthgan
