#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forgesr/imgcore/degrade.hpp"
#include "forgesr/imgcore/image.hpp"
#include "forgesr/nn/checkpoint.hpp"

namespace forgesr::analysis {

struct DegradationCorpus {
  std::vector<DegradationKind> classes;
  std::vector<Image> images;
  std::vector<int> labels;      // index into classes
  std::vector<int> severities;  // 1..5
};

/// n_per_class images per class, each a uniformly drawn clean image degraded
/// at a uniformly drawn severity. Item k's draws come from seed_for(seed, ., k).
DegradationCorpus build_degradation_corpus(const std::vector<Image>& clean_images, const std::vector<DegradationKind>& classes,
                                           int n_per_class, std::uint64_t seed);

struct ClassifierSpec {
  int input_size = 32;
  std::vector<int> widths = {16, 32, 64, 64};  // one stride-2 conv block each
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.1;
};

struct DegradationClassifier {
  std::vector<DegradationKind> classes;
  ClassifierSpec spec;
  std::vector<nn::NamedArray> parameters;
  double holdout_accuracy = 0.0;
  Eigen::MatrixXi confusion;  // rows = true class, cols = predicted
  std::uint64_t seed = 0;
};

/// Trains on a shuffled 1 - holdout split and measures accuracy on the rest.
/// Throws ClassifierUnusable when accuracy <= 3 / |classes|.
DegradationClassifier train_degradation_classifier(const DegradationCorpus& corpus, const ClassifierSpec& spec,
                                                   std::uint64_t seed);

/// Argmax class index per image; images must be spec.input_size square.
std::vector<int> classify(const DegradationClassifier& clf, const std::vector<Image>& images);

Eigen::MatrixXi confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int classes);

void save_classifier(const DegradationClassifier& clf, const std::string& path);
DegradationClassifier load_classifier(const std::string& path);

/// P over a fixed ordered class set; probs sum to 1.
struct DegradationDistribution {
  std::vector<std::string> classes;
  std::vector<double> probs;
  std::size_t sample_count = 0;
};

DegradationDistribution distribution_from_labels(std::span<const int> labels, const std::vector<std::string>& classes);
DegradationDistribution degradation_distribution(const std::vector<Image>& lr_images, const DegradationClassifier& clf);

/// H = -sum P ln P, with 0 ln 0 = 0.
double entropy(std::span<const double> probs);
double entropy(const DegradationDistribution& p);

/// Appends or creates a CSV with header dataset,classes,entropy,<class...>.
void append_entropy_csv(const std::string& path, const std::string& dataset_id, const DegradationDistribution& p);

}  // namespace forgesr::analysis
