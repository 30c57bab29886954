#include <cmath>
#include <filesystem>
#include <fstream>

#include "forgesr/analysis/degradation.hpp"

namespace forgesr::analysis {

DegradationDistribution distribution_from_labels(std::span<const int> labels, const std::vector<std::string>& classes) {
  if (labels.empty()) throw InvalidArgument("degradation distribution of an empty set");
  if (classes.size() < 2) throw InvalidArgument("degradation distribution needs at least 2 classes");
  DegradationDistribution p;
  p.classes = classes;
  p.sample_count = labels.size();
  std::vector<std::size_t> counts(classes.size(), 0);
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= classes.size()) throw InvalidArgument("label out of range");
    ++counts[static_cast<std::size_t>(l)];
  }
  for (std::size_t c : counts) p.probs.push_back(static_cast<double>(c) / static_cast<double>(labels.size()));
  return p;
}

DegradationDistribution degradation_distribution(const std::vector<Image>& lr_images, const DegradationClassifier& clf) {
  if (lr_images.empty()) throw InvalidArgument("degradation_distribution: empty image list");
  std::vector<std::string> names;
  for (auto k : clf.classes) names.emplace_back(to_string(k));
  const auto labels = classify(clf, lr_images);
  return distribution_from_labels(labels, names);
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double entropy(const DegradationDistribution& p) { return entropy(p.probs); }

void append_entropy_csv(const std::string& path, const std::string& dataset_id, const DegradationDistribution& p) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (fresh) {
    out << "dataset,classes,entropy";
    for (const auto& c : p.classes) out << ",p_" << c;
    out << '\n';
  }
  out.precision(10);
  out << dataset_id << ',' << p.classes.size() << ',' << entropy(p);
  for (double v : p.probs) out << ',' << v;
  out << '\n';
  if (!out) throw std::runtime_error("cannot write " + path);
}

}  // namespace forgesr::analysis
