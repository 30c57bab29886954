#include <algorithm>
#include <cmath>
#include <numeric>

#include "forgesr/analysis/degradation.hpp"
#include "forgesr/core/parallel.hpp"
#include "forgesr/core/seed.hpp"
#include "forgesr/nn/layers.hpp"
#include "forgesr/nn/loss.hpp"
#include "forgesr/nn/optim.hpp"

namespace forgesr::analysis {

namespace {

using Net = nn::Sequential<float>;

// Stride-2 conv blocks, global average pool, linear head.
std::unique_ptr<Net> build_net(const ClassifierSpec& spec, int classes, std::uint64_t seed) {
  if (spec.widths.empty()) throw InvalidArgument("classifier needs at least one conv block");
  Rng rng(seed);
  auto net = std::make_unique<Net>();
  int in = 3;
  for (std::size_t i = 0; i < spec.widths.size(); ++i) {
    net->emplace<nn::Conv2d<float>>("block" + std::to_string(i), in, spec.widths[i], 3, 2, 1, rng);
    net->emplace<nn::ReLU<float>>();
    in = spec.widths[i];
  }
  net->emplace<nn::GlobalAvgPool<float>>();
  net->add(nn::make_linear<float>("head", in, classes, rng));
  return net;
}

nn::Tensor<float> centered_batch(const std::vector<const Image*>& batch) {
  auto t = nn::images_to_tensor<float>(batch);
  t.data.array() -= 0.5f;
  return t;
}

std::vector<int> predict(Net& net, const std::vector<const Image*>& images) {
  std::vector<int> out;
  constexpr std::size_t chunk = 256;
  for (std::size_t start = 0; start < images.size(); start += chunk) {
    const std::vector<const Image*> batch(images.begin() + static_cast<std::ptrdiff_t>(start),
                                          images.begin() + static_cast<std::ptrdiff_t>(std::min(images.size(), start + chunk)));
    const auto logits = net.forward(centered_batch(batch));
    for (int b = 0; b < logits.n; ++b) {
      Eigen::Index best;
      logits.data.col(b).maxCoeff(&best);
      out.push_back(static_cast<int>(best));
    }
  }
  return out;
}

std::unique_ptr<Net> instantiate(const DegradationClassifier& clf) {
  auto net = build_net(clf.spec, static_cast<int>(clf.classes.size()), 0);
  nn::ParamList<float> params;
  net->collect(params);
  nn::Checkpoint c;
  c.arrays = clf.parameters;
  nn::import_params(params, c);
  return net;
}

}  // namespace

Eigen::MatrixXi confusion_matrix(std::span<const int> truth, std::span<const int> predicted, int classes) {
  if (truth.size() != predicted.size()) throw InvalidArgument("confusion_matrix: length mismatch");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
      throw InvalidArgument("confusion_matrix: label out of range");
    ++m(truth[i], predicted[i]);
  }
  return m;
}

DegradationClassifier train_degradation_classifier(const DegradationCorpus& corpus, const ClassifierSpec& spec,
                                                   std::uint64_t seed) {
  const int k = static_cast<int>(corpus.classes.size());
  if (k < 2) throw InvalidArgument("classifier needs at least 2 classes");
  if (corpus.images.size() != corpus.labels.size() || corpus.images.empty())
    throw InvalidArgument("classifier corpus is empty or has mismatched labels");
  std::vector<int> per_class(static_cast<std::size_t>(k), 0);
  for (int l : corpus.labels) {
    if (l < 0 || l >= k) throw InvalidArgument("classifier corpus label out of range");
    ++per_class[static_cast<std::size_t>(l)];
  }
  if (std::count(per_class.begin(), per_class.end(), 0) > 0) throw InvalidArgument("classifier corpus does not cover every class");
  for (const auto& img : corpus.images)
    if (img.height() != spec.input_size || img.width() != spec.input_size)
      throw InvalidArgument("classifier corpus images must be " + std::to_string(spec.input_size) + " square");
  if (!(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0)) throw InvalidArgument("holdout_fraction must be in (0, 1)");

  const std::size_t n = corpus.images.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(seed_for(seed, "degclf-split", 0));
  split_rng.shuffle(order.begin(), order.end());
  const auto n_hold = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(spec.holdout_fraction * static_cast<double>(n))), 1, n - 1);
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_hold));
  const std::vector<std::size_t> hold(order.end() - static_cast<std::ptrdiff_t>(n_hold), order.end());

  auto net = build_net(spec, k, seed_for(seed, "degclf-init", 0));
  nn::ParamList<float> params;
  net->collect(params);
  nn::Adam<float> adam(params, spec.learning_rate);
  Rng rng(seed_for(seed, "degclf-train", 0));
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    rng.shuffle(train.begin(), train.end());
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(spec.batch_size)) {
      const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(spec.batch_size));
      std::vector<const Image*> batch;
      std::vector<int> labels;
      for (std::size_t j = start; j < end; ++j) {
        batch.push_back(&corpus.images[train[j]]);
        labels.push_back(corpus.labels[train[j]]);
      }
      adam.zero_grad();
      const auto loss = nn::cross_entropy(net->forward(centered_batch(batch)), labels);
      if (!std::isfinite(loss.value)) throw TrainingDiverged("classifier loss non-finite at epoch " + std::to_string(epoch), epoch);
      net->backward(loss.grad);
      adam.step();
    }
  }

  std::vector<const Image*> hold_imgs;
  std::vector<int> hold_labels;
  for (std::size_t i : hold) {
    hold_imgs.push_back(&corpus.images[i]);
    hold_labels.push_back(corpus.labels[i]);
  }
  const auto pred = predict(*net, hold_imgs);

  DegradationClassifier clf;
  clf.classes = corpus.classes;
  clf.spec = spec;
  clf.seed = seed;
  clf.parameters = nn::export_params(params);
  clf.confusion = confusion_matrix(hold_labels, pred, k);
  clf.holdout_accuracy = static_cast<double>(clf.confusion.trace()) / static_cast<double>(hold.size());
  const double gate = 3.0 / k;
  if (!(clf.holdout_accuracy > gate))
    throw ClassifierUnusable("held-out accuracy " + std::to_string(clf.holdout_accuracy) + " does not exceed 3x chance (" +
                                 std::to_string(gate) + ")",
                             clf.holdout_accuracy);
  return clf;
}

std::vector<int> classify(const DegradationClassifier& clf, const std::vector<Image>& images) {
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].height() != clf.spec.input_size || images[i].width() != clf.spec.input_size)
      throw InvalidArgument("classify: image " + std::to_string(i) + " is not " + std::to_string(clf.spec.input_size) + " square");
  constexpr std::size_t chunk = 256;
  const std::size_t chunks = (images.size() + chunk - 1) / chunk;
  std::vector<std::vector<int>> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    auto net = instantiate(clf);
    std::vector<const Image*> batch;
    for (std::size_t i = c * chunk; i < std::min(images.size(), (c + 1) * chunk); ++i) batch.push_back(&images[i]);
    parts[c] = predict(*net, batch);
  });
  std::vector<int> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void save_classifier(const DegradationClassifier& clf, const std::string& path) {
  nn::Checkpoint c;
  std::vector<std::string> names;
  for (auto k : clf.classes) names.emplace_back(to_string(k));
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(clf.confusion.rows()));
  for (Eigen::Index r = 0; r < clf.confusion.rows(); ++r)
    for (Eigen::Index col = 0; col < clf.confusion.cols(); ++col) confusion[static_cast<std::size_t>(r)].push_back(clf.confusion(r, col));
  c.header = {{"kind", "degradation_classifier"},
              {"classes", names},
              {"input_size", clf.spec.input_size},
              {"widths", clf.spec.widths},
              {"epochs", clf.spec.epochs},
              {"batch_size", clf.spec.batch_size},
              {"learning_rate", clf.spec.learning_rate},
              {"holdout_fraction", clf.spec.holdout_fraction},
              {"holdout_accuracy", clf.holdout_accuracy},
              {"confusion", confusion},
              {"seed", std::to_string(clf.seed)}};
  c.arrays = clf.parameters;
  nn::write_checkpoint(c, path);
}

DegradationClassifier load_classifier(const std::string& path) {
  const auto c = nn::read_checkpoint(path);
  if (c.header.value("kind", "") != "degradation_classifier") throw ValidationError(path + " is not a degradation classifier");
  DegradationClassifier clf;
  try {
    for (const auto& name : c.header.at("classes")) clf.classes.push_back(parse_degradation_kind(name.get<std::string>()));
    clf.spec.input_size = c.header.at("input_size").get<int>();
    clf.spec.widths = c.header.at("widths").get<std::vector<int>>();
    clf.spec.epochs = c.header.at("epochs").get<int>();
    clf.spec.batch_size = c.header.at("batch_size").get<int>();
    clf.spec.learning_rate = c.header.at("learning_rate").get<double>();
    clf.spec.holdout_fraction = c.header.at("holdout_fraction").get<double>();
    clf.holdout_accuracy = c.header.at("holdout_accuracy").get<double>();
    const auto conf = c.header.at("confusion").get<std::vector<std::vector<int>>>();
    const auto k = static_cast<Eigen::Index>(clf.classes.size());
    clf.confusion = Eigen::MatrixXi::Zero(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index col = 0; col < k; ++col) clf.confusion(r, col) = conf.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(col));
    clf.seed = std::stoull(c.header.at("seed").get<std::string>());
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError("bad classifier checkpoint header: " + std::string(e.what()));
  }
  clf.parameters = c.arrays;
  instantiate(clf);  // shape check
  return clf;
}

}  // namespace forgesr::analysis
