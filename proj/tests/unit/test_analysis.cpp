#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "forgesr/analysis/color_diff.hpp"
#include "forgesr/analysis/degradation.hpp"
#include "forgesr/forge/forge.hpp"
#include "forgesr/imgcore/resample.hpp"
#include "forgesr/imgcore/scene.hpp"

using namespace forgesr;
using namespace forgesr::analysis;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> names(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back("c" + std::to_string(i));
  return out;
}

std::vector<Image> clean_lr(int n, std::uint64_t seed) {
  std::vector<Image> out;
  for (const auto& hr : render_scenes(n, 128, 128, seed)) out.push_back(quantize8(bicubic_resample(hr, 32, 32)));
  return out;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("entropy analytic values") {
  const std::vector<double> uniform15(15, 1.0 / 15);
  CHECK(std::abs(entropy(uniform15) - std::log(15.0)) < 1e-9);
  CHECK(std::abs(entropy(uniform15) - 2.70805) < 1e-5);
  std::vector<double> one_hot(10, 0.0);
  one_hot[3] = 1.0;
  CHECK(entropy(one_hot) == 0.0);
  std::vector<double> half(10, 0.0);
  half[0] = half[1] = 0.5;
  CHECK(std::abs(entropy(half) - 0.693147) < 1e-6);
  CHECK(std::abs(entropy(half) - std::log(2.0)) < 1e-9);
}

TEST_CASE("entropy bounds and permutation invariance on random distributions") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const int k = 2 + static_cast<int>(rng.below(14));
    std::vector<double> p(static_cast<std::size_t>(k));
    for (auto& v : p) v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
    p[0] += 1e-3;
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= total;
    const double h = entropy(p);
    CHECK(h >= 0.0);
    CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);
    auto q = p;
    rng.shuffle(q.begin(), q.end());
    CHECK(std::abs(entropy(q) - h) < 1e-12);
  }
}

TEST_CASE("distribution from labels matches a recount") {
  Rng rng(2);
  std::vector<int> labels(500);
  for (auto& l : labels) l = static_cast<int>(rng.below(7));
  const auto p = distribution_from_labels(labels, names(7));
  CHECK(p.sample_count == 500);
  double sum = 0;
  for (int c = 0; c < 7; ++c) {
    const auto count = std::count(labels.begin(), labels.end(), c);
    CHECK(p.probs[static_cast<std::size_t>(c)] == static_cast<double>(count) / 500.0);
    sum += p.probs[static_cast<std::size_t>(c)];
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
  auto shuffled = labels;
  rng.shuffle(shuffled.begin(), shuffled.end());
  CHECK(distribution_from_labels(shuffled, names(7)).probs == p.probs);
  const std::vector<int> same(20, 4);
  const auto hot = distribution_from_labels(same, names(7));
  CHECK(hot.probs[4] == 1.0);
  CHECK(entropy(hot) == 0.0);
  CHECK_THROWS_AS(distribution_from_labels(std::vector<int>{}, names(7)), InvalidArgument);
  CHECK_THROWS_AS(distribution_from_labels(same, names(1)), InvalidArgument);
}

TEST_CASE("entropy csv rows") {
  const auto path = fs::temp_directory_path() / "forgesr_entropy_unit.csv";
  fs::remove(path);
  const std::vector<int> labels = {0, 1, 1, 2};
  const auto p = distribution_from_labels(labels, names(3));
  append_entropy_csv(path.string(), "setA", p);
  append_entropy_csv(path.string(), "setB", p);
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "dataset,classes,entropy,p_c0,p_c1,p_c2");
  CHECK(row1.rfind("setA,3,", 0) == 0);
  CHECK(row2.rfind("setB,3,", 0) == 0);
  fs::remove(path);
}

TEST_CASE("degradation corpus is balanced and deterministic") {
  const auto clean = clean_lr(6, 3);
  const std::vector<DegradationKind> classes(kAllDegradationKinds.begin(), kAllDegradationKinds.end());
  const auto a = build_degradation_corpus(clean, classes, 5, 9);
  CHECK(a.images.size() == 50);
  for (int c = 0; c < 10; ++c) CHECK(std::count(a.labels.begin(), a.labels.end(), c) == 5);
  for (int s : a.severities) {
    CHECK(s >= 1);
    CHECK(s <= 5);
  }
  const auto b = build_degradation_corpus(clean, classes, 5, 9);
  CHECK(a.labels == b.labels);
  CHECK(a.severities == b.severities);
  for (std::size_t i = 0; i < a.images.size(); ++i) CHECK(a.images[i] == b.images[i]);
  CHECK(build_degradation_corpus(clean, classes, 200, 9).images.size() == 2000);
  CHECK_THROWS_AS(build_degradation_corpus(clean, classes, 0, 9), InvalidArgument);
  CHECK_THROWS_AS(build_degradation_corpus(clean, {}, 3, 9), InvalidArgument);
}

TEST_CASE("confusion matrix follows a relabeling permutation") {
  Rng rng(4);
  const int k = 4;
  std::vector<int> truth(200), pred(200);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = static_cast<int>(rng.below(k));
    pred[i] = rng.uniform() < 0.6 ? truth[i] : static_cast<int>(rng.below(k));
  }
  const Eigen::MatrixXi m = confusion_matrix(truth, pred, k);
  CHECK(m.sum() == 200);
  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<int> pt(truth.size()), pp(pred.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pt[i] = perm[static_cast<std::size_t>(truth[i])];
    pp[i] = perm[static_cast<std::size_t>(pred[i])];
  }
  const Eigen::MatrixXi mp = confusion_matrix(pt, pp, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) CHECK(mp(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]) == m(r, c));
  CHECK_THROWS_AS(confusion_matrix(truth, std::vector<int>{1}, k), InvalidArgument);
}

TEST_CASE("classifier gate refuses an untrained network") {
  const auto clean = clean_lr(4, 5);
  const std::vector<DegradationKind> classes(kAllDegradationKinds.begin(), kAllDegradationKinds.end());
  const auto corpus = build_degradation_corpus(clean, classes, 10, 6);
  ClassifierSpec spec;
  spec.epochs = 0;
  double first = -1;
  for (int run = 0; run < 2; ++run) {
    try {
      train_degradation_classifier(corpus, spec, 7);
      FAIL("expected ClassifierUnusable");
    } catch (const ClassifierUnusable& e) {
      CHECK(e.accuracy() <= 0.3);
      if (run == 0) first = e.accuracy();
      else CHECK(e.accuracy() == first);
    }
  }
}

TEST_CASE("classifier learns a separable corpus and round-trips") {
  const auto clean = clean_lr(40, 8);
  const std::vector<DegradationKind> classes(kAllDegradationKinds.begin(), kAllDegradationKinds.end());
  const auto corpus = build_degradation_corpus(clean, classes, 60, 9);
  ClassifierSpec spec;
  spec.epochs = 12;
  const auto clf = train_degradation_classifier(corpus, spec, 10);
  CHECK(clf.holdout_accuracy > 0.3);
  CHECK(clf.confusion.rows() == 10);
  CHECK(clf.confusion.sum() == 60);
  const auto again = train_degradation_classifier(corpus, spec, 10);
  CHECK(again.holdout_accuracy == clf.holdout_accuracy);

  const auto path = (fs::temp_directory_path() / "forgesr_clf_unit.ckpt").string();
  save_classifier(clf, path);
  const auto loaded = load_classifier(path);
  fs::remove(path);
  const std::vector<Image> probe(corpus.images.begin(), corpus.images.begin() + 30);
  CHECK(classify(loaded, probe) == classify(clf, probe));

  const auto p = degradation_distribution(probe, clf);
  const auto labels = classify(clf, probe);
  for (std::size_t c = 0; c < p.probs.size(); ++c)
    CHECK(p.probs[c] == static_cast<double>(std::count(labels.begin(), labels.end(), static_cast<int>(c))) / 30.0);
  std::vector<Image> reversed(probe.rbegin(), probe.rend());
  CHECK(degradation_distribution(reversed, clf).probs == p.probs);
  CHECK(entropy(p) <= std::log(10.0) + 1e-12);
  CHECK_THROWS_AS(degradation_distribution({}, clf), InvalidArgument);
}

TEST_CASE("color difference of bicubic and exact datasets") {
  const auto hr = render_scenes(6, 64, 64, 11);
  const auto d = forge::make_bicubic_dataset(hr, 4);
  const auto r = dataset_color_diff(d, "bicubic");
  CHECK(r.mean < 1.0);
  CHECK(r.mean == 0.0);
  CHECK(r.per_pair.size() == 6);
  auto shifted = d;
  shifted.pairs[2].lr = quantize8(color_shift_lab(d.pairs[2].lr, {0, 0, 8}));
  const auto rs = dataset_color_diff(shifted);
  CHECK(rs.per_pair[2] > 1.0);
  CHECK(rs.per_pair[0] == 0.0);
  CHECK(std::abs(rs.mean - std::accumulate(rs.per_pair.begin(), rs.per_pair.end(), 0.0) / 6.0) < 1e-9);
}

TEST_CASE("shifted datasets: count, baseline minimal, single-axis ordering") {
  const auto hr = render_scenes(8, 64, 64, 12);
  const auto shifts = default_shifts();
  REQUIRE(shifts.size() == 8);
  const auto sets = make_shifted_datasets(hr, shifts, 4, 3);
  REQUIRE(sets.size() == 9);
  std::vector<double> de;
  for (const auto& s : sets) {
    REQUIRE(s.manifest.shift.has_value());
    de.push_back(s.manifest.stats["mean_delta_e"].get<double>());
    CHECK(s.size() == hr.size());
  }
  CHECK(sets[0].manifest.shift->is_identity());
  for (std::size_t k = 1; k < 9; ++k) {
    CHECK(de[0] < de[k]);
    CHECK(sets[k].manifest.shift->dL == shifts[k - 1].dL);
  }
  CHECK(de[1] < de[3]);  // +5 vs +10 on L
  CHECK(de[2] < de[4]);  // -5 vs -10 on L
  CHECK_THROWS_AS(make_shifted_datasets(hr, std::vector<ShiftSpec>(7), 4, 3), InvalidArgument);
}

}
