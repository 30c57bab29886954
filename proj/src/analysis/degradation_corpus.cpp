#include "forgesr/analysis/degradation.hpp"

#include "forgesr/core/parallel.hpp"
#include "forgesr/core/rng.hpp"
#include "forgesr/core/seed.hpp"

namespace forgesr::analysis {

DegradationCorpus build_degradation_corpus(const std::vector<Image>& clean_images, const std::vector<DegradationKind>& classes,
                                           int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw InvalidArgument("build_degradation_corpus: n_per_class must be >= 1");
  if (classes.empty() || clean_images.empty()) throw InvalidArgument("build_degradation_corpus: need classes and clean images");
  DegradationCorpus corpus;
  corpus.classes = classes;
  const std::size_t total = classes.size() * static_cast<std::size_t>(n_per_class);
  corpus.images.resize(total);
  corpus.labels.resize(total);
  corpus.severities.resize(total);
  parallel_for(total, [&](std::size_t k) {
    Rng rng(seed_for(seed, "degclf-corpus", k));
    const int label = static_cast<int>(k / static_cast<std::size_t>(n_per_class));
    const auto& src = clean_images[rng.below(clean_images.size())];
    const int severity = rng.range(1, 5);
    corpus.images[k] = quantize8(apply_degradation(src, {classes[static_cast<std::size_t>(label)], severity}, rng.next_u64()));
    corpus.labels[k] = label;
    corpus.severities[k] = severity;
  });
  return corpus;
}

}  // namespace forgesr::analysis
