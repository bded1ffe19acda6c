#include "lmfuse/pipeline.hpp"

#include "lmfuse/rng.hpp"

namespace lmfuse {

std::vector<FeatureSample> build_samples(std::span<const VideoRecord> records,
                                         std::span<const std::size_t> indices,
                                         const Preprocessing& prep) {
  std::vector<FeatureSample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(build_sample(records[i], prep.vocab, prep.standardizer));
  }
  return out;
}

Split outer_split(std::span<const VideoRecord> records, const SplitSettings& settings) {
  if (settings.group_split) {
    std::vector<std::string> groups;
    for (const auto& r : records) groups.push_back(r.meta.golfer_id);
    return group_split(groups, settings.test_fraction, settings.seed);
  }
  std::vector<Label> labels;
  for (const auto& r : records) labels.push_back(r.label);
  return stratified_split(labels, settings.test_fraction, settings.seed);
}

PreparedData prepare(std::span<const VideoRecord> records, const SplitSettings& settings) {
  PreparedData out;
  out.outer = outer_split(records, settings);

  std::vector<GolferMeta> train_meta;
  for (std::size_t i : out.outer.train) train_meta.push_back(records[i].meta);
  out.prep.vocab = build_vocab(train_meta);
  out.prep.standardizer = MetaStandardizer::fit(train_meta);

  std::vector<std::size_t> fit_idx = out.outer.train;
  std::vector<std::size_t> val_idx;
  if (settings.val_fraction > 0.0) {
    std::vector<Label> train_labels;
    for (std::size_t i : out.outer.train) train_labels.push_back(records[i].label);
    const Split inner = stratified_split(train_labels, settings.val_fraction,
                                         mix_seed(settings.seed, 1));
    fit_idx.clear();
    for (std::size_t k : inner.train) fit_idx.push_back(out.outer.train[k]);
    for (std::size_t k : inner.test) val_idx.push_back(out.outer.train[k]);
  }
  out.train = build_samples(records, fit_idx, out.prep);
  out.val = build_samples(records, val_idx, out.prep);
  out.test = build_samples(records, out.outer.test, out.prep);
  return out;
}

}  // namespace lmfuse
