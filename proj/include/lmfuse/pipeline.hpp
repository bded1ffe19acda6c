#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmfuse/dataset.hpp"
#include "lmfuse/features.hpp"

namespace lmfuse {

struct SplitSettings {
  double test_fraction = 0.2;
  double val_fraction = 0.2;  // share of the training split held out for early stopping
  std::uint64_t seed = 42;
  bool group_split = false;   // split by golfer instead of stratifying by label
};

// Meta-data encoding fitted on the training split.
struct Preprocessing {
  NationalityVocab vocab;
  MetaStandardizer standardizer;

  std::size_t meta_dim() const noexcept { return 4 + vocab.size(); }
  friend bool operator==(const Preprocessing&, const Preprocessing&) = default;
};

struct PreparedData {
  Preprocessing prep;
  Split outer;  // indices into the record list
  std::vector<FeatureSample> train;
  std::vector<FeatureSample> val;
  std::vector<FeatureSample> test;
};

std::vector<FeatureSample> build_samples(std::span<const VideoRecord> records,
                                         std::span<const std::size_t> indices,
                                         const Preprocessing& prep);

Split outer_split(std::span<const VideoRecord> records, const SplitSettings& settings);

// Outer train/test split, then a stratified validation split of the train
// part. Preprocessing is fitted on the full train part (train + val).
PreparedData prepare(std::span<const VideoRecord> records, const SplitSettings& settings);

}  // namespace lmfuse
