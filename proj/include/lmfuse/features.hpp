#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmfuse/dataset.hpp"

namespace lmfuse {

// Frame-to-frame movement of each landmark channel. gap_flags[t] is set when
// delta t spans a missing frame (frame_index jump > 1).
struct DeltaSeries {
  std::string video_id;
  std::array<std::vector<double>, kChannels> channels;
  std::vector<bool> gap_flags;

  std::size_t length() const noexcept { return channels[0].size(); }
};

struct FeatureSample {
  std::string video_id;
  DeltaSeries deltas;
  std::vector<double> meta;
  Label label = Label::zero;
};

// Consecutive retained frames are differenced as adjacent. Throws
// ValidationError for fewer than 2 frames.
DeltaSeries compute_deltas(const LandmarkSeries& series);

// Per channel, divides by the channel's max |delta|; all-zero channels stay zero.
DeltaSeries normalize_deltas(DeltaSeries raw);

FeatureSample build_sample(const LandmarkSeries& series, const GolferMeta* meta,
                           const NationalityVocab& vocab, const MetaStandardizer& standardizer,
                           std::optional<Label> label);

inline FeatureSample build_sample(const VideoRecord& record, const NationalityVocab& vocab,
                                  const MetaStandardizer& standardizer) {
  return build_sample(record.series, &record.meta, vocab, standardizer, record.label);
}

// Debug dump mirroring the landmarks CSV layout, one row per delta.
void write_deltas(std::ostream& out, std::span<const DeltaSeries> series);

}  // namespace lmfuse
