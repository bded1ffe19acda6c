#include "lmfuse/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "csv.hpp"
#include "lmfuse/error.hpp"

namespace lmfuse {

DeltaSeries compute_deltas(const LandmarkSeries& series) {
  const auto& frames = series.frames;
  if (frames.size() < 2) {
    throw ValidationError("video " + series.video_id + " has fewer than 2 frames");
  }
  DeltaSeries out;
  out.video_id = series.video_id;
  const std::size_t n = frames.size() - 1;
  for (auto& ch : out.channels) ch.resize(n);
  out.gap_flags.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      out.channels[c][t] = frames[t + 1].x[c] - frames[t].x[c];
    }
    out.gap_flags[t] = frames[t + 1].frame_index - frames[t].frame_index > 1;
  }
  return out;
}

DeltaSeries normalize_deltas(DeltaSeries raw) {
  for (auto& ch : raw.channels) {
    double peak = 0.0;
    for (double d : ch) peak = std::max(peak, std::abs(d));
    if (peak == 0.0) continue;
    for (double& d : ch) d /= peak;
  }
  return raw;
}

FeatureSample build_sample(const LandmarkSeries& series, const GolferMeta* meta,
                           const NationalityVocab& vocab, const MetaStandardizer& standardizer,
                           std::optional<Label> label) {
  if (meta == nullptr) throw ValidationError("no metadata for video " + series.video_id);
  if (!label) throw ValidationError("no label for video " + series.video_id);
  if (meta->video_id != series.video_id) {
    throw ValidationError("video_id mismatch: landmarks " + series.video_id + " vs metadata " +
                          meta->video_id);
  }
  FeatureSample s;
  s.video_id = series.video_id;
  s.deltas = normalize_deltas(compute_deltas(series));
  s.meta = encode_meta(*meta, vocab, standardizer);
  s.label = *label;
  return s;
}

void write_deltas(std::ostream& out, std::span<const DeltaSeries> series) {
  out << "video_id,delta_index,gap";
  for (auto name : kChannelNames) out << ',' << name;
  out << '\n';
  for (const auto& s : series) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << s.video_id << ',' << t << ',' << (s.gap_flags[t] ? 1 : 0);
      for (const auto& ch : s.channels) out << ',' << csv::format(ch[t]);
      out << '\n';
    }
  }
}

}  // namespace lmfuse
