#include "lmfuse/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "lmfuse/error.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse {

namespace {

constexpr std::string_view kLandmarkHeader =
    "video_id,frame_index,timestamp_s,left_upper_eyeline,left_lower_eyeline,"
    "right_upper_eyeline,right_lower_eyeline,left_eyebrow,right_eyebrow,mid_of_lip,"
    "right_end_of_lip";
constexpr std::string_view kMetadataHeader =
    "video_id,golfer_id,age,career_years,height_cm,prev_rank,nationality";
constexpr std::string_view kScoresHeader =
    "video_id,strokes_day,field_avg_day,strokes_next,field_avg_next";
constexpr std::string_view kLabelsHeader = "video_id,label";

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

}  // namespace

LandmarkFile parse_landmarks(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source, kLandmarkHeader);
  LandmarkFile out;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<std::unordered_set<long>> seen;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    if (fields.size() != 3 + kChannels) {
      throw ParseError(source, reader.line(),
                       "expected " + std::to_string(3 + kChannels) + " columns, got " +
                           std::to_string(fields.size()));
    }
    std::string id(fields[0]);
    if (id.empty()) throw ParseError(source, reader.line(), "empty video_id");
    Frame f;
    f.frame_index = reader.integer(fields[1], "frame_index");
    f.timestamp = reader.real(fields[2], "timestamp_s");
    for (std::size_t c = 0; c < kChannels; ++c) {
      f.x[c] = reader.real(fields[3 + c], kChannelNames[c]);
    }
    auto [it, inserted] = slot.try_emplace(id, out.series.size());
    if (inserted) {
      out.series.push_back(LandmarkSeries{id, {}});
      seen.emplace_back();
    }
    if (!seen[it->second].insert(f.frame_index).second) {
      throw ParseError(source, reader.line(),
                       "duplicate frame_index " + std::to_string(f.frame_index) + " for video " + id);
    }
    out.series[it->second].frames.push_back(f);
  }

  for (auto& s : out.series) {
    std::sort(s.frames.begin(), s.frames.end(),
              [](const Frame& a, const Frame& b) { return a.frame_index < b.frame_index; });
    for (std::size_t t = 1; t < s.frames.size(); ++t) {
      if (s.frames[t].timestamp < s.frames[t - 1].timestamp) {
        throw ValidationError(source + ": timestamps decrease within video " + s.video_id +
                              " at frame_index " + std::to_string(s.frames[t].frame_index));
      }
    }
    if (s.frames.size() > kMaxFrames) {
      ++out.truncated_series;
      out.truncated_frames += s.frames.size() - kMaxFrames;
      s.frames.resize(kMaxFrames);
    }
  }
  return out;
}

LandmarkFile parse_landmarks(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_landmarks(in, path.string());
}

std::vector<GolferMeta> parse_metadata(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source, kMetadataHeader);
  std::vector<GolferMeta> out;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    if (fields.size() != 7) {
      throw ParseError(source, reader.line(),
                       "expected 7 columns, got " + std::to_string(fields.size()));
    }
    GolferMeta m;
    m.video_id = std::string(fields[0]);
    m.golfer_id = std::string(fields[1]);
    m.age = reader.real(fields[2], "age");
    m.career_length = reader.real(fields[3], "career_years");
    m.height_cm = reader.real(fields[4], "height_cm");
    m.prev_rank = reader.real(fields[5], "prev_rank");
    m.nationality = std::string(fields[6]);
    try {
      validate(m);
    } catch (const DomainError& e) {
      throw ParseError(source, reader.line(), e.what());
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<GolferMeta> parse_metadata(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_metadata(in, path.string());
}

std::vector<ScoreRecord> parse_scores(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source, kScoresHeader);
  std::vector<ScoreRecord> out;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    if (fields.size() != 5) {
      throw ParseError(source, reader.line(),
                       "expected 5 columns, got " + std::to_string(fields.size()));
    }
    ScoreRecord r;
    r.video_id = std::string(fields[0]);
    r.strokes_day = reader.real(fields[1], "strokes_day");
    r.field_avg_day = reader.real(fields[2], "field_avg_day");
    r.strokes_next = reader.real(fields[3], "strokes_next");
    r.field_avg_next = reader.real(fields[4], "field_avg_next");
    try {
      validate(r);
    } catch (const DomainError& e) {
      throw ParseError(source, reader.line(), e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreRecord> parse_scores(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_scores(in, path.string());
}

std::vector<LabelRecord> parse_labels(std::istream& in, const std::string& source) {
  csv::Reader reader(in, source, kLabelsHeader);
  std::vector<LabelRecord> out;
  std::vector<std::string_view> fields;
  while (reader.next(fields)) {
    if (fields.size() != 2) {
      throw ParseError(source, reader.line(),
                       "expected 2 columns, got " + std::to_string(fields.size()));
    }
    const long v = reader.integer(fields[1], "label");
    if (v != 0 && v != 1) throw ParseError(source, reader.line(), "label must be 0 or 1");
    out.push_back(LabelRecord{std::string(fields[0]), label_from_index(static_cast<std::size_t>(v))});
  }
  return out;
}

std::vector<LabelRecord> parse_labels(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_labels(in, path.string());
}

void write_landmarks(std::ostream& out, std::span<const LandmarkSeries> series) {
  out << kLandmarkHeader << '\n';
  for (const auto& s : series) {
    for (const auto& f : s.frames) {
      out << s.video_id << ',' << f.frame_index << ',' << csv::format(f.timestamp);
      for (double v : f.x) out << ',' << csv::format(v);
      out << '\n';
    }
  }
}

void write_metadata(std::ostream& out, std::span<const GolferMeta> metas) {
  out << kMetadataHeader << '\n';
  for (const auto& m : metas) {
    out << m.video_id << ',' << m.golfer_id << ',' << csv::format(m.age) << ','
        << csv::format(m.career_length) << ',' << csv::format(m.height_cm) << ','
        << csv::format(m.prev_rank) << ',' << m.nationality << '\n';
  }
}

void write_labels(std::ostream& out, std::span<const LabelRecord> labels) {
  out << kLabelsHeader << '\n';
  for (const auto& l : labels) out << l.video_id << ',' << index(l.label) << '\n';
}

void validate(const GolferMeta& m) {
  if (!(m.age > 0.0) || !std::isfinite(m.age)) throw DomainError("age must be positive");
  if (!(m.career_length >= 0.0) || !std::isfinite(m.career_length)) {
    throw DomainError("career_years must be non-negative");
  }
  if (!(m.height_cm > 0.0) || !std::isfinite(m.height_cm)) {
    throw DomainError("height_cm must be positive");
  }
  if (!(m.prev_rank >= 1.0) || !std::isfinite(m.prev_rank)) {
    throw DomainError("prev_rank must be >= 1");
  }
}

void validate(const ScoreRecord& r) {
  for (double v : {r.strokes_day, r.field_avg_day, r.strokes_next, r.field_avg_next}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("score fields must be positive and finite (video " + r.video_id + ")");
    }
  }
}

Label derive_label(const ScoreRecord& record) {
  validate(record);
  const double r_day = record.strokes_day / record.field_avg_day;
  const double r_next = record.strokes_next / record.field_avg_next;
  return r_next >= r_day ? Label::one : Label::zero;
}

std::vector<LabelRecord> derive_labels(std::span<const ScoreRecord> records) {
  std::vector<LabelRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(LabelRecord{r.video_id, derive_label(r)});
  return out;
}

NationalityVocab::NationalityVocab(std::vector<std::string> codes) : codes_(std::move(codes)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& c : codes_) {
    if (!seen.insert(c).second) throw ValidationError("duplicate nationality code " + c);
  }
}

std::size_t NationalityVocab::index_of(std::string_view code) const noexcept {
  auto it = std::find(codes_.begin(), codes_.end(), code);
  return it == codes_.end() ? unknown_index() : static_cast<std::size_t>(it - codes_.begin());
}

NationalityVocab build_vocab(std::span<const GolferMeta> metas) {
  std::vector<std::string> codes;
  std::unordered_set<std::string> seen;
  for (const auto& m : metas) {
    if (seen.insert(m.nationality).second) codes.push_back(m.nationality);
  }
  return NationalityVocab(std::move(codes));
}

MetaStandardizer MetaStandardizer::fit(std::span<const GolferMeta> metas) {
  MetaStandardizer s;
  if (metas.empty()) return s;
  const double n = static_cast<double>(metas.size());
  auto column = [](const GolferMeta& m, std::size_t k) {
    switch (k) {
      case 0: return m.age;
      case 1: return m.career_length;
      case 2: return m.height_cm;
      default: return m.prev_rank;
    }
  };
  for (std::size_t k = 0; k < 4; ++k) {
    double sum = 0.0;
    for (const auto& m : metas) sum += column(m, k);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& m : metas) ss += (column(m, k) - mean) * (column(m, k) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean[k] = mean;
    s.stddev[k] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::vector<double> encode_meta(const GolferMeta& meta, const NationalityVocab& vocab,
                                const MetaStandardizer& st) {
  std::vector<double> v(4 + vocab.size(), 0.0);
  const std::array<double, 4> raw{meta.age, meta.career_length, meta.height_cm, meta.prev_rank};
  for (std::size_t k = 0; k < 4; ++k) v[k] = (raw[k] - st.mean[k]) / st.stddev[k];
  v[4 + vocab.index_of(meta.nationality)] = 1.0;
  return v;
}

std::array<std::size_t, 2> class_counts(std::span<const Label> labels) {
  std::array<std::size_t, 2> n{0, 0};
  for (Label l : labels) ++n[index(l)];
  return n;
}

Split stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must be in (0, 1)");
  }
  Split split;
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (index(labels[i]) == c) members.push_back(i);
    }
    if (members.size() < 2) {
      throw ValidationError("class " + std::to_string(c) + " has " +
                            std::to_string(members.size()) + " samples; need at least 2 to split");
    }
    Rng rng(mix_seed(seed, c));
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto n = static_cast<long>(members.size());
    const long k = std::clamp(std::lround(static_cast<double>(n) * test_fraction), 1L, n - 1);
    split.test.insert(split.test.end(), members.begin(), members.begin() + k);
    split.train.insert(split.train.end(), members.begin() + k, members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Split group_split(std::span<const std::string> groups, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("test_fraction must be in (0, 1)");
  }
  std::vector<std::string> unique;
  std::unordered_map<std::string, std::size_t> sizes;
  for (const auto& g : groups) {
    if (sizes[g]++ == 0) unique.push_back(g);
  }
  if (unique.size() < 2) throw ValidationError("group split needs at least 2 groups");
  Rng rng(seed);
  std::shuffle(unique.begin(), unique.end(), rng.engine());
  const auto target = static_cast<std::size_t>(
      std::lround(static_cast<double>(groups.size()) * test_fraction));
  std::unordered_set<std::string> test_groups;
  std::size_t taken = 0;
  for (std::size_t i = 0; i + 1 < unique.size() && (taken < target || test_groups.empty()); ++i) {
    test_groups.insert(unique[i]);
    taken += sizes[unique[i]];
  }
  Split split;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    (test_groups.count(groups[i]) ? split.test : split.train).push_back(i);
  }
  return split;
}

ClassWeights class_weights(std::span<const Label> labels) {
  const auto n = class_counts(labels);
  if (n[0] == 0 || n[1] == 0) throw DomainError("class weights need both classes present");
  const double total = static_cast<double>(labels.size());
  ClassWeights w;
  for (std::size_t c = 0; c < 2; ++c) w.w[c] = total / (2.0 * static_cast<double>(n[c]));
  return w;
}

std::vector<VideoRecord> join_inputs(std::span<const LandmarkSeries> series,
                                     std::span<const GolferMeta> metas,
                                     std::span<const LabelRecord> labels, JoinSummary* summary) {
  std::unordered_map<std::string_view, const GolferMeta*> meta_by_id;
  for (const auto& m : metas) {
    if (!meta_by_id.emplace(m.video_id, &m).second) {
      throw ValidationError("duplicate metadata row for video " + m.video_id);
    }
  }
  std::unordered_map<std::string_view, Label> label_by_id;
  for (const auto& l : labels) {
    if (!label_by_id.emplace(l.video_id, l.label).second) {
      throw ValidationError("duplicate label for video " + l.video_id);
    }
  }

  JoinSummary local;
  std::vector<VideoRecord> out;
  std::unordered_set<std::string_view> used;
  for (const auto& s : series) {
    auto m = meta_by_id.find(s.video_id);
    if (m == meta_by_id.end()) throw ValidationError("no metadata for video " + s.video_id);
    auto l = label_by_id.find(s.video_id);
    if (l == label_by_id.end()) throw ValidationError("no label or score for video " + s.video_id);
    used.insert(s.video_id);
    if (s.frames.size() < 2) {
      ++local.excluded_short;
      continue;
    }
    out.push_back(VideoRecord{s, *m->second, l->second});
  }
  local.meta_without_video = metas.size() - used.size();
  if (summary) *summary = local;
  return out;
}

}  // namespace lmfuse
