#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmfuse {

inline constexpr std::size_t kChannels = 8;
inline constexpr std::size_t kMaxFrames = 100;

inline constexpr std::array<std::string_view, kChannels> kChannelNames = {
    "left_upper_eyeline", "left_lower_eyeline", "right_upper_eyeline", "right_lower_eyeline",
    "left_eyebrow",       "right_eyebrow",      "mid_of_lip",          "right_end_of_lip",
};

// Label 1 means the relative stroke ratio did not decrease from the interview
// day to the next round.
enum class Label : std::uint8_t { zero = 0, one = 1 };

constexpr std::size_t index(Label l) noexcept { return static_cast<std::size_t>(l); }
constexpr Label label_from_index(std::size_t i) noexcept { return i == 0 ? Label::zero : Label::one; }

struct Frame {
  long frame_index = 0;
  double timestamp = 0.0;
  std::array<double, kChannels> x{};
};

struct LandmarkSeries {
  std::string video_id;
  std::vector<Frame> frames;
};

struct LandmarkFile {
  std::vector<LandmarkSeries> series;  // ordered by first appearance of video_id
  std::size_t truncated_series = 0;
  std::size_t truncated_frames = 0;
};

struct GolferMeta {
  std::string video_id;
  std::string golfer_id;
  double age = 0.0;
  double career_length = 0.0;
  double height_cm = 0.0;
  double prev_rank = 1.0;
  std::string nationality;
};

struct ScoreRecord {
  std::string video_id;
  double strokes_day = 0.0;
  double field_avg_day = 0.0;
  double strokes_next = 0.0;
  double field_avg_next = 0.0;
};

struct LabelRecord {
  std::string video_id;
  Label label = Label::zero;
};

// CSV contracts. Parse errors carry the source name and 1-based line number.
LandmarkFile parse_landmarks(std::istream& in, const std::string& source = "<landmarks>");
LandmarkFile parse_landmarks(const std::filesystem::path& path);
std::vector<GolferMeta> parse_metadata(std::istream& in, const std::string& source = "<metadata>");
std::vector<GolferMeta> parse_metadata(const std::filesystem::path& path);
std::vector<ScoreRecord> parse_scores(std::istream& in, const std::string& source = "<scores>");
std::vector<ScoreRecord> parse_scores(const std::filesystem::path& path);
std::vector<LabelRecord> parse_labels(std::istream& in, const std::string& source = "<labels>");
std::vector<LabelRecord> parse_labels(const std::filesystem::path& path);

void write_landmarks(std::ostream& out, std::span<const LandmarkSeries> series);
void write_metadata(std::ostream& out, std::span<const GolferMeta> metas);
void write_labels(std::ostream& out, std::span<const LabelRecord> labels);

void validate(const GolferMeta& meta);
void validate(const ScoreRecord& record);

// 1 when next-round stroke ratio >= interview-day ratio.
Label derive_label(const ScoreRecord& record);
std::vector<LabelRecord> derive_labels(std::span<const ScoreRecord> records);

class NationalityVocab {
 public:
  NationalityVocab() = default;
  explicit NationalityVocab(std::vector<std::string> codes);

  // Known codes plus the trailing unknown slot.
  std::size_t size() const noexcept { return codes_.size() + 1; }
  std::size_t unknown_index() const noexcept { return codes_.size(); }
  std::size_t index_of(std::string_view code) const noexcept;
  const std::vector<std::string>& codes() const noexcept { return codes_; }

  friend bool operator==(const NationalityVocab&, const NationalityVocab&) = default;

 private:
  std::vector<std::string> codes_;
};

NationalityVocab build_vocab(std::span<const GolferMeta> metas);

// z-score statistics for [age, career_length, height, prev_rank].
struct MetaStandardizer {
  std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, 4> stddev{1.0, 1.0, 1.0, 1.0};

  static MetaStandardizer fit(std::span<const GolferMeta> metas);
  friend bool operator==(const MetaStandardizer&, const MetaStandardizer&) = default;
};

std::vector<double> encode_meta(const GolferMeta& meta, const NationalityVocab& vocab,
                                const MetaStandardizer& standardizer);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Per class, round(n_c * test_fraction) samples (at least 1, at most n_c - 1)
// go to test. Index lists are returned in ascending order.
Split stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed);

// Whole groups (golfers) are assigned to test until the test share reaches
// test_fraction. Not stratified.
Split group_split(std::span<const std::string> groups, double test_fraction, std::uint64_t seed);

struct ClassWeights {
  std::array<double, 2> w{1.0, 1.0};
  double operator[](Label l) const noexcept { return w[index(l)]; }
  friend bool operator==(const ClassWeights&, const ClassWeights&) = default;
};

// weight_c = N / (2 N_c).
ClassWeights class_weights(std::span<const Label> labels);

std::array<std::size_t, 2> class_counts(std::span<const Label> labels);

// One fully joined video: landmarks, meta-data and label.
struct VideoRecord {
  LandmarkSeries series;
  GolferMeta meta;
  Label label = Label::zero;
};

struct JoinSummary {
  std::size_t excluded_short = 0;      // series with fewer than 2 frames
  std::size_t meta_without_video = 0;  // metadata rows with no landmark series
};

// Joins by video_id. A landmark series without a metadata row or label is an
// error naming the id; series with fewer than 2 frames are excluded.
std::vector<VideoRecord> join_inputs(std::span<const LandmarkSeries> series,
                                     std::span<const GolferMeta> metas,
                                     std::span<const LabelRecord> labels,
                                     JoinSummary* summary = nullptr);

}  // namespace lmfuse
