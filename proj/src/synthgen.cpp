#include "lmfuse/synthgen.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>

#include "lmfuse/error.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse {

namespace {

constexpr std::array<std::string_view, 24> kNations = {
    "USA", "KOR", "JPN", "FRA", "ENG", "SWE", "AUS", "CAN", "THA", "CHN", "ESP", "GER",
    "MEX", "NZL", "RSA", "TPE", "NOR", "SCO", "ITA", "DEN", "PAR", "COL", "IRL", "BEL"};

// Neutral-face x positions (pixels) for the eight channels.
constexpr std::array<double, kChannels> kBaseX = {282.0, 284.0, 358.0, 356.0,
                                                  276.0, 364.0, 320.0, 346.0};

// Eyeline blink-like oscillation amplitude (pixels) by facial effective class.
constexpr double kEyeAmplitudeQuiet = 0.0;
constexpr double kEyeAmplitudeActive = 8.0;
constexpr double kEyePeriod = 8.0;  // frames
constexpr double kSwaySigma = 0.25;
constexpr double kSwayPersistence = 0.8;

// prev_rank distribution by meta effective class.
constexpr double kRankMeanActive = 15.0;
constexpr double kRankSdActive = 7.0;
constexpr double kRankMeanQuiet = 50.0;
constexpr double kRankSdQuiet = 15.0;

struct Golfer {
  std::string id;
  std::string nationality;
  double height_cm;
  double base_age;
  double debut_age;
};

std::string video_name(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%04zu", i);
  return buf;
}

}  // namespace

std::string_view to_string(ErrorCoupling c) noexcept {
  return c == ErrorCoupling::antithetic ? "antithetic" : "independent";
}

ErrorCoupling parse_coupling(std::string_view s) {
  if (s == "antithetic") return ErrorCoupling::antithetic;
  if (s == "independent") return ErrorCoupling::independent;
  throw ValidationError("unknown coupling '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  if (n_samples < 10) throw ValidationError("n_samples must be >= 10");
  if (!(class_balance > 0.0 && class_balance < 1.0)) {
    throw ValidationError("class_balance must be in (0, 1)");
  }
  if (!(p_face >= 0.5 && p_face <= 1.0) || !(p_meta >= 0.5 && p_meta <= 1.0)) {
    throw ValidationError("p_face and p_meta must be in [0.5, 1]");
  }
  if (frames < 2) throw ValidationError("frames must be >= 2");
  if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be >= 0");
  if (nationality_pool < 1 || nationality_pool > kNations.size()) {
    throw ValidationError("nationality_pool must be in [1, " + std::to_string(kNations.size()) + "]");
  }
  if (golfers < 1) throw ValidationError("golfers must be >= 1");
  if (!(frame_drop_rate >= 0.0 && frame_drop_rate < 1.0)) {
    throw ValidationError("frame_drop_rate must be in [0, 1)");
  }
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();

  std::vector<Golfer> golfers;
  Rng grng(mix_seed(spec.seed, 1));
  for (std::size_t g = 0; g < spec.golfers; ++g) {
    Golfer golfer;
    char buf[16];
    std::snprintf(buf, sizeof buf, "g%03zu", g);
    golfer.id = buf;
    const auto nat = static_cast<std::size_t>(grng.uniform() * static_cast<double>(spec.nationality_pool));
    golfer.nationality = std::string(kNations[std::min(nat, spec.nationality_pool - 1)]);
    golfer.height_cm = grng.normal(170.0, 6.0);
    golfer.debut_age = grng.uniform(17.0, 22.0);
    golfer.base_age = golfer.debut_age + grng.uniform(0.0, 12.0);
    golfers.push_back(golfer);
  }

  SynthData out;
  out.landmarks.resize(spec.n_samples);
  out.metas.resize(spec.n_samples);
  out.labels.resize(spec.n_samples);

  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    Rng rng(mix_seed(spec.seed, 2, i));
    const std::string id = video_name(i);
    const Label label = rng.bernoulli(spec.class_balance) ? Label::one : Label::zero;
    const int y = static_cast<int>(index(label));

    bool face_wrong = false;
    bool meta_wrong = false;
    const double u = rng.uniform();
    if (spec.coupling == ErrorCoupling::antithetic) {
      face_wrong = u < 1.0 - spec.p_face;
      meta_wrong = u >= spec.p_meta;
    } else {
      face_wrong = u < 1.0 - spec.p_face;
      meta_wrong = rng.uniform() >= spec.p_meta;
    }
    const int face_class = face_wrong ? 1 - y : y;
    const int meta_class = meta_wrong ? 1 - y : y;

    // Landmarks: shared head sway, per-channel jitter, and a periodic eyeline
    // motion whose amplitude carries the facial signal. Face size scales all
    // motion; offsets model framing.
    LandmarkSeries& series = out.landmarks[i];
    series.video_id = id;
    const double scale = rng.uniform(0.7, 1.4);
    const double offset = rng.normal(0.0, 20.0);
    const double eye_amp = face_class == 1 ? kEyeAmplitudeActive : kEyeAmplitudeQuiet;
    const double period = kEyePeriod;
    const double phase = rng.uniform(-0.3, 0.3);
    std::array<double, kChannels> other_amp{};
    std::array<double, kChannels> other_phase{};
    for (std::size_t c = 4; c < kChannels; ++c) {
      other_amp[c] = rng.uniform(0.0, 1.5);
      other_phase[c] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    double sway = 0.0;
    double velocity = 0.0;
    for (std::size_t t = 0; t < spec.frames; ++t) {
      velocity = kSwayPersistence * velocity + rng.normal(0.0, kSwaySigma);
      sway += velocity;
      Frame f;
      f.frame_index = static_cast<long>(t);
      f.timestamp = 0.25 * static_cast<double>(t);
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(t) / period;
      for (std::size_t c = 0; c < kChannels; ++c) {
        double motion = sway;
        if (c < 4) {
          motion += eye_amp * std::sin(angle + phase);
        } else {
          motion += other_amp[c] * std::sin(0.5 * angle + other_phase[c]);
        }
        motion += rng.normal(0.0, spec.noise_sigma);
        f.x[c] = kBaseX[c] + offset + scale * motion;
      }
      const bool edge = t == 0 || t + 1 == spec.frames;
      if (!edge && rng.bernoulli(spec.frame_drop_rate)) continue;
      series.frames.push_back(f);
    }

    const Golfer& g = golfers[static_cast<std::size_t>(rng.uniform() * static_cast<double>(golfers.size()))];
    GolferMeta& m = out.metas[i];
    m.video_id = id;
    m.golfer_id = g.id;
    m.age = std::round((g.base_age + rng.uniform(0.0, 3.0)) * 10.0) / 10.0;
    m.career_length = std::max(0.0, std::round((m.age - g.debut_age) * 10.0) / 10.0);
    m.height_cm = std::round(g.height_cm * 10.0) / 10.0;
    const double rank = meta_class == 1 ? rng.normal(kRankMeanActive, kRankSdActive)
                                        : rng.normal(kRankMeanQuiet, kRankSdQuiet);
    m.prev_rank = std::clamp(std::round(rank), 1.0, 150.0);
    m.nationality = g.nationality;

    out.labels[i] = LabelRecord{id, label};
  }
  return out;
}

std::vector<VideoRecord> to_records(const SynthData& data) {
  return join_inputs(data.landmarks, data.metas, data.labels);
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"n_samples", s.n_samples},
          {"class_balance", s.class_balance},
          {"frames", s.frames},
          {"p_face", s.p_face},
          {"p_meta", s.p_meta},
          {"noise_sigma", s.noise_sigma},
          {"seed", s.seed},
          {"nationality_pool", s.nationality_pool},
          {"golfers", s.golfers},
          {"frame_drop_rate", s.frame_drop_rate},
          {"coupling", to_string(s.coupling)}};
}

void write_synth(const SynthData& data, const SynthSpec& spec, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&dir](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw ValidationError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("landmarks.csv");
    write_landmarks(f, data.landmarks);
  }
  {
    auto f = open("metadata.csv");
    write_metadata(f, data.metas);
  }
  {
    auto f = open("labels.csv");
    write_labels(f, data.labels);
  }
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  nlohmann::json manifest = {{"spec", to_json(spec)},
                             {"files", {"landmarks.csv", "metadata.csv", "labels.csv"}},
                             {"n_videos", data.landmarks.size()},
                             {"generated_at_unix", secs}};
  auto f = open("manifest.json");
  f << manifest.dump(2) << '\n';
}

}  // namespace lmfuse
