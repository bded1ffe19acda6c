#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lmfuse/dataset.hpp"

namespace lmfuse {

// How the two modalities' disagreements with the label are coupled.
//   independent: separate coin flips.
//   antithetic:  one shared uniform draw, so the face errs only on draws in
//                [0, 1 - p_face) and the meta-data only on [p_meta, 1); their
//                errors never coincide while p_face + p_meta >= 1.
// Both leave each modality's marginal agreement rate at p.
enum class ErrorCoupling { independent, antithetic };

std::string_view to_string(ErrorCoupling c) noexcept;
ErrorCoupling parse_coupling(std::string_view s);

struct SynthSpec {
  std::size_t n_samples = 213;
  double class_balance = 0.15;  // fraction of label 1
  std::size_t frames = 100;
  double p_face = 0.65;
  double p_meta = 0.65;
  double noise_sigma = 0.5;     // per-frame landmark jitter, pixels
  std::uint64_t seed = 42;
  std::size_t nationality_pool = 18;
  std::size_t golfers = 74;
  double frame_drop_rate = 0.0;  // simulated detection failures
  ErrorCoupling coupling = ErrorCoupling::antithetic;

  void validate() const;
};

struct SynthData {
  std::vector<LandmarkSeries> landmarks;
  std::vector<GolferMeta> metas;
  std::vector<LabelRecord> labels;
};

SynthData generate(const SynthSpec& spec);

std::vector<VideoRecord> to_records(const SynthData& data);

nlohmann::json to_json(const SynthSpec& spec);

// landmarks.csv, metadata.csv, labels.csv and manifest.json under `dir`.
void write_synth(const SynthData& data, const SynthSpec& spec, const std::filesystem::path& dir);

}  // namespace lmfuse
