#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lmfuse/batch.hpp"
#include "lmfuse/pipeline.hpp"
#include "lmfuse/training.hpp"

namespace lmfuse {

// Zero denominators yield 0.
double precision(std::size_t tp, std::size_t fp) noexcept;
double recall(std::size_t tp, std::size_t fn) noexcept;
double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) noexcept;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

// Confusion counts are with respect to the positive class (label 1).
struct EvalReport {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::array<ClassMetrics, 2> per_class{};
  double macro_f1 = 0.0;
  int positive_class = 1;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  double f1() const noexcept { return per_class[1].f1; }
  bool has_nan() const noexcept;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// argmax with ties going to class 0.
constexpr Label predicted_label(const std::array<double, 2>& p) noexcept {
  return p[1] > p[0] ? Label::one : Label::zero;
}

EvalReport confusion_report(std::span<const Label> truth, std::span<const Label> predicted);

EvalReport evaluate(const FusionModel& model, std::span<const FeatureSample> samples,
                    Execution exec = Execution::parallel);

struct AblationConfig {
  TrainConfig train;  // mode is overridden per arm
  SplitSettings split;
};

struct ModeResult {
  Mode mode = Mode::merged;
  EvalReport test;
  EvalReport train;  // on the fitting set, for the no-collapse check
  TrainReport training;
};

struct AblationReport {
  std::array<ModeResult, 3> results;  // merged, facial_only, meta_only
  std::size_t n_train = 0, n_val = 0, n_test = 0;

  const ModeResult& at(Mode m) const;
};

// One shared split; three models that differ only in mode.
AblationReport ablate(std::span<const VideoRecord> records, const AblationConfig& config);

}  // namespace lmfuse
