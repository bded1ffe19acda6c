#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmfuse/batch.hpp"
#include "lmfuse/model.hpp"

namespace lmfuse {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 16;
  double dropout_rate = 0.2;
  std::uint64_t seed = 42;
  std::optional<ClassWeights> class_weights;  // computed from the train set when unset
  std::size_t early_stop_patience = 25;
  Mode mode = Mode::merged;
  HeadActivation head = HeadActivation::identity;
  Reduction reduction = Reduction::mean;
  Execution execution = Execution::parallel;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
  bool monitored_train_loss = false;  // no validation set was given
  ClassWeights weights;
};

struct FitResult {
  FusionModel model;
  TrainReport report;
};

class AdamState {
 public:
  explicit AdamState(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad, double lr, double beta1,
            double beta2, double eps);

 private:
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

void sgd_step(std::span<double> params, std::span<const double> grad, double lr);

// Shuffled mini-batch training; the parameters with the lowest monitored loss
// (validation, or training loss if `val` is empty) are returned.
FitResult fit(std::span<const FeatureSample> train, std::span<const FeatureSample> val,
              const TrainConfig& config);

struct GradCheckOptions {
  std::uint64_t seed = 0;
  Mode mode = Mode::merged;
  HeadActivation head = HeadActivation::identity;
  double dropout_rate = 0.0;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::size_t meta_dim = 6;
  std::size_t seq_len = 5;
  // Test hook applied to the analytic gradient before comparison.
  std::function<void(std::span<double>)> corrupt;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  Mode mode = Mode::merged;
  HeadActivation head = HeadActivation::identity;
  double dropout_rate = 0.0;
  std::size_t n_params = 0;
  std::size_t n_nonzero = 0;  // analytic gradient entries that are not exactly zero
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::string worst_tensor;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

// Analytic vs central-difference gradients on a tiny random model and sample.
// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const GradCheckOptions& options);

// Configuration k cycles mode fastest, then head activation, then dropout
// (0 or 0.2), with seed mix_seed(seed, k).
std::vector<GradCheckOptions> gradcheck_sweep(std::uint64_t seed, std::size_t count, double tolerance);

}  // namespace lmfuse
