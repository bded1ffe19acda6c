#pragma once

// Data-parallel loops over samples. Every kernel has a serial reference path
// and an OpenMP path; both produce bitwise-identical results because
// per-sample work is independent and reductions run serially in batch order.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lmfuse/dataset.hpp"
#include "lmfuse/features.hpp"
#include "lmfuse/model.hpp"

namespace lmfuse {

enum class Execution { serial, parallel };
enum class Reduction { mean, sum };

struct BatchGradient {
  double loss = 0.0;          // reduced weighted cross-entropy
  std::vector<double> grad;   // reduced gradient, same layout as the parameters
};

// Train-mode forward/backward for samples[batch[k]]. Sample i draws its dropout
// masks from mix_seed(dropout_seed, i), independent of batch position.
BatchGradient batch_gradient(const FusionModel& model, std::span<const FeatureSample> samples,
                             std::span<const std::size_t> batch, const ClassWeights& weights,
                             std::uint64_t dropout_seed, Reduction reduction, Execution exec);

// Eval-mode probabilities for every sample, in input order.
std::vector<std::array<double, 2>> predict_all(const FusionModel& model,
                                               std::span<const FeatureSample> samples,
                                               Execution exec);

double weighted_ce_loss(const std::array<double, 2>& probabilities, Label label,
                        const ClassWeights& weights);

// Eval-mode weighted loss, reduced in input order.
double dataset_loss(const FusionModel& model, std::span<const FeatureSample> samples,
                    const ClassWeights& weights, Reduction reduction, Execution exec);

namespace detail {
// Per-sample losses and gradients written into slot k of the output buffers.
void per_sample_gradients_serial(const FusionModel& model, std::span<const FeatureSample> samples,
                                 std::span<const std::size_t> batch, const ClassWeights& weights,
                                 std::uint64_t dropout_seed, std::span<double> losses,
                                 std::span<double> grads);
void per_sample_gradients_parallel(const FusionModel& model, std::span<const FeatureSample> samples,
                                   std::span<const std::size_t> batch, const ClassWeights& weights,
                                   std::uint64_t dropout_seed, std::span<double> losses,
                                   std::span<double> grads);
void predict_serial(const FusionModel& model, std::span<const FeatureSample> samples,
                    std::span<std::array<double, 2>> out);
void predict_parallel(const FusionModel& model, std::span<const FeatureSample> samples,
                      std::span<std::array<double, 2>> out);
}  // namespace detail

}  // namespace lmfuse
