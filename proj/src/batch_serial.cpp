#include <algorithm>
#include <cmath>

#include "lmfuse/batch.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse {

double weighted_ce_loss(const std::array<double, 2>& probabilities, Label label,
                        const ClassWeights& weights) {
  return -weights[label] * std::log(probabilities[index(label)] + kProbabilityFloor);
}

namespace detail {

void per_sample_gradients_serial(const FusionModel& model, std::span<const FeatureSample> samples,
                                 std::span<const std::size_t> batch, const ClassWeights& weights,
                                 std::uint64_t dropout_seed, std::span<double> losses,
                                 std::span<double> grads) {
  const std::size_t P = model.params().size();
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const FeatureSample& s = samples[batch[k]];
    auto fwd = fusion_forward(model, s, true, mix_seed(dropout_seed, batch[k]));
    losses[k] = weighted_ce_loss(fwd.probabilities, s.label, weights);
    auto g = grads.subspan(k * P, P);
    std::fill(g.begin(), g.end(), 0.0);
    fusion_backward(model, s, s.label, weights[s.label], fwd.cache, g);
  }
}

void predict_serial(const FusionModel& model, std::span<const FeatureSample> samples,
                    std::span<std::array<double, 2>> out) {
  for (std::size_t i = 0; i < samples.size(); ++i) out[i] = predict(model, samples[i]);
}

}  // namespace detail

}  // namespace lmfuse
