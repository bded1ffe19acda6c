#include <algorithm>

#include <omp.h>

#include "lmfuse/batch.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse::detail {

void per_sample_gradients_parallel(const FusionModel& model, std::span<const FeatureSample> samples,
                                   std::span<const std::size_t> batch, const ClassWeights& weights,
                                   std::uint64_t dropout_seed, std::span<double> losses,
                                   std::span<double> grads) {
  const std::size_t P = model.params().size();
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto slot = static_cast<std::size_t>(k);
    const FeatureSample& s = samples[batch[slot]];
    auto fwd = fusion_forward(model, s, true, mix_seed(dropout_seed, batch[slot]));
    losses[slot] = weighted_ce_loss(fwd.probabilities, s.label, weights);
    auto g = grads.subspan(slot * P, P);
    std::fill(g.begin(), g.end(), 0.0);
    fusion_backward(model, s, s.label, weights[s.label], fwd.cache, g);
  }
}

void predict_parallel(const FusionModel& model, std::span<const FeatureSample> samples,
                      std::span<std::array<double, 2>> out) {
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = predict(model, samples[static_cast<std::size_t>(i)]);
  }
}

}  // namespace lmfuse::detail
