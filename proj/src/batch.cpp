#include "lmfuse/batch.hpp"

namespace lmfuse {

BatchGradient batch_gradient(const FusionModel& model, std::span<const FeatureSample> samples,
                             std::span<const std::size_t> batch, const ClassWeights& weights,
                             std::uint64_t dropout_seed, Reduction reduction, Execution exec) {
  const std::size_t P = model.params().size();
  std::vector<double> losses(batch.size());
  std::vector<double> per_sample(batch.size() * P);
  if (exec == Execution::parallel) {
    detail::per_sample_gradients_parallel(model, samples, batch, weights, dropout_seed, losses,
                                          per_sample);
  } else {
    detail::per_sample_gradients_serial(model, samples, batch, weights, dropout_seed, losses,
                                        per_sample);
  }

  BatchGradient out;
  out.grad.assign(P, 0.0);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    out.loss += losses[k];
    const double* g = &per_sample[k * P];
    for (std::size_t j = 0; j < P; ++j) out.grad[j] += g[j];
  }
  if (reduction == Reduction::mean && !batch.empty()) {
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (double& g : out.grad) g *= inv;
  }
  return out;
}

std::vector<std::array<double, 2>> predict_all(const FusionModel& model,
                                               std::span<const FeatureSample> samples,
                                               Execution exec) {
  std::vector<std::array<double, 2>> out(samples.size());
  if (exec == Execution::parallel) {
    detail::predict_parallel(model, samples, out);
  } else {
    detail::predict_serial(model, samples, out);
  }
  return out;
}

double dataset_loss(const FusionModel& model, std::span<const FeatureSample> samples,
                    const ClassWeights& weights, Reduction reduction, Execution exec) {
  const auto probs = predict_all(model, samples, exec);
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    total += weighted_ce_loss(probs[i], samples[i].label, weights);
  }
  if (reduction == Reduction::mean && !samples.empty()) total /= static_cast<double>(samples.size());
  return total;
}

}  // namespace lmfuse
