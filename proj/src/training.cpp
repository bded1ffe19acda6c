#include "lmfuse/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lmfuse/error.hpp"
#include "lmfuse/evaluation.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse {

namespace {

// Stream ids for seeds derived from TrainConfig::seed.
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kShuffleStream = 12;
constexpr std::uint64_t kDropoutStream = 13;

}  // namespace

std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be finite and non-negative");
  }
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must be in [0, 1)");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
    throw ValidationError("invalid Adam hyperparameters");
  }
  if (class_weights) {
    for (double w : class_weights->w) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("class weights must be >= 0");
    }
  }
}

void AdamState::step(std::span<double> params, std::span<const double> grad, double lr,
                     double beta1, double beta2, double eps) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grad, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

FitResult fit(std::span<const FeatureSample> train, std::span<const FeatureSample> val,
              const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw ValidationError("empty training set");
  std::vector<Label> labels;
  for (const auto& s : train) labels.push_back(s.label);
  const auto counts = class_counts(labels);
  if (counts[0] == 0 || counts[1] == 0) throw ValidationError("training set needs both classes");
  const ClassWeights weights = config.class_weights.value_or(class_weights(labels));

  ModelConfig mc;
  mc.mode = config.mode;
  mc.meta_dim = train.front().meta.size();
  mc.dropout_rate = config.dropout_rate;
  mc.head = config.head;
  mc.seed = mix_seed(config.seed, kInitStream);
  for (const auto& s : train) {
    if (s.meta.size() != mc.meta_dim) throw ValidationError("inconsistent meta vector lengths");
  }
  FusionModel model = init_model(mc);
  auto params = model.params();

  AdamState adam(params.size());
  Rng shuffle_rng(mix_seed(config.seed, kShuffleStream));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  report.weights = weights;
  report.monitored_train_loss = val.empty();
  std::vector<double> best(params.begin(), params.end());
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    const std::uint64_t dropout_seed = mix_seed(config.seed, kDropoutStream, epoch);
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      auto bg = batch_gradient(model, train, batch, weights, dropout_seed, config.reduction,
                               config.execution);
      if (!std::isfinite(bg.loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      }
      loss_sum += config.reduction == Reduction::mean ? bg.loss * static_cast<double>(batch.size())
                                                      : bg.loss;
      if (config.optimizer == OptimizerKind::adam) {
        adam.step(params, bg.grad, config.learning_rate, config.beta1, config.beta2,
                  config.adam_epsilon);
      } else {
        sgd_step(params, bg.grad, config.learning_rate);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    double monitored = rec.train_loss;
    if (!val.empty()) {
      rec.val_loss = dataset_loss(model, val, weights, Reduction::mean, config.execution);
      rec.val_f1 = evaluate(model, val, config.execution).f1();
      monitored = rec.val_loss;
    }
    if (!std::isfinite(monitored)) {
      throw NumericError("non-finite monitored loss at epoch " + std::to_string(epoch));
    }
    report.epochs.push_back(rec);

    if (monitored < best_loss) {
      best_loss = monitored;
      report.best_epoch = epoch;
      std::copy(params.begin(), params.end(), best.begin());
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience && epoch < config.epochs) {
      report.stopped_early = true;
      break;
    }
  }

  report.best_val_loss = best_loss;
  std::copy(best.begin(), best.end(), params.begin());
  return FitResult{std::move(model), std::move(report)};
}

}  // namespace lmfuse
