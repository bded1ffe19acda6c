#include "lmfuse/evaluation.hpp"

#include <cmath>

#include "lmfuse/error.hpp"

namespace lmfuse {

double precision(std::size_t tp, std::size_t fp) noexcept {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double recall(std::size_t tp, std::size_t fn) noexcept {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double f1_score(std::size_t tp, std::size_t fp, std::size_t fn) noexcept {
  const double p = precision(tp, fp);
  const double r = recall(tp, fn);
  return p + r == 0.0 ? 0.0 : 2.0 * (p * r) / (p + r);
}

bool EvalReport::has_nan() const noexcept {
  if (std::isnan(macro_f1)) return true;
  for (const auto& c : per_class) {
    if (std::isnan(c.precision) || std::isnan(c.recall) || std::isnan(c.f1)) return true;
  }
  return false;
}

EvalReport confusion_report(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) throw ValidationError("truth/prediction length mismatch");
  EvalReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == Label::one;
    const bool p = predicted[i] == Label::one;
    if (t && p) ++r.tp;
    else if (!t && p) ++r.fp;
    else if (t && !p) ++r.fn;
    else ++r.tn;
  }
  // Class 0 swaps roles: its true positives are the true negatives.
  r.per_class[0] = {precision(r.tn, r.fn), recall(r.tn, r.fp), f1_score(r.tn, r.fn, r.fp)};
  r.per_class[1] = {precision(r.tp, r.fp), recall(r.tp, r.fn), f1_score(r.tp, r.fp, r.fn)};
  r.macro_f1 = 0.5 * (r.per_class[0].f1 + r.per_class[1].f1);
  return r;
}

EvalReport evaluate(const FusionModel& model, std::span<const FeatureSample> samples,
                    Execution exec) {
  if (samples.empty()) throw ValidationError("cannot evaluate on an empty set");
  const auto probs = predict_all(model, samples, exec);
  std::vector<Label> truth, pred;
  truth.reserve(samples.size());
  pred.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    truth.push_back(samples[i].label);
    pred.push_back(predicted_label(probs[i]));
  }
  return confusion_report(truth, pred);
}

const ModeResult& AblationReport::at(Mode m) const {
  for (const auto& r : results) {
    if (r.mode == m) return r;
  }
  throw ValidationError("mode missing from ablation report");
}

AblationReport ablate(std::span<const VideoRecord> records, const AblationConfig& config) {
  const PreparedData data = prepare(records, config.split);
  AblationReport report;
  report.n_train = data.train.size();
  report.n_val = data.val.size();
  report.n_test = data.test.size();
  for (std::size_t k = 0; k < kAllModes.size(); ++k) {
    TrainConfig tc = config.train;
    tc.mode = kAllModes[k];
    auto fitted = fit(data.train, data.val, tc);
    ModeResult& r = report.results[k];
    r.mode = tc.mode;
    r.test = evaluate(fitted.model, data.test, tc.execution);
    r.train = evaluate(fitted.model, data.train, tc.execution);
    r.training = std::move(fitted.report);
  }
  return report;
}

}  // namespace lmfuse
