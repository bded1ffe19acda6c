#include "lmfuse/report.hpp"

#include <cstdio>
#include <sstream>

namespace lmfuse {

using nlohmann::json;

namespace {

json class_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

}  // namespace

json to_json(const EvalReport& r) {
  return {{"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"tn", r.tn},
          {"n", r.total()},
          {"positive_class", r.positive_class},
          {"f1", r.f1()},
          {"macro_f1", r.macro_f1},
          {"class_0", class_json(r.per_class[0])},
          {"class_1", class_json(r.per_class[1])}};
}

json to_json(const TrainConfig& c) {
  json j = {{"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"optimizer", to_string(c.optimizer)},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_epsilon", c.adam_epsilon},
            {"batch_size", c.batch_size},
            {"dropout_rate", c.dropout_rate},
            {"seed", c.seed},
            {"early_stop_patience", c.early_stop_patience},
            {"mode", to_string(c.mode)},
            {"head_activation", to_string(c.head)},
            {"reduction", c.reduction == Reduction::mean ? "mean" : "sum"}};
  if (c.class_weights) j["class_weights"] = c.class_weights->w;
  return j;
}

json to_json(const TrainReport& r) {
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"val_f1", e.val_f1}});
  }
  return {{"epochs", epochs},
          {"epochs_run", r.epochs.size()},
          {"best_epoch", r.best_epoch},
          {"best_monitored_loss", r.best_val_loss},
          {"monitored", r.monitored_train_loss ? "train_loss" : "val_loss"},
          {"stopped_early", r.stopped_early},
          {"class_weights", r.weights.w}};
}

json to_json(const AblationReport& r) {
  json arms = json::array();
  for (const auto& m : r.results) {
    arms.push_back({{"mode", to_string(m.mode)},
                    {"test", to_json(m.test)},
                    {"train", to_json(m.train)},
                    {"best_epoch", m.training.best_epoch},
                    {"epochs_run", m.training.epochs.size()}});
  }
  return {{"n_train", r.n_train}, {"n_val", r.n_val}, {"n_test", r.n_test}, {"arms", arms}};
}

json to_json(const GradCheckReport& r) {
  return {{"seed", r.seed},
          {"mode", to_string(r.mode)},
          {"head_activation", to_string(r.head)},
          {"dropout_rate", r.dropout_rate},
          {"n_params", r.n_params},
          {"n_nonzero", r.n_nonzero},
          {"max_rel_error", r.max_rel_error},
          {"worst_index", r.worst_index},
          {"worst_tensor", r.worst_tensor},
          {"worst_analytic", r.worst_analytic},
          {"worst_numeric", r.worst_numeric},
          {"passed", r.passed}};
}

std::string format_table(const EvalReport& r) {
  std::ostringstream os;
  os << "class  precision  recall      f1\n";
  for (int c = 0; c < 2; ++c) {
    const auto& m = r.per_class[static_cast<std::size_t>(c)];
    os << pad(std::to_string(c), 5) << pad(fixed(m.precision), 11) << pad(fixed(m.recall), 8)
       << pad(fixed(m.f1), 8) << '\n';
  }
  os << "macro-F1 " << fixed(r.macro_f1) << "   tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn
     << " tn=" << r.tn << '\n';
  return os.str();
}

std::string format_table(const AblationReport& r) {
  std::ostringstream os;
  os << "mode           F1(pos)  macro-F1  recall(pos)  train-recall(pos)\n";
  for (const auto& m : r.results) {
    std::string name(to_string(m.mode));
    name.resize(13, ' ');
    os << name << pad(fixed(m.test.f1()), 9) << pad(fixed(m.test.macro_f1), 10)
       << pad(fixed(m.test.per_class[1].recall), 13) << pad(fixed(m.train.per_class[1].recall), 19)
       << '\n';
  }
  os << "train=" << r.n_train << " val=" << r.n_val << " test=" << r.n_test << '\n';
  return os.str();
}

}  // namespace lmfuse
