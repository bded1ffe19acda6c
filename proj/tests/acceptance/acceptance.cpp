// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lmfuse/checkpoint.hpp"
#include "lmfuse/evaluation.hpp"
#include "lmfuse/rng.hpp"
#include "lmfuse/synthgen.hpp"

using namespace lmfuse;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  constexpr std::size_t kConfigs = 24;
  const auto sweep = gradcheck_sweep(20240601, kConfigs, 1e-4);
  double worst = 0.0;
  bool all = true;
  bool mode_seen[3] = {false, false, false};
  bool head_seen[2] = {false, false};
  for (const auto& g : sweep) {
    const auto r = grad_check(g);
    worst = std::max(worst, r.max_rel_error);
    all = all && r.passed && r.n_nonzero > 0;
    mode_seen[static_cast<int>(g.mode)] = true;
    head_seen[g.head == HeadActivation::relu ? 1 : 0] = true;
  }
  const double secs = seconds_since(t0);
  const bool coverage = mode_seen[0] && mode_seen[1] && mode_seen[2] && head_seen[0] && head_seen[1];
  report("gradient correctness", all && worst < 1e-4 && coverage && secs < 60.0,
         std::to_string(kConfigs) + " configs, max relative error " + fmt(worst) +
             " (< 1e-4), " + fmt(secs, 3) + " s (< 60 s)");
}

struct Direct {
  long double p, r, f;
};

// The definitions evaluated directly in extended precision, 0 for 0/0.
Direct direct(long double tp, long double fp, long double fn) {
  const long double p = tp + fp == 0 ? 0.0L : tp / (tp + fp);
  const long double r = tp + fn == 0 ? 0.0L : tp / (tp + fn);
  const long double f = p + r == 0 ? 0.0L : 2.0L * p * r / (p + r);
  return {p, r, f};
}

void metric_oracle() {
  const auto t0 = Clock::now();
  struct Counts {
    std::size_t tp, fp, fn;
  };
  // Every way a denominator can vanish comes first.
  std::vector<Counts> cases{{0, 0, 0}, {0, 0, 7}, {0, 5, 0}, {0, 3, 4}, {6, 0, 0}, {2, 0, 9}, {8, 1, 0}};
  Rng rng(777);
  while (cases.size() < 1000) {
    auto draw = [&] {
      return rng.bernoulli(0.2) ? std::size_t{0} : static_cast<std::size_t>(rng.uniform(0, 100000));
    };
    cases.push_back({draw(), draw(), draw()});
  }
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto d = direct(c.tp, c.fp, c.fn);
    worst = std::max({worst, static_cast<double>(std::fabs(precision(c.tp, c.fp) - d.p)),
                      static_cast<double>(std::fabs(recall(c.tp, c.fn) - d.r)),
                      static_cast<double>(std::fabs(f1_score(c.tp, c.fp, c.fn) - d.f))});
  }
  const double secs = seconds_since(t0);
  report("metric oracle", worst <= 1e-12 && secs < 5.0,
         std::to_string(cases.size()) + " matrices, max |difference| " + fmt(worst) +
             " (<= 1e-12), " + fmt(secs, 3) + " s (< 5 s)");
}

// Fusion ablation and imbalance handling share the same five trained runs.
void fusion_ablation_and_imbalance() {
  const auto t0 = Clock::now();
  std::vector<double> merged, facial, meta, recall_merged;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthSpec spec;
    spec.n_samples = 213;
    spec.class_balance = 0.15;
    spec.p_face = 0.65;
    spec.p_meta = 0.65;
    spec.seed = seed;
    AblationConfig cfg;
    cfg.train.seed = seed;
    cfg.split.seed = seed;
    const auto r = ablate(to_records(generate(spec)), cfg);
    merged.push_back(r.at(Mode::merged).test.f1());
    facial.push_back(r.at(Mode::facial_only).test.f1());
    meta.push_back(r.at(Mode::meta_only).test.f1());
    recall_merged.push_back(r.at(Mode::merged).train.per_class[1].recall);
    std::cout << "  seed " << seed << ": F1 merged " << fmt(merged.back()) << ", facial_only "
              << fmt(facial.back()) << ", meta_only " << fmt(meta.back())
              << "; merged train recall (class 1) " << fmt(recall_merged.back()) << std::endl;
  }
  const double secs = seconds_since(t0);
  const double m = median(merged), f = median(facial), t = median(meta);
  report("fusion ablation", m >= f + 0.03 && m >= t + 0.03 && secs < 600.0,
         "median F1 merged " + fmt(m) + ", facial_only " + fmt(f) + ", meta_only " + fmt(t) +
             " (merged must lead both by >= 0.03), " + fmt(secs, 3) + " s (< 600 s)");
  const double min_recall = *std::min_element(recall_merged.begin(), recall_merged.end());
  report("imbalance handling", min_recall > 0.0,
         "minimum merged train recall of class 1 over 5 seeds " + fmt(min_recall) + " (> 0)");
}

bool same_trace(const TrainReport& a, const TrainReport& b) {
  if (a.epochs.size() != b.epochs.size() || a.best_epoch != b.best_epoch) return false;
  for (std::size_t k = 0; k < a.epochs.size(); ++k) {
    const auto& x = a.epochs[k];
    const auto& y = b.epochs[k];
    if (x.epoch != y.epoch || !same_bits(x.train_loss, y.train_loss) ||
        !same_bits(x.val_loss, y.val_loss) || !same_bits(x.val_f1, y.val_f1)) {
      return false;
    }
  }
  return true;
}

// Determinism and checkpoint round-trip use the same training setup as `train`.
void determinism_and_checkpoint() {
  SynthSpec spec;
  spec.seed = 1;
  const auto records = to_records(generate(spec));
  SplitSettings split;
  split.seed = 1;
  TrainConfig tc;
  tc.seed = 1;

  const auto a_data = prepare(records, split);
  const auto a = fit(a_data.train, a_data.val, tc);
  const auto b_data = prepare(records, split);
  const auto b = fit(b_data.train, b_data.val, tc);
  const std::string a_doc = checkpoint_to_json(Checkpoint{a.model, a_data.prep, split}).dump();
  const std::string b_doc = checkpoint_to_json(Checkpoint{b.model, b_data.prep, split}).dump();
  const bool traces = same_trace(a.report, b.report);
  const bool params = same_bits(a.model.params(), b.model.params());
  report("determinism", traces && params && a_doc == b_doc,
         std::to_string(a.report.epochs.size()) + " epochs; loss traces " +
             (traces ? "identical" : "differ") + ", parameters " + (params ? "identical" : "differ") +
             ", checkpoint documents " + (a_doc == b_doc ? "identical" : "differ"));

  const auto dir = fs::temp_directory_path() / "lmfuse_acceptance";
  fs::create_directories(dir);
  const auto path = dir / "checkpoint.json";
  const EvalReport before = evaluate(a.model, a_data.test);
  save_checkpoint(path, Checkpoint{a.model, a_data.prep, split});
  const Checkpoint loaded = load_checkpoint(path);
  const auto test = build_samples(records, outer_split(records, *loaded.split).test, *loaded.preprocessing);
  const EvalReport after = evaluate(loaded.model, test);
  fs::remove_all(dir);
  report("checkpoint round-trip", before == after && same_bits(a.model.params(), loaded.model.params()),
         "test F1 before save " + fmt(before.f1(), 17) + ", after load " + fmt(after.f1(), 17) +
             ", confusion counts " + (before == after ? "equal" : "differ"));
}

void labeling_rule() {
  const bool examples = derive_label({"a", 68, 72, 70, 71}) == Label::one &&
                        derive_label({"b", 70, 70, 70, 70}) == Label::one &&
                        derive_label({"c", 72, 70, 68, 70}) == Label::zero;
  Rng rng(31337);
  std::size_t mismatches = 0;
  constexpr int kTrials = 10000;
  for (int t = 0; t < kTrials; ++t) {
    const ScoreRecord r{"x", rng.uniform(55, 90), rng.uniform(60, 85), rng.uniform(55, 90),
                        rng.uniform(60, 85)};
    const double k = std::exp(rng.uniform(-6.0, 6.0));
    const ScoreRecord s{"x", r.strokes_day * k, r.field_avg_day * k, r.strokes_next * k,
                        r.field_avg_next * k};
    if (derive_label(r) != derive_label(s)) ++mismatches;
  }
  report("labeling rule", examples && mismatches == 0,
         std::string("worked examples ") + (examples ? "reproduced" : "wrong") + ", " +
             std::to_string(mismatches) + " of " + std::to_string(kTrials) + " rescaling trials changed the label");
}

LandmarkSeries random_series(Rng& rng, bool dyadic) {
  LandmarkSeries s;
  s.video_id = "v";
  const auto n = static_cast<std::size_t>(rng.uniform(2, kMaxFrames + 1));
  long idx = 0;
  const bool flat_channel = rng.bernoulli(0.1);
  for (std::size_t k = 0; k < n; ++k) {
    Frame f;
    f.frame_index = idx;
    f.timestamp = 0.1 * static_cast<double>(idx);
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (flat_channel && c == 0) {
        f.x[c] = 100.0;
      } else if (dyadic) {
        f.x[c] = std::floor(rng.uniform(0, 640 * 64)) / 64.0;
      } else {
        f.x[c] = rng.uniform(0, 640);
      }
    }
    s.frames.push_back(f);
    idx += rng.bernoulli(0.05) ? 2 : 1;
  }
  return s;
}

// Worst violation of |shifted - base| <= bound, in units of the bound.
double excess(const DeltaSeries& base, const DeltaSeries& shifted, const std::array<double, kChannels>& bound) {
  double worst = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t t = 0; t < base.length(); ++t) {
      const double d = std::fabs(base.channels[c][t] - shifted.channels[c][t]);
      if (bound[c] == 0.0) {
        if (d != 0.0) worst = std::numeric_limits<double>::infinity();
      } else {
        worst = std::max(worst, d / bound[c]);
      }
    }
  }
  return worst;
}

void feature_invariants() {
  Rng rng(4242);
  constexpr int kSeries = 10000;
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  std::size_t exact_failures = 0, bound_failures = 0, shift_failures = 0;
  double worst_rounding = 0.0;
  for (int t = 0; t < kSeries; ++t) {
    // Half the series sit on a 1/64 px grid, where shifting is exact in floating point.
    const bool dyadic = t % 2 == 0;
    const auto series = random_series(rng, dyadic);
    auto shifted = series;
    std::array<double, kChannels> shift{};
    for (double& c : shift) c = dyadic ? std::floor(rng.uniform(-64 * 64, 64 * 64)) / 64.0 : rng.uniform(-300, 300);
    for (auto& f : shifted.frames) {
      for (std::size_t c = 0; c < kChannels; ++c) f.x[c] += shift[c];
    }
    const auto raw = compute_deltas(series);
    const auto raw_shifted = compute_deltas(shifted);
    if (dyadic) {
      for (std::size_t c = 0; c < kChannels; ++c) {
        if (!std::equal(raw.channels[c].begin(), raw.channels[c].end(), raw_shifted.channels[c].begin())) {
          ++exact_failures;
        }
      }
    } else {
      // Two roundings per coordinate: the shift, then the difference.
      std::array<double, kChannels> bound{};
      for (std::size_t c = 0; c < kChannels; ++c) bound[c] = 4.0 * kEps * (640.0 + std::fabs(shift[c]));
      const double e = excess(raw, raw_shifted, bound);
      worst_rounding = std::max(worst_rounding, e);
      if (e > 1.0) ++shift_failures;
    }

    const auto norm = normalize_deltas(raw);
    for (std::size_t c = 0; c < kChannels; ++c) {
      double peak = 0.0;
      for (double v : norm.channels[c]) {
        if (!(v >= -1.0 && v <= 1.0)) ++bound_failures;
        peak = std::max(peak, std::fabs(v));
      }
      const bool all_zero = std::all_of(raw.channels[c].begin(), raw.channels[c].end(),
                                        [](double v) { return v == 0.0; });
      if (all_zero ? peak != 0.0 : peak != 1.0) ++bound_failures;
    }
  }

  // Padding with mask 0 after the true end reproduces the unpadded state bit for bit.
  std::size_t mask_failures = 0;
  constexpr int kMaskTrials = 2000;
  for (int t = 0; t < kMaskTrials; ++t) {
    const auto model = init_model(mix_seed(99, static_cast<std::uint64_t>(t)), 5, Mode::merged, 0.2);
    const auto p = branch_params(model, static_cast<std::size_t>(t) % kChannels);
    const auto len = static_cast<std::size_t>(rng.uniform(1, kMaxFrames));
    const auto pad = static_cast<std::size_t>(rng.uniform(0, kMaxFrames));
    std::vector<double> seq(len);
    for (double& v : seq) v = rng.uniform(-1, 1);
    std::vector<double> padded = seq;
    std::vector<std::uint8_t> mask(len, 1);
    for (std::size_t k = 0; k < pad; ++k) {
      padded.push_back(rng.uniform(-1, 1));
      mask.push_back(0);
    }
    if (!same_bits(branch_forward(p, seq), branch_forward_masked(p, padded, mask))) ++mask_failures;
  }

  const bool ok = exact_failures == 0 && shift_failures == 0 && bound_failures == 0 && mask_failures == 0;
  report("feature invariants", ok,
         std::to_string(kSeries) + " series: " + std::to_string(exact_failures) +
             " exact-shift mismatches on the 1/64 px grid, worst real-valued shift deviation " +
             fmt(worst_rounding, 3) + " of the rounding bound, " + std::to_string(bound_failures) +
             " bound violations; " + std::to_string(mask_failures) + " of " + std::to_string(kMaskTrials) +
             " masked runs differ");
}

}  // namespace

int main() {
  try {
    gradient_correctness();
    metric_oracle();
    labeling_rule();
    feature_invariants();
    determinism_and_checkpoint();
    fusion_ablation_and_imbalance();
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
