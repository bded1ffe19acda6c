#include "lmfuse/model.hpp"

#include <algorithm>
#include <cmath>

#include "lmfuse/error.hpp"
#include "lmfuse/rng.hpp"

namespace lmfuse {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out = bias + w_input * x + w_hidden * h for one step of the packed gates.
inline void gate_preactivations(const BranchParams& p, double x, const double* h, double* out) {
  const std::size_t rows = 4 * p.hidden;
  const std::size_t H = p.hidden;
  const double* wh = p.w_hidden.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = p.bias[r] + p.w_input[r] * x;
    const double* row = wh + r * H;
    for (std::size_t k = 0; k < H; ++k) acc += row[k] * h[k];
    out[r] = acc;
  }
}

// Applies the gate nonlinearities in place and advances (c, h).
inline void cell_update(std::size_t H, double* gates, double* c, double* c_tanh, double* h) {
  for (std::size_t j = 0; j < H; ++j) {
    const double i = sigmoid(gates[j]);
    const double f = sigmoid(gates[H + j]);
    const double o = sigmoid(gates[2 * H + j]);
    const double g = std::tanh(gates[3 * H + j]);
    gates[j] = i;
    gates[H + j] = f;
    gates[2 * H + j] = o;
    gates[3 * H + j] = g;
    c[j] = f * c[j] + i * g;
    c_tanh[j] = std::tanh(c[j]);
    h[j] = o * c_tanh[j];
  }
}

std::array<double, 2> softmax(std::array<double, 2> a) {
  const double m = std::max(a[0], a[1]);
  const double e0 = std::exp(a[0] - m);
  const double e1 = std::exp(a[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

void check_seq(std::span<const double> seq) {
  if (seq.empty()) throw ValidationError("recurrent branch needs a non-empty sequence");
}

void check_sample(const ModelConfig& cfg, const FeatureSample& sample) {
  if (cfg.has_branches() && sample.deltas.length() == 0) {
    throw ValidationError("sample " + sample.video_id + " has no delta sequence");
  }
  if (cfg.has_meta() && sample.meta.size() != cfg.meta_dim) {
    throw ValidationError("sample " + sample.video_id + " meta vector has length " +
                          std::to_string(sample.meta.size()) + ", model expects " +
                          std::to_string(cfg.meta_dim));
  }
}

// Inverted dropout multipliers: 0 with probability p, else 1/(1-p).
void draw_keep(Rng& rng, double p, std::vector<double>& keep) {
  const double scale = 1.0 / (1.0 - p);
  for (double& k : keep) k = rng.uniform() < p ? 0.0 : scale;
}

}  // namespace

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::merged: return "merged";
    case Mode::facial_only: return "facial_only";
    case Mode::meta_only: return "meta_only";
  }
  return "?";
}

std::string_view to_string(HeadActivation h) noexcept {
  return h == HeadActivation::relu ? "relu" : "identity";
}

Mode parse_mode(std::string_view s) {
  if (s == "merged") return Mode::merged;
  if (s == "facial_only" || s == "facial") return Mode::facial_only;
  if (s == "meta_only" || s == "meta") return Mode::meta_only;
  throw ValidationError("unknown mode '" + std::string(s) + "'");
}

HeadActivation parse_head_activation(std::string_view s) {
  if (s == "relu") return HeadActivation::relu;
  if (s == "identity") return HeadActivation::identity;
  throw ValidationError("unknown head activation '" + std::string(s) + "'");
}

void ModelConfig::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must be in [0, 1)");
  }
  if (has_meta() && meta_dim < 1) throw ValidationError("meta branch needs in_dim >= 1");
  if (hidden < 1 || meta_hidden1 < 1 || meta_hidden2 < 1) {
    throw ValidationError("layer sizes must be positive");
  }
}

ParamLayout ParamLayout::for_config(const ModelConfig& cfg) {
  ParamLayout l;
  std::size_t off = 0;
  auto take = [&off](std::size_t rows, std::size_t cols) {
    Block b{off, rows, cols};
    off += rows * cols;
    return b;
  };
  const std::size_t H = cfg.hidden;
  if (cfg.has_branches()) {
    for (std::size_t b = 0; b < kChannels; ++b) {
      BranchLayout bl;
      bl.w_input = take(4 * H, 1);
      bl.w_hidden = take(4 * H, H);
      bl.bias = take(4 * H, 1);
      l.branches.push_back(bl);
    }
  }
  if (cfg.has_meta()) {
    l.meta_w1 = take(cfg.meta_hidden1, cfg.meta_dim);
    l.meta_b1 = take(cfg.meta_hidden1, 1);
    l.meta_w2 = take(cfg.meta_hidden2, cfg.meta_hidden1);
    l.meta_b2 = take(cfg.meta_hidden2, 1);
  }
  l.head_w = take(2, cfg.merged_dim());
  l.head_b = take(2, 1);
  l.total = off;
  return l;
}

std::string ParamLayout::tensor_name(std::size_t i) const {
  auto in = [i](const Block& b) { return i >= b.offset && i < b.offset + b.size(); };
  for (std::size_t b = 0; b < branches.size(); ++b) {
    const auto& bl = branches[b];
    const std::string p = "branch" + std::to_string(b) + ".";
    if (in(bl.w_input)) return p + "w_input";
    if (in(bl.w_hidden)) return p + "w_hidden";
    if (in(bl.bias)) return p + "bias";
  }
  if (in(meta_w1)) return "meta.w1";
  if (in(meta_b1)) return "meta.b1";
  if (in(meta_w2)) return "meta.w2";
  if (in(meta_b2)) return "meta.b2";
  if (in(head_w)) return "head.w";
  if (in(head_b)) return "head.b";
  return "?";
}

FusionModel::FusionModel(ModelConfig config, std::vector<double> params)
    : config_(config), layout_(ParamLayout::for_config(config)), params_(std::move(params)) {
  config_.validate();
  if (params_.size() != layout_.total) {
    throw ValidationError("parameter count " + std::to_string(params_.size()) +
                          " does not match layout size " + std::to_string(layout_.total));
  }
  for (double v : params_) {
    if (!std::isfinite(v)) throw NumericError("non-finite model parameter");
  }
}

FusionModel init_model(const ModelConfig& config) {
  config.validate();
  const ParamLayout layout = ParamLayout::for_config(config);
  std::vector<double> params(layout.total);
  Rng rng(config.seed);
  auto fill = [&](const Block& b, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t k = 0; k < b.size(); ++k) params[b.offset + k] = rng.uniform(-bound, bound);
  };
  for (const auto& bl : layout.branches) {
    fill(bl.w_input, config.hidden);
    fill(bl.w_hidden, config.hidden);
    fill(bl.bias, config.hidden);
  }
  if (config.has_meta()) {
    fill(layout.meta_w1, config.meta_dim);
    fill(layout.meta_b1, config.meta_dim);
    fill(layout.meta_w2, config.meta_hidden1);
    fill(layout.meta_b2, config.meta_hidden1);
  }
  fill(layout.head_w, config.merged_dim());
  fill(layout.head_b, config.merged_dim());
  return FusionModel(config, std::move(params));
}

FusionModel init_model(std::uint64_t seed, std::size_t in_dim, Mode mode, double dropout_rate,
                       HeadActivation head) {
  ModelConfig cfg;
  cfg.seed = seed;
  cfg.meta_dim = in_dim;
  cfg.mode = mode;
  cfg.dropout_rate = dropout_rate;
  cfg.head = head;
  return init_model(cfg);
}

BranchParams branch_params(const FusionModel& model, std::size_t branch) {
  const auto& bl = model.layout().branches.at(branch);
  return BranchParams{model.block(bl.w_input), model.block(bl.w_hidden), model.block(bl.bias),
                      model.config().hidden};
}

std::vector<double> branch_forward(const BranchParams& p, std::span<const double> seq) {
  check_seq(seq);
  const std::size_t H = p.hidden;
  std::vector<double> h(H, 0.0), c(H, 0.0), ct(H), gates(4 * H);
  for (double x : seq) {
    gate_preactivations(p, x, h.data(), gates.data());
    cell_update(H, gates.data(), c.data(), ct.data(), h.data());
  }
  return h;
}

std::vector<double> branch_forward_masked(const BranchParams& p, std::span<const double> seq,
                                          std::span<const std::uint8_t> mask) {
  if (mask.size() != seq.size()) throw ValidationError("mask length must match sequence length");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw ValidationError("recurrent branch needs at least one unmasked step");
  }
  const std::size_t H = p.hidden;
  std::vector<double> h(H, 0.0), c(H, 0.0), ct(H), gates(4 * H);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (!mask[t]) continue;
    gate_preactivations(p, seq[t], h.data(), gates.data());
    cell_update(H, gates.data(), c.data(), ct.data(), h.data());
  }
  return h;
}

std::vector<double> meta_forward(const FusionModel& model, std::span<const double> x) {
  const auto& cfg = model.config();
  if (!cfg.has_meta()) throw ValidationError("model has no meta branch");
  if (x.size() != cfg.meta_dim) {
    throw ValidationError("meta vector length " + std::to_string(x.size()) + " != " +
                          std::to_string(cfg.meta_dim));
  }
  const auto& L = model.layout();
  auto w1 = model.block(L.meta_w1);
  auto b1 = model.block(L.meta_b1);
  auto w2 = model.block(L.meta_w2);
  auto b2 = model.block(L.meta_b2);
  std::vector<double> h1(cfg.meta_hidden1), h2(cfg.meta_hidden2);
  for (std::size_t r = 0; r < h1.size(); ++r) {
    double acc = b1[r];
    for (std::size_t k = 0; k < x.size(); ++k) acc += w1[r * x.size() + k] * x[k];
    h1[r] = std::max(acc, 0.0);
  }
  for (std::size_t r = 0; r < h2.size(); ++r) {
    double acc = b2[r];
    for (std::size_t k = 0; k < h1.size(); ++k) acc += w2[r * h1.size() + k] * h1[k];
    h2[r] = std::max(acc, 0.0);
  }
  return h2;
}

ForwardResult fusion_forward(const FusionModel& model, const FeatureSample& sample, bool train_mode,
                             std::uint64_t dropout_seed) {
  const auto& cfg = model.config();
  const auto& L = model.layout();
  check_sample(cfg, sample);
  const bool drop = train_mode && cfg.dropout_rate > 0.0;
  Rng rng(dropout_seed);

  ForwardResult res;
  ForwardCache& fc = res.cache;
  fc.merged.reserve(cfg.merged_dim());
  const std::size_t H = cfg.hidden;

  if (cfg.has_branches()) {
    fc.branches.resize(kChannels);
    for (std::size_t b = 0; b < kChannels; ++b) {
      const BranchParams p = branch_params(model, b);
      const auto& seq = sample.deltas.channels[b];
      check_seq(seq);
      BranchCache& bc = fc.branches[b];
      const std::size_t T = seq.size();
      bc.steps = T;
      bc.gates.resize(T * 4 * H);
      bc.cell.resize(T * H);
      bc.cell_tanh.resize(T * H);
      bc.hidden.resize(T * H);
      std::vector<double> c(H, 0.0), h(H, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        double* g = &bc.gates[t * 4 * H];
        gate_preactivations(p, seq[t], h.data(), g);
        cell_update(H, g, c.data(), &bc.cell_tanh[t * H], h.data());
        std::copy(c.begin(), c.end(), &bc.cell[t * H]);
        std::copy(h.begin(), h.end(), &bc.hidden[t * H]);
      }
      bc.keep.assign(H, 1.0);
      if (drop) draw_keep(rng, cfg.dropout_rate, bc.keep);
      for (std::size_t j = 0; j < H; ++j) fc.merged.push_back(h[j] * bc.keep[j]);
    }
  }

  if (cfg.has_meta()) {
    const auto& x = sample.meta;
    auto w1 = model.block(L.meta_w1);
    auto b1 = model.block(L.meta_b1);
    auto w2 = model.block(L.meta_w2);
    auto b2 = model.block(L.meta_b2);
    const std::size_t n1 = cfg.meta_hidden1, n2 = cfg.meta_hidden2, d = cfg.meta_dim;
    fc.z1.resize(n1);
    fc.h1.resize(n1);
    fc.keep1.assign(n1, 1.0);
    fc.z2.resize(n2);
    fc.h2.resize(n2);
    fc.keep2.assign(n2, 1.0);
    if (drop) {
      draw_keep(rng, cfg.dropout_rate, fc.keep1);
      draw_keep(rng, cfg.dropout_rate, fc.keep2);
    }
    for (std::size_t r = 0; r < n1; ++r) {
      double acc = b1[r];
      for (std::size_t k = 0; k < d; ++k) acc += w1[r * d + k] * x[k];
      fc.z1[r] = acc;
      fc.h1[r] = std::max(acc, 0.0) * fc.keep1[r];
    }
    for (std::size_t r = 0; r < n2; ++r) {
      double acc = b2[r];
      for (std::size_t k = 0; k < n1; ++k) acc += w2[r * n1 + k] * fc.h1[k];
      fc.z2[r] = acc;
      fc.h2[r] = std::max(acc, 0.0) * fc.keep2[r];
    }
    fc.merged.insert(fc.merged.end(), fc.h2.begin(), fc.h2.end());
  }

  auto hw = model.block(L.head_w);
  auto hb = model.block(L.head_b);
  const std::size_t m = fc.merged.size();
  std::array<double, 2> act{};
  for (std::size_t k = 0; k < 2; ++k) {
    double acc = hb[k];
    for (std::size_t j = 0; j < m; ++j) acc += hw[k * m + j] * fc.merged[j];
    fc.head_pre[k] = acc;
    act[k] = cfg.head == HeadActivation::relu ? std::max(acc, 0.0) : acc;
  }
  fc.probabilities = softmax(act);
  res.probabilities = fc.probabilities;
  return res;
}

std::array<double, 2> predict(const FusionModel& model, const FeatureSample& sample) {
  return fusion_forward(model, sample, false, 0).probabilities;
}

void fusion_backward(const FusionModel& model, const FeatureSample& sample, Label label,
                     double class_weight, const ForwardCache& fc, std::span<double> grad) {
  const auto& cfg = model.config();
  const auto& L = model.layout();
  if (grad.size() != L.total) throw ValidationError("gradient buffer has wrong size");
  if (class_weight == 0.0) return;

  // d loss / d activation through the softmax, exact including the floor.
  const std::size_t y = index(label);
  const auto& p = fc.probabilities;
  const double dp = -class_weight / (p[y] + kProbabilityFloor);
  std::array<double, 2> dz{};
  for (std::size_t k = 0; k < 2; ++k) {
    const double da = p[k] * ((k == y ? dp : 0.0) - p[y] * dp);
    dz[k] = cfg.head == HeadActivation::relu && !(fc.head_pre[k] > 0.0) ? 0.0 : da;
  }

  const std::size_t m = fc.merged.size();
  auto hw = model.block(L.head_w);
  std::vector<double> dmerged(m, 0.0);
  for (std::size_t k = 0; k < 2; ++k) {
    double* gw = &grad[L.head_w.offset + k * m];
    for (std::size_t j = 0; j < m; ++j) {
      gw[j] += dz[k] * fc.merged[j];
      dmerged[j] += hw[k * m + j] * dz[k];
    }
    grad[L.head_b.offset + k] += dz[k];
  }

  const std::size_t H = cfg.hidden;
  std::size_t cursor = 0;
  if (cfg.has_branches()) {
    std::vector<double> dh(H), dc(H), dh_prev(H), da(4 * H);
    for (std::size_t b = 0; b < kChannels; ++b) {
      const BranchCache& bc = fc.branches[b];
      const auto& bl = L.branches[b];
      auto wh = model.block(bl.w_hidden);
      const auto& seq = sample.deltas.channels[b];
      double* g_in = &grad[bl.w_input.offset];
      double* g_hid = &grad[bl.w_hidden.offset];
      double* g_bias = &grad[bl.bias.offset];
      for (std::size_t j = 0; j < H; ++j) dh[j] = dmerged[cursor + j] * bc.keep[j];
      std::fill(dc.begin(), dc.end(), 0.0);
      cursor += H;
      for (std::size_t t = bc.steps; t-- > 0;) {
        const double* g = &bc.gates[t * 4 * H];
        const double* ct = &bc.cell_tanh[t * H];
        const double* c_prev = t > 0 ? &bc.cell[(t - 1) * H] : nullptr;
        const double* h_prev = t > 0 ? &bc.hidden[(t - 1) * H] : nullptr;
        for (std::size_t j = 0; j < H; ++j) {
          const double i = g[j], f = g[H + j], o = g[2 * H + j], cand = g[3 * H + j];
          const double d_o = dh[j] * ct[j];
          dc[j] += dh[j] * o * (1.0 - ct[j] * ct[j]);
          const double d_i = dc[j] * cand;
          const double d_g = dc[j] * i;
          const double d_f = c_prev ? dc[j] * c_prev[j] : 0.0;
          da[j] = d_i * i * (1.0 - i);
          da[H + j] = d_f * f * (1.0 - f);
          da[2 * H + j] = d_o * o * (1.0 - o);
          da[3 * H + j] = d_g * (1.0 - cand * cand);
          dc[j] *= f;
        }
        const double x = seq[t];
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
          g_in[r] += da[r] * x;
          g_bias[r] += da[r];
          if (h_prev) {
            double* gr = g_hid + r * H;
            const double* wr = &wh[r * H];
            for (std::size_t k = 0; k < H; ++k) {
              gr[k] += da[r] * h_prev[k];
              dh_prev[k] += wr[k] * da[r];
            }
          }
        }
        std::swap(dh, dh_prev);
      }
    }
  }

  if (cfg.has_meta()) {
    const std::size_t n1 = cfg.meta_hidden1, n2 = cfg.meta_hidden2, d = cfg.meta_dim;
    auto w2 = model.block(L.meta_w2);
    std::vector<double> dz2(n2), dh1(n1, 0.0);
    for (std::size_t r = 0; r < n2; ++r) {
      dz2[r] = fc.z2[r] > 0.0 ? dmerged[cursor + r] * fc.keep2[r] : 0.0;
    }
    for (std::size_t r = 0; r < n2; ++r) {
      if (dz2[r] == 0.0) continue;
      double* gw = &grad[L.meta_w2.offset + r * n1];
      const double* wr = &w2[r * n1];
      for (std::size_t k = 0; k < n1; ++k) {
        gw[k] += dz2[r] * fc.h1[k];
        dh1[k] += wr[k] * dz2[r];
      }
      grad[L.meta_b2.offset + r] += dz2[r];
    }
    const auto& x = sample.meta;
    for (std::size_t r = 0; r < n1; ++r) {
      const double dz1 = fc.z1[r] > 0.0 ? dh1[r] * fc.keep1[r] : 0.0;
      if (dz1 == 0.0) continue;
      double* gw = &grad[L.meta_w1.offset + r * d];
      for (std::size_t k = 0; k < d; ++k) gw[k] += dz1 * x[k];
      grad[L.meta_b1.offset + r] += dz1;
    }
  }
}

std::vector<double> fusion_backward(const FusionModel& model, const FeatureSample& sample,
                                    Label label, double class_weight, const ForwardCache& cache) {
  std::vector<double> grad(model.params().size(), 0.0);
  fusion_backward(model, sample, label, class_weight, cache, grad);
  return grad;
}

}  // namespace lmfuse
