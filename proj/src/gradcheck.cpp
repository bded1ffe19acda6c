// Finite-difference verification of fusion_backward.
//
// The numeric side uses its own straightforward forward pass evaluated in
// long double, sharing only the dropout masks with the production forward.
// Double-precision loss evaluations quantize (L+ - L-) / 2eps at roughly
// ulp(L) / 2eps ~ 5e-12, too coarse to resolve parameters whose gradient is
// ~1e-9 against the 1e-8 relative-error floor.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lmfuse/rng.hpp"
#include "lmfuse/training.hpp"

namespace lmfuse {

namespace {

using Real = long double;

class ReferenceForward {
 public:
  ReferenceForward(const FusionModel& model, const FeatureSample& sample, const ForwardCache& masks,
                   double class_weight)
      : cfg_(model.config()),
        layout_(model.layout()),
        params_(model.params().begin(), model.params().end()),
        sample_(sample),
        masks_(masks),
        weight_(class_weight) {
    if (cfg_.has_branches()) {
      branch_out_.resize(kChannels);
      for (std::size_t b = 0; b < kChannels; ++b) branch_out_[b] = branch(b);
    }
    if (cfg_.has_meta()) meta_out_ = meta();
  }

  std::vector<Real>& params() { return params_; }

  // Loss after params()[i] was changed; only the affected sub-network is recomputed.
  Real loss_with_changed(std::size_t i) const {
    std::vector<Real> merged;
    for (std::size_t b = 0; b < branch_out_.size(); ++b) {
      const auto& bl = layout_.branches[b];
      const bool touched = i >= bl.w_input.offset && i < bl.bias.offset + bl.bias.size();
      const std::vector<Real> out = touched ? branch(b) : branch_out_[b];
      merged.insert(merged.end(), out.begin(), out.end());
    }
    if (cfg_.has_meta()) {
      const bool touched = i >= layout_.meta_w1.offset && i < layout_.meta_b2.offset + layout_.meta_b2.size();
      const std::vector<Real> out = touched ? meta() : meta_out_;
      merged.insert(merged.end(), out.begin(), out.end());
    }
    return head_loss(merged);
  }

 private:
  static Real sigmoid(Real x) { return 1.0L / (1.0L + std::exp(-x)); }

  std::vector<Real> branch(std::size_t b) const {
    const auto& bl = layout_.branches[b];
    const std::size_t H = cfg_.hidden;
    const Real* wi = &params_[bl.w_input.offset];
    const Real* wh = &params_[bl.w_hidden.offset];
    const Real* bias = &params_[bl.bias.offset];
    std::vector<Real> h(H, 0.0L), c(H, 0.0L), a(4 * H);
    for (double xd : sample_.deltas.channels[b]) {
      const Real x = xd;
      for (std::size_t r = 0; r < 4 * H; ++r) {
        Real acc = bias[r] + wi[r] * x;
        for (std::size_t k = 0; k < H; ++k) acc += wh[r * H + k] * h[k];
        a[r] = acc;
      }
      for (std::size_t j = 0; j < H; ++j) {
        const Real in = sigmoid(a[j]);
        const Real forget = sigmoid(a[H + j]);
        const Real out = sigmoid(a[2 * H + j]);
        const Real cand = std::tanh(a[3 * H + j]);
        c[j] = forget * c[j] + in * cand;
        h[j] = out * std::tanh(c[j]);
      }
    }
    const auto& keep = masks_.branches[b].keep;
    for (std::size_t j = 0; j < H; ++j) h[j] *= keep[j];
    return h;
  }

  std::vector<Real> meta() const {
    const std::size_t n1 = cfg_.meta_hidden1, n2 = cfg_.meta_hidden2, d = cfg_.meta_dim;
    std::vector<Real> h1(n1), h2(n2);
    for (std::size_t r = 0; r < n1; ++r) {
      Real acc = params_[layout_.meta_b1.offset + r];
      for (std::size_t k = 0; k < d; ++k) {
        acc += params_[layout_.meta_w1.offset + r * d + k] * static_cast<Real>(sample_.meta[k]);
      }
      h1[r] = std::max(acc, 0.0L) * masks_.keep1[r];
    }
    for (std::size_t r = 0; r < n2; ++r) {
      Real acc = params_[layout_.meta_b2.offset + r];
      for (std::size_t k = 0; k < n1; ++k) acc += params_[layout_.meta_w2.offset + r * n1 + k] * h1[k];
      h2[r] = std::max(acc, 0.0L) * masks_.keep2[r];
    }
    return h2;
  }

  Real head_loss(const std::vector<Real>& merged) const {
    const std::size_t m = merged.size();
    Real act[2];
    for (std::size_t k = 0; k < 2; ++k) {
      Real acc = params_[layout_.head_b.offset + k];
      for (std::size_t j = 0; j < m; ++j) acc += params_[layout_.head_w.offset + k * m + j] * merged[j];
      act[k] = cfg_.head == HeadActivation::relu ? std::max(acc, 0.0L) : acc;
    }
    const Real top = std::max(act[0], act[1]);
    const Real e0 = std::exp(act[0] - top), e1 = std::exp(act[1] - top);
    const Real p = (index(sample_.label) == 0 ? e0 : e1) / (e0 + e1);
    return -static_cast<Real>(weight_) * std::log(p + static_cast<Real>(kProbabilityFloor));
  }

  const ModelConfig& cfg_;
  const ParamLayout& layout_;
  std::vector<Real> params_;
  const FeatureSample& sample_;
  const ForwardCache& masks_;
  double weight_;
  std::vector<std::vector<Real>> branch_out_;
  std::vector<Real> meta_out_;
};

}  // namespace

GradCheckReport grad_check(const GradCheckOptions& opt) {
  ModelConfig mc;
  mc.mode = opt.mode;
  mc.meta_dim = opt.meta_dim;
  mc.dropout_rate = opt.dropout_rate;
  mc.head = opt.head;
  mc.seed = opt.seed;
  FusionModel model = init_model(mc);

  Rng rng(mix_seed(opt.seed, 99));
  FeatureSample sample;
  sample.video_id = "gradcheck";
  for (auto& ch : sample.deltas.channels) {
    ch.resize(opt.seq_len);
    for (double& v : ch) v = rng.uniform(-1.0, 1.0);
  }
  sample.deltas.gap_flags.assign(opt.seq_len, false);
  sample.meta.resize(opt.meta_dim);
  for (double& v : sample.meta) v = rng.normal();
  sample.label = rng.bernoulli(0.5) ? Label::one : Label::zero;
  const double weight = rng.uniform(0.5, 3.0);

  const bool train_mode = opt.dropout_rate > 0.0;
  const std::uint64_t dropout_seed = mix_seed(opt.seed, 7);
  auto fwd = fusion_forward(model, sample, train_mode, dropout_seed);
  // A rectified head with both units off has an all-zero gradient; redraw the
  // head bias so at least one unit is active.
  const Block& hb = model.layout().head_b;
  for (int tries = 0; opt.head == HeadActivation::relu && tries < 32 &&
                      !(fwd.cache.head_pre[0] > 0.0 || fwd.cache.head_pre[1] > 0.0);
       ++tries) {
    for (std::size_t k = 0; k < 2; ++k) model.params()[hb.offset + k] = rng.uniform(-0.2, 0.6);
    fwd = fusion_forward(model, sample, train_mode, dropout_seed);
  }
  std::vector<double> analytic = fusion_backward(model, sample, sample.label, weight, fwd.cache);
  if (opt.corrupt) opt.corrupt(analytic);

  ReferenceForward ref(model, sample, fwd.cache, weight);
  auto& p = ref.params();
  const Real eps = opt.epsilon;

  GradCheckReport rep;
  rep.seed = opt.seed;
  rep.mode = opt.mode;
  rep.head = opt.head;
  rep.dropout_rate = opt.dropout_rate;
  rep.n_params = p.size();
  rep.n_nonzero = static_cast<std::size_t>(
      std::count_if(analytic.begin(), analytic.end(), [](double g) { return g != 0.0; }));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Real saved = p[i];
    p[i] = saved + eps;
    const Real plus = ref.loss_with_changed(i);
    p[i] = saved - eps;
    const Real minus = ref.loss_with_changed(i);
    p[i] = saved;
    const double numeric = static_cast<double>((plus - minus) / (2.0L * eps));
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    double rel = std::abs(analytic[i] - numeric) / denom;
    if (std::isnan(rel)) rel = std::numeric_limits<double>::infinity();
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
      rep.worst_analytic = analytic[i];
      rep.worst_numeric = numeric;
    }
  }
  rep.worst_tensor = model.layout().tensor_name(rep.worst_index);
  rep.passed = rep.max_rel_error < opt.tolerance;
  return rep;
}

std::vector<GradCheckOptions> gradcheck_sweep(std::uint64_t seed, std::size_t count, double tolerance) {
  constexpr std::array<HeadActivation, 2> heads{HeadActivation::identity, HeadActivation::relu};
  std::vector<GradCheckOptions> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    GradCheckOptions& g = out[k];
    g.seed = mix_seed(seed, k);
    g.mode = kAllModes[k % 3];
    g.head = heads[(k / 3) % 2];
    g.dropout_rate = (k / 6) % 2 == 1 ? 0.2 : 0.0;
    g.tolerance = tolerance;
  }
  return out;
}

}  // namespace lmfuse
