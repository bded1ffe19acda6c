#include <cmath>
#include <cstring>

#include "doctest.h"
#include "lmfuse/error.hpp"
#include "lmfuse/model.hpp"
#include "lmfuse/rng.hpp"
#include "support.hpp"

using namespace lmfuse;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

FusionModel with_zero_biases(FusionModel m) {
  const auto& L = m.layout();
  auto p = m.params();
  auto zero = [&](const Block& b) { std::fill_n(p.begin() + b.offset, b.size(), 0.0); };
  for (const auto& br : L.branches) zero(br.bias);
  if (m.config().has_meta()) {
    zero(L.meta_b1);
    zero(L.meta_b2);
  }
  zero(L.head_b);
  return m;
}

}  // namespace

TEST_CASE("init_model: determinism and head width") {
  const auto a = init_model(5, 22, Mode::merged, 0.2);
  const auto b = init_model(5, 22, Mode::merged, 0.2);
  const auto c = init_model(6, 22, Mode::merged, 0.2);
  CHECK(testing::bitwise_equal({a.params().begin(), a.params().end()}, {b.params().begin(), b.params().end()}));
  CHECK(!(a == c));

  CHECK(a.config().merged_dim() == 144);
  CHECK(init_model(5, 22, Mode::facial_only, 0.2).config().merged_dim() == 80);
  CHECK(init_model(5, 22, Mode::meta_only, 0.2).config().merged_dim() == 64);
  CHECK(a.layout().head_w.cols == 144);

  CHECK_THROWS_AS(init_model(5, 22, Mode::merged, 1.0), ValidationError);
  CHECK_THROWS_AS(init_model(5, 22, Mode::merged, -0.1), ValidationError);
  CHECK_THROWS_AS(init_model(5, 0, Mode::meta_only, 0.2), ValidationError);
}

TEST_CASE("init_model: parameters lie within the fan-in bound") {
  const auto m = init_model(9, 22, Mode::merged, 0.2);
  const auto& L = m.layout();
  auto within = [&](const Block& b, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double v : m.block(b)) {
      if (std::abs(v) > bound) return false;
    }
    return true;
  };
  for (const auto& br : L.branches) {
    CHECK(within(br.w_input, 10));
    CHECK(within(br.w_hidden, 10));
    CHECK(within(br.bias, 10));
  }
  CHECK(within(L.meta_w1, 22));
  CHECK(within(L.meta_w2, 128));
  CHECK(within(L.head_w, 144));
}

TEST_CASE("meta_only has no recurrent parameters") {
  const auto m = init_model(1, 6, Mode::meta_only, 0.2);
  CHECK(m.layout().branches.empty());
  CHECK(m.params().size() == 128 * 6 + 128 + 64 * 128 + 64 + 2 * 64 + 2);
  const auto f = init_model(1, 6, Mode::facial_only, 0.2);
  CHECK(f.params().size() == 8 * (40 + 400 + 40) + 2 * 80 + 2);
}

TEST_CASE("branch_forward: zero input with zero biases stays at zero") {
  const auto m = with_zero_biases(init_model(3, 6, Mode::merged, 0.0));
  const std::vector<double> zeros(12, 0.0);
  for (std::size_t b = 0; b < kChannels; ++b) {
    const auto h = branch_forward(branch_params(m, b), zeros);
    for (double v : h) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(branch_forward(branch_params(m, 0), std::vector<double>{}), ValidationError);
}

TEST_CASE("branch_forward: one-unit cell by hand") {
  const std::vector<double> wi{0.3, -0.4, 0.5, 0.7};
  const std::vector<double> wh{0.2, 0.1, -0.3, 0.6};
  const std::vector<double> bias{0.05, 0.1, -0.05, 0.0};
  const BranchParams p{wi, wh, bias, 1};
  const double x = 1.0;

  double c = 0.0, h = 0.0;
  std::vector<double> outs;
  for (int t = 0; t < 2; ++t) {
    const double i = sigmoid(wi[0] * x + wh[0] * h + bias[0]);
    const double f = sigmoid(wi[1] * x + wh[1] * h + bias[1]);
    const double o = sigmoid(wi[2] * x + wh[2] * h + bias[2]);
    const double g = std::tanh(wi[3] * x + wh[3] * h + bias[3]);
    c = f * c + i * g;
    h = o * std::tanh(c);
    outs.push_back(h);
  }
  const auto one = branch_forward(p, std::vector<double>{x});
  const auto two = branch_forward(p, std::vector<double>{x, x});
  CHECK(one[0] == doctest::Approx(outs[0]).epsilon(1e-14));
  CHECK(two[0] == doctest::Approx(outs[1]).epsilon(1e-14));
  CHECK(one[0] != two[0]);
}

TEST_CASE("branch_forward_masked equals the unpadded result exactly") {
  const auto m = init_model(21, 6, Mode::merged, 0.2);
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto len = static_cast<std::size_t>(rng.uniform(1, 40));
    const auto pad = static_cast<std::size_t>(rng.uniform(0, 30));
    std::vector<double> seq(len);
    for (double& v : seq) v = rng.uniform(-1, 1);
    std::vector<double> padded = seq;
    std::vector<std::uint8_t> mask(len, 1);
    for (std::size_t k = 0; k < pad; ++k) {
      padded.push_back(rng.uniform(-1, 1));
      mask.push_back(0);
    }
    const auto p = branch_params(m, static_cast<std::size_t>(t) % kChannels);
    CHECK(testing::bitwise_equal(branch_forward(p, seq), branch_forward_masked(p, padded, mask)));
  }
}

TEST_CASE("meta_forward") {
  const auto m = with_zero_biases(init_model(8, 5, Mode::meta_only, 0.2));
  for (double v : meta_forward(m, std::vector<double>(5, 0.0))) CHECK(v == 0.0);

  const auto r = init_model(8, 5, Mode::meta_only, 0.2);
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(5);
    for (double& v : x) v = 3.0 * rng.normal();
    const auto out = meta_forward(r, x);
    CHECK(out.size() == 64);
    for (double v : out) CHECK(v >= 0.0);
  }
  CHECK_THROWS_AS(meta_forward(r, std::vector<double>(4, 0.0)), ValidationError);
}

TEST_CASE("meta_forward: scaling W1 and x together is not output-equivalent") {
  // A positive-homogeneous network would give 4x the output; the bias terms break that.
  auto m = init_model(12, 2, Mode::meta_only, 0.0);
  const std::vector<double> x{0.7, -1.2};
  const auto base = meta_forward(m, x);
  const auto& w1 = m.layout().meta_w1;
  for (std::size_t i = 0; i < w1.size(); ++i) m.params()[w1.offset + i] *= 2.0;
  const std::vector<double> x2{1.4, -2.4};
  const auto doubled = meta_forward(m, x2);
  bool differs = false;
  for (std::size_t i = 0; i < base.size(); ++i) differs |= std::abs(doubled[i] - 4.0 * base[i]) > 1e-9;
  CHECK(differs);
}

TEST_CASE("fusion_forward: softmax, determinism and dropout identity") {
  Rng rng(31);
  for (Mode mode : kAllModes) {
    for (HeadActivation head : {HeadActivation::identity, HeadActivation::relu}) {
      ModelConfig c;
      c.mode = mode;
      c.meta_dim = 7;
      c.head = head;
      c.seed = 77;
      c.dropout_rate = 0.3;
      const auto m = init_model(c);
      const auto s = testing::random_sample(rng, 7, 15, Label::one);
      const auto a = fusion_forward(m, s, true, 5);
      const auto b = fusion_forward(m, s, true, 5);
      CHECK(a.probabilities == b.probabilities);
      CHECK(a.probabilities[0] + a.probabilities[1] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(a.probabilities[0] > 0.0);
      CHECK(a.probabilities[1] > 0.0);
      CHECK(predict(m, s) == fusion_forward(m, s, false, 123).probabilities);

      c.dropout_rate = 0.0;
      const auto m0 = init_model(c);
      CHECK(fusion_forward(m0, s, true, 9).probabilities == fusion_forward(m0, s, false, 9).probabilities);
    }
  }
}

TEST_CASE("fusion_forward: large logits stay finite") {
  auto m = init_model(2, 3, Mode::meta_only, 0.0);
  const auto& hb = m.layout().head_b;
  m.params()[hb.offset] = 800.0;
  m.params()[hb.offset + 1] = -800.0;
  Rng rng(1);
  const auto s = testing::random_sample(rng, 3, 4, Label::zero);
  const auto p = predict(m, s);
  CHECK(std::isfinite(p[0]));
  CHECK(std::isfinite(p[1]));
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("relu head with both pre-activations negative gives (0.5, 0.5)") {
  auto m = init_model(ModelConfig{Mode::meta_only, 4, 10, 128, 64, 0.0, HeadActivation::relu, 3});
  const auto& L = m.layout();
  std::fill_n(m.params().begin() + L.head_w.offset, L.head_w.size(), 0.0);
  m.params()[L.head_b.offset] = -0.5;
  m.params()[L.head_b.offset + 1] = -2.0;
  Rng rng(3);
  const auto p = predict(m, testing::random_sample(rng, 4, 3, Label::zero));
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
}

TEST_CASE("sample shape mismatches are rejected") {
  const auto m = init_model(1, 5, Mode::merged, 0.2);
  Rng rng(1);
  auto s = testing::random_sample(rng, 4, 6, Label::zero);
  CHECK_THROWS_AS(fusion_forward(m, s, false, 0), ValidationError);
  s = testing::random_sample(rng, 5, 0, Label::zero);
  CHECK_THROWS_AS(fusion_forward(m, s, false, 0), ValidationError);
}

TEST_CASE("inverted dropout preserves the expected branch output") {
  ModelConfig c;
  c.mode = Mode::facial_only;
  c.dropout_rate = 0.3;
  c.seed = 19;
  const auto m = init_model(c);
  Rng rng(6);
  const auto s = testing::random_sample(rng, 0, 12, Label::one);
  const auto eval = fusion_forward(m, s, false, 0).cache.merged;

  const int n = 4000;
  std::vector<double> mean(eval.size(), 0.0);
  for (int k = 0; k < n; ++k) {
    const auto tr = fusion_forward(m, s, true, mix_seed(1234, static_cast<std::uint64_t>(k))).cache.merged;
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += tr[j] / n;
  }
  const double spread = std::sqrt(c.dropout_rate / (1.0 - c.dropout_rate));
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double se = std::abs(eval[j]) * spread / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean[j] - eval[j]) <= 4.5 * se + 1e-15);
  }
}

TEST_CASE("fusion_backward: weight scaling and disconnected branches") {
  Rng rng(13);
  ModelConfig c;
  c.mode = Mode::merged;
  c.meta_dim = 6;
  c.seed = 4;
  const auto m = init_model(c);
  const auto s = testing::random_sample(rng, 6, 8, Label::one);
  const auto fwd = fusion_forward(m, s, true, 77);

  for (double g : fusion_backward(m, s, s.label, 0.0, fwd.cache)) CHECK(g == 0.0);

  const auto g1 = fusion_backward(m, s, s.label, 1.0, fwd.cache);
  const auto g2 = fusion_backward(m, s, s.label, 2.0, fwd.cache);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == 2.0 * g1[i]);

  std::vector<double> acc(g1.size(), 0.0);
  fusion_backward(m, s, s.label, 1.0, fwd.cache, acc);
  fusion_backward(m, s, s.label, 1.0, fwd.cache, acc);
  // Contributions land in several partial sums, so accumulation may round differently.
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(acc[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));

  c.mode = Mode::meta_only;
  const auto mm = init_model(c);
  const auto fm = fusion_forward(mm, s, false, 0);
  CHECK(fusion_backward(mm, s, s.label, 1.0, fm.cache).size() == mm.layout().total);
}

TEST_CASE("checkpoint-facing constructor validation") {
  ModelConfig c;
  c.mode = Mode::meta_only;
  c.meta_dim = 3;
  const auto m = init_model(c);
  std::vector<double> p(m.params().begin(), m.params().end());
  p.pop_back();
  CHECK_THROWS_AS(FusionModel(c, p), ValidationError);
  p.push_back(std::nan(""));
  CHECK_THROWS_AS(FusionModel(c, p), NumericError);
}

TEST_CASE("tensor names") {
  const auto m = init_model(1, 6, Mode::merged, 0.2);
  const auto& L = m.layout();
  CHECK(L.tensor_name(L.head_b.offset).find("head") != std::string::npos);
  CHECK(L.tensor_name(L.branches[3].w_hidden.offset).find("3") != std::string::npos);
  CHECK(to_string(parse_mode("facial_only")) == "facial_only");
  CHECK_THROWS_AS(parse_mode("audio"), ValidationError);
}
