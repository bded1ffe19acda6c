#include "doctest.h"
#include "lmfuse/training.hpp"

using namespace lmfuse;

TEST_CASE("merged mode without dropout") {
  GradCheckOptions o;
  o.seed = 1;
  o.mode = Mode::merged;
  const auto r = grad_check(o);
  CHECK(r.passed);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.n_nonzero > 0);
}

TEST_CASE("meta_only and facial_only") {
  for (Mode m : {Mode::meta_only, Mode::facial_only}) {
    GradCheckOptions o;
    o.seed = 2;
    o.mode = m;
    const auto r = grad_check(o);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("relu head with dropout") {
  GradCheckOptions o;
  o.seed = 3;
  o.head = HeadActivation::relu;
  o.dropout_rate = 0.2;
  const auto r = grad_check(o);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.n_nonzero > 0);
}

TEST_CASE("a corrupted gradient is detected") {
  GradCheckOptions o;
  o.seed = 4;
  o.mode = Mode::meta_only;
  o.corrupt = [](std::span<double> g) {
    for (std::size_t k = 2; k > 0; --k) g[g.size() - k] *= 1.5;  // head bias
  };
  const auto r = grad_check(o);
  CHECK(!r.passed);
  CHECK(r.max_rel_error > 1e-2);
  CHECK(r.worst_tensor.find("head") != std::string::npos);
}
