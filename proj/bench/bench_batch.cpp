// Serial vs OpenMP timing of the batch gradient and prediction kernels.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "lmfuse/batch.hpp"
#include "lmfuse/pipeline.hpp"
#include "lmfuse/synthgen.hpp"

using namespace lmfuse;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  SynthSpec spec;
  spec.seed = 7;
  const auto records = to_records(generate(spec));
  SplitSettings split;
  const auto data = prepare(records, split);
  const auto model = init_model(7, data.prep.meta_dim(), Mode::merged, 0.2);
  const auto weights = class_weights([&] {
    std::vector<Label> l;
    for (const auto& s : data.train) l.push_back(s.label);
    return l;
  }());
  std::vector<std::size_t> batch(data.train.size());
  std::iota(batch.begin(), batch.end(), 0);

  std::printf("threads %d, %zu samples, %zu parameters, best of %d\n", omp_get_max_threads(),
              data.train.size(), model.params().size(), reps);
  std::printf("%-16s %12s %12s %8s\n", "kernel", "serial s", "parallel s", "speedup");
  for (bool grad : {true, false}) {
    double t[2];
    for (Execution e : {Execution::serial, Execution::parallel}) {
      t[static_cast<int>(e)] = best_of(reps, [&] {
        if (grad) {
          volatile double sink = batch_gradient(model, data.train, batch, weights, 1, Reduction::mean, e).loss;
          (void)sink;
        } else {
          volatile double sink = predict_all(model, data.train, e)[0][0];
          (void)sink;
        }
      });
    }
    std::printf("%-16s %12.4f %12.4f %8.2f\n", grad ? "batch_gradient" : "predict_all", t[0], t[1], t[0] / t[1]);
  }
}
