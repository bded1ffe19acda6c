#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "lmfuse/features.hpp"
#include "lmfuse/model.hpp"
#include "lmfuse/rng.hpp"

namespace testing {

inline lmfuse::FeatureSample random_sample(lmfuse::Rng& rng, std::size_t meta_dim, std::size_t len,
                                           lmfuse::Label label, const std::string& id = "v") {
  lmfuse::FeatureSample s;
  s.video_id = id;
  for (auto& ch : s.deltas.channels) {
    ch.resize(len);
    for (double& v : ch) v = rng.uniform(-1.0, 1.0);
  }
  s.deltas.gap_flags.assign(len, false);
  s.meta.resize(meta_dim);
  for (double& v : s.meta) v = rng.normal();
  s.label = label;
  return s;
}

inline std::vector<lmfuse::FeatureSample> random_samples(std::uint64_t seed, std::size_t n,
                                                          std::size_t meta_dim, std::size_t len) {
  lmfuse::Rng rng(seed);
  std::vector<lmfuse::FeatureSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = i % 3 == 0 ? lmfuse::Label::one : lmfuse::Label::zero;
    out.push_back(random_sample(rng, meta_dim, len, label, "v" + std::to_string(i)));
  }
  return out;
}

inline bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return false;
  }
  return true;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lmfuse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
