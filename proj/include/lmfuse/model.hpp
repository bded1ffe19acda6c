#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmfuse/features.hpp"

namespace lmfuse {

// Which inputs reach the fusion head.
enum class Mode { merged, facial_only, meta_only };
enum class HeadActivation { relu, identity };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(HeadActivation h) noexcept;
Mode parse_mode(std::string_view s);
HeadActivation parse_head_activation(std::string_view s);

inline constexpr std::array<Mode, 3> kAllModes{Mode::merged, Mode::facial_only, Mode::meta_only};

struct ModelConfig {
  Mode mode = Mode::merged;
  std::size_t meta_dim = 0;
  std::size_t hidden = 10;
  std::size_t meta_hidden1 = 128;
  std::size_t meta_hidden2 = 64;
  double dropout_rate = 0.2;
  HeadActivation head = HeadActivation::identity;
  std::uint64_t seed = 0;

  bool has_branches() const noexcept { return mode != Mode::meta_only; }
  bool has_meta() const noexcept { return mode != Mode::facial_only; }
  std::size_t merged_dim() const noexcept {
    return (has_branches() ? kChannels * hidden : 0) + (has_meta() ? meta_hidden2 : 0);
  }
  void validate() const;
};

// A row-major rows x cols block inside the flat parameter vector.
struct Block {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const noexcept { return rows * cols; }
};

// Recurrent cell with gates packed as [input, forget, output, candidate].
struct BranchLayout {
  Block w_input;   // 4H x 1
  Block w_hidden;  // 4H x H
  Block bias;      // 4H x 1
};

struct ParamLayout {
  std::vector<BranchLayout> branches;  // empty in meta_only mode
  Block meta_w1, meta_b1, meta_w2, meta_b2;  // empty in facial_only mode
  Block head_w, head_b;
  std::size_t total = 0;

  static ParamLayout for_config(const ModelConfig& config);
  // Human-readable name of the tensor holding flat parameter `i`.
  std::string tensor_name(std::size_t i) const;
};

class FusionModel {
 public:
  FusionModel(ModelConfig config, std::vector<double> params);

  const ModelConfig& config() const noexcept { return config_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::span<const double> params() const noexcept { return params_; }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> block(const Block& b) const noexcept {
    return std::span<const double>(params_).subspan(b.offset, b.size());
  }

  friend bool operator==(const FusionModel& a, const FusionModel& b) {
    return a.params_ == b.params_ && a.config_.mode == b.config_.mode &&
           a.config_.meta_dim == b.config_.meta_dim && a.config_.hidden == b.config_.hidden &&
           a.config_.dropout_rate == b.config_.dropout_rate && a.config_.head == b.config_.head;
  }

 private:
  ModelConfig config_;
  ParamLayout layout_;
  std::vector<double> params_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer. The recurrent cell uses
// fan_in = hidden size.
FusionModel init_model(std::uint64_t seed, std::size_t in_dim, Mode mode, double dropout_rate,
                       HeadActivation head = HeadActivation::identity);
FusionModel init_model(const ModelConfig& config);

struct BranchParams {
  std::span<const double> w_input;
  std::span<const double> w_hidden;
  std::span<const double> bias;
  std::size_t hidden = 0;
};

BranchParams branch_params(const FusionModel& model, std::size_t branch);

// Final hidden state after running the cell from zero state over `seq`.
std::vector<double> branch_forward(const BranchParams& p, std::span<const double> seq);

// Steps with mask 0 leave the state untouched, so padding after the true end
// reproduces the unpadded result exactly.
std::vector<double> branch_forward_masked(const BranchParams& p, std::span<const double> seq,
                                          std::span<const std::uint8_t> mask);

std::vector<double> meta_forward(const FusionModel& model, std::span<const double> meta_vec);

struct BranchCache {
  std::size_t steps = 0;
  std::vector<double> gates;  // steps x 4H, post-activation
  std::vector<double> cell;   // steps x H
  std::vector<double> cell_tanh;
  std::vector<double> hidden;
  std::vector<double> keep;   // H, inverted-dropout multipliers on the output
};

struct ForwardCache {
  std::vector<BranchCache> branches;
  std::vector<double> z1, keep1, h1;  // meta hidden 1: pre-activation, mask, dropped output
  std::vector<double> z2, keep2, h2;
  std::vector<double> merged;
  std::array<double, 2> head_pre{};
  std::array<double, 2> probabilities{};
};

struct ForwardResult {
  std::array<double, 2> probabilities{};
  ForwardCache cache;
};

ForwardResult fusion_forward(const FusionModel& model, const FeatureSample& sample, bool train_mode,
                             std::uint64_t dropout_seed);

// Eval-mode class probabilities without keeping caches.
std::array<double, 2> predict(const FusionModel& model, const FeatureSample& sample);

// Adds d loss / d params into `grad` (sized model.params().size()), where
// loss = -class_weight * log(p[label] + 1e-12).
void fusion_backward(const FusionModel& model, const FeatureSample& sample, Label label,
                     double class_weight, const ForwardCache& cache, std::span<double> grad);

std::vector<double> fusion_backward(const FusionModel& model, const FeatureSample& sample,
                                    Label label, double class_weight, const ForwardCache& cache);

inline constexpr double kProbabilityFloor = 1e-12;

}  // namespace lmfuse
