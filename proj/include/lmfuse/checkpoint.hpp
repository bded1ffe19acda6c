#pragma once

#include <filesystem>
#include <optional>

#include "json.hpp"
#include "lmfuse/model.hpp"
#include "lmfuse/pipeline.hpp"

namespace lmfuse {

// A model plus what is needed to reproduce its inputs: the meta-data encoding
// fitted at training time and the split that produced the test set.
struct Checkpoint {
  FusionModel model;
  std::optional<Preprocessing> preprocessing;
  std::optional<SplitSettings> split;
};

nlohmann::json model_to_json(const FusionModel& model);
FusionModel model_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lmfuse
