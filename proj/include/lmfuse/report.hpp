#pragma once

#include <string>

#include "json.hpp"
#include "lmfuse/evaluation.hpp"
#include "lmfuse/training.hpp"

namespace lmfuse {

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const TrainReport& r);
nlohmann::json to_json(const AblationReport& r);
nlohmann::json to_json(const GradCheckReport& r);

// Aligned plain-text tables.
std::string format_table(const EvalReport& r);
std::string format_table(const AblationReport& r);

}  // namespace lmfuse
