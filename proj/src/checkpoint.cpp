#include "lmfuse/checkpoint.hpp"

#include <fstream>

#include "lmfuse/error.hpp"

namespace lmfuse {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "lmfuse-checkpoint";
constexpr int kVersion = 1;

json block_to_json(const FusionModel& model, const Block& b) {
  auto data = model.block(b);
  if (b.cols == 1) return json(std::vector<double>(data.begin(), data.end()));
  json rows = json::array();
  for (std::size_t r = 0; r < b.rows; ++r) {
    auto row = data.subspan(r * b.cols, b.cols);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

void block_from_json(const json& j, const Block& b, std::vector<double>& params,
                     const std::string& name) {
  auto fail = [&name]() { throw ValidationError("checkpoint tensor " + name + " has wrong shape"); };
  if (!j.is_array() || j.size() != b.rows) fail();
  for (std::size_t r = 0; r < b.rows; ++r) {
    if (b.cols == 1) {
      params[b.offset + r] = j[r].get<double>();
      continue;
    }
    const json& row = j[r];
    if (!row.is_array() || row.size() != b.cols) fail();
    for (std::size_t c = 0; c < b.cols; ++c) params[b.offset + r * b.cols + c] = row[c].get<double>();
  }
}

}  // namespace

json model_to_json(const FusionModel& model) {
  const auto& c = model.config();
  const auto& L = model.layout();
  json j;
  j["config"] = {
      {"mode", to_string(c.mode)},
      {"meta_dim", c.meta_dim},
      {"hidden", c.hidden},
      {"meta_hidden1", c.meta_hidden1},
      {"meta_hidden2", c.meta_hidden2},
      {"dropout_rate", c.dropout_rate},
      {"head_activation", to_string(c.head)},
      {"seed", c.seed},
  };
  json tensors;
  json branches = json::array();
  for (const auto& bl : L.branches) {
    branches.push_back({{"w_input", block_to_json(model, bl.w_input)},
                        {"w_hidden", block_to_json(model, bl.w_hidden)},
                        {"bias", block_to_json(model, bl.bias)}});
  }
  tensors["branches"] = branches;
  if (c.has_meta()) {
    tensors["meta"] = {{"w1", block_to_json(model, L.meta_w1)},
                       {"b1", block_to_json(model, L.meta_b1)},
                       {"w2", block_to_json(model, L.meta_w2)},
                       {"b2", block_to_json(model, L.meta_b2)}};
  }
  tensors["head"] = {{"w", block_to_json(model, L.head_w)}, {"b", block_to_json(model, L.head_b)}};
  j["tensors"] = tensors;
  return j;
}

FusionModel model_from_json(const json& j) {
  try {
    const json& jc = j.at("config");
    ModelConfig c;
    c.mode = parse_mode(jc.at("mode").get<std::string>());
    c.meta_dim = jc.at("meta_dim").get<std::size_t>();
    c.hidden = jc.at("hidden").get<std::size_t>();
    c.meta_hidden1 = jc.at("meta_hidden1").get<std::size_t>();
    c.meta_hidden2 = jc.at("meta_hidden2").get<std::size_t>();
    c.dropout_rate = jc.at("dropout_rate").get<double>();
    c.head = parse_head_activation(jc.at("head_activation").get<std::string>());
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.validate();

    const ParamLayout L = ParamLayout::for_config(c);
    std::vector<double> params(L.total);
    const json& t = j.at("tensors");
    const json& branches = t.at("branches");
    if (branches.size() != L.branches.size()) {
      throw ValidationError("checkpoint has " + std::to_string(branches.size()) +
                            " recurrent branches, expected " + std::to_string(L.branches.size()));
    }
    for (std::size_t b = 0; b < L.branches.size(); ++b) {
      const std::string p = "branches[" + std::to_string(b) + "].";
      block_from_json(branches[b].at("w_input"), L.branches[b].w_input, params, p + "w_input");
      block_from_json(branches[b].at("w_hidden"), L.branches[b].w_hidden, params, p + "w_hidden");
      block_from_json(branches[b].at("bias"), L.branches[b].bias, params, p + "bias");
    }
    if (c.has_meta()) {
      const json& m = t.at("meta");
      block_from_json(m.at("w1"), L.meta_w1, params, "meta.w1");
      block_from_json(m.at("b1"), L.meta_b1, params, "meta.b1");
      block_from_json(m.at("w2"), L.meta_w2, params, "meta.w2");
      block_from_json(m.at("b2"), L.meta_b2, params, "meta.b2");
    }
    block_from_json(t.at("head").at("w"), L.head_w, params, "head.w");
    block_from_json(t.at("head").at("b"), L.head_b, params, "head.b");
    return FusionModel(c, std::move(params));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json j = model_to_json(ckpt.model);
  j["format"] = kFormat;
  j["version"] = kVersion;
  if (ckpt.preprocessing) {
    const auto& p = *ckpt.preprocessing;
    j["preprocessing"] = {{"nationalities", p.vocab.codes()},
                          {"mean", p.standardizer.mean},
                          {"stddev", p.standardizer.stddev}};
  }
  if (ckpt.split) {
    const auto& s = *ckpt.split;
    j["split"] = {{"test_fraction", s.test_fraction},
                  {"val_fraction", s.val_fraction},
                  {"seed", s.seed},
                  {"group_split", s.group_split}};
  }
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.value("format", std::string{}) != kFormat) throw ValidationError("not a model checkpoint");
    if (j.value("version", 0) != kVersion) throw ValidationError("unsupported checkpoint version");
    Checkpoint ckpt{model_from_json(j), std::nullopt, std::nullopt};
    if (j.contains("preprocessing")) {
      const json& p = j.at("preprocessing");
      Preprocessing prep;
      prep.vocab = NationalityVocab(p.at("nationalities").get<std::vector<std::string>>());
      prep.standardizer.mean = p.at("mean").get<std::array<double, 4>>();
      prep.standardizer.stddev = p.at("stddev").get<std::array<double, 4>>();
      ckpt.preprocessing = std::move(prep);
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      ckpt.split = SplitSettings{s.at("test_fraction").get<double>(), s.at("val_fraction").get<double>(),
                                 s.at("seed").get<std::uint64_t>(), s.at("group_split").get<bool>()};
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace lmfuse
