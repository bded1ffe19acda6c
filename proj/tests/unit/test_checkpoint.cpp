#include <fstream>

#include "doctest.h"
#include "lmfuse/checkpoint.hpp"
#include "lmfuse/error.hpp"
#include "lmfuse/evaluation.hpp"
#include "support.hpp"

using namespace lmfuse;

TEST_CASE("save then load reproduces parameters and evaluation exactly") {
  const auto dir = testing::fresh_dir("checkpoint");
  const auto samples = testing::random_samples(2, 25, 6, 9);
  for (Mode mode : kAllModes) {
    for (HeadActivation head : {HeadActivation::identity, HeadActivation::relu}) {
      ModelConfig c;
      c.mode = mode;
      c.meta_dim = 6;
      c.head = head;
      c.seed = 1234567890123ull;
      c.dropout_rate = 0.35;
      const auto m = init_model(c);
      Preprocessing prep{NationalityVocab({"KOR", "USA"}), MetaStandardizer{{1, 2, 3, 4}, {0.5, 1, 2, 3}}};
      SplitSettings split{0.25, 0.15, 77, true};
      const auto path = dir / "m.json";
      save_checkpoint(path, Checkpoint{m, prep, split});
      const auto back = load_checkpoint(path);
      CHECK(back.model == m);
      CHECK(back.model.config().seed == c.seed);
      CHECK(back.model.config().head == head);
      REQUIRE(back.preprocessing);
      CHECK(*back.preprocessing == prep);
      REQUIRE(back.split);
      CHECK(back.split->seed == 77);
      CHECK(back.split->group_split);
      CHECK(evaluate(back.model, samples) == evaluate(m, samples));

      // Saving the loaded checkpoint again gives the same document.
      save_checkpoint(dir / "again.json", back);
      std::ifstream a(path), b(dir / "again.json");
      const std::string sa((std::istreambuf_iterator<char>(a)), {});
      const std::string sb((std::istreambuf_iterator<char>(b)), {});
      CHECK(sa == sb);
    }
  }
}

TEST_CASE("tensors are nested arrays") {
  const auto m = init_model(3, 4, Mode::merged, 0.2);
  const auto j = model_to_json(m);
  CHECK(checkpoint_to_json(Checkpoint{m, std::nullopt, std::nullopt}).at("format") == "lmfuse-checkpoint");
  const auto& w_hidden = j.at("tensors").at("branches").at(0).at("w_hidden");
  CHECK(w_hidden.size() == 40);
  CHECK(w_hidden.at(0).size() == 10);
  CHECK(j.at("tensors").at("head").at("w").size() == 2);
  CHECK(j.at("tensors").at("head").at("b").size() == 2);
  CHECK(j.at("tensors").at("branches").size() == 8);
}

TEST_CASE("malformed checkpoints are rejected") {
  const auto m = init_model(3, 4, Mode::meta_only, 0.2);
  auto j = model_to_json(m);
  j["tensors"]["head"]["b"] = nlohmann::json::array({1.0});
  CHECK_THROWS_AS(model_from_json(j), ValidationError);

  auto k = model_to_json(m);
  k["config"]["mode"] = "audio";
  CHECK_THROWS_AS(model_from_json(k), ValidationError);

  const auto dir = testing::fresh_dir("checkpoint_bad");
  std::ofstream(dir / "x.json") << "{ not json";
  CHECK_THROWS_AS(load_checkpoint(dir / "x.json"), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), ValidationError);
}
