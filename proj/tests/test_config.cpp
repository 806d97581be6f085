#include "doctest.h"
#include "vlmlab/config.hpp"

using namespace vlmlab;

TEST_CASE("defaults validate and derive a consistent model config") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    ModelConfig mc = cfg.model_config();
    CHECK(mc.text_vocab_size == tokens::kNumSpecial + cfg.vocab_size);
    CHECK(mc.embed_dim == mc.num_heads * mc.head_dim);
    CHECK(mc.scheme == SchemeId::sequential);
    TrainConfig tc = cfg.train_config();
    CHECK(tc.steps == cfg.steps);
    CHECK(tc.shuffle_seed != cfg.model_seed);
}

TEST_CASE("json round-trip preserves every field") {
    RunConfig cfg;
    cfg.scheme = "bapa";
    cfg.model_seed = 42;
    cfg.steps = 123;
    cfg.learning_rate = 1.5e-3;
    cfg.out_dir = "elsewhere";
    RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.scheme == "bapa");
    CHECK(back.model_seed == 42);
    CHECK(back.steps == 123);
    CHECK(back.out_dir == "elsewhere");
}

TEST_CASE("partial configs inherit defaults") {
    RunConfig cfg = RunConfig::from_json(R"({"scheme": "bapa", "steps": 50})");
    CHECK(cfg.scheme == "bapa");
    CHECK(cfg.steps == 50);
    CHECK(cfg.vocab_size == RunConfig{}.vocab_size);
}

TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(RunConfig::from_json(R"({"shceme": "bapa"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json("not json"), ConfigError);

    RunConfig bad;
    bad.scheme = "mrope";
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = RunConfig{};
    bad.num_keys = 60;  // > vocab - 9
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = RunConfig{};
    bad.embed_dim = 60;  // != heads * head_dim
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    bad = RunConfig{};
    bad.disjoint_splits = true;
    bad.num_keys = 40;
    bad.num_train_keys = 40;  // disjoint splits no longer fit
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}
