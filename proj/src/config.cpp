#include "vlmlab/config.hpp"

#include <set>

#include "json.hpp"
#include "vlmlab/io.hpp"

namespace vlmlab {

using nlohmann::json;

void RunConfig::validate() const {
    if (vocab_size < 10) throw ConfigError("config: vocab_size must be >= 10");
    if (patch_dim < 1) throw ConfigError("config: patch_dim must be >= 1");
    if (num_keys < 1 || num_train_keys < 1)
        throw ConfigError("config: num_keys and num_train_keys must be >= 1");
    if (num_keys > vocab_size - 9)
        throw ConfigError("config: num_keys must be <= vocab_size - 9");
    if (disjoint_splits && num_keys + num_train_keys > vocab_size)
        throw ConfigError("config: disjoint splits need num_keys + num_train_keys <= vocab_size");
    if (cell_res < 1) throw ConfigError("config: cell_res must be >= 1");
    if (train_grids_per_key < 1) throw ConfigError("config: train_grids_per_key must be >= 1");
    if (!(min_distance >= 0.0)) throw ConfigError("config: min_distance must be >= 0");
    if (threads < 1) throw ConfigError("config: threads must be >= 1");
    if (region_rows < 1 || region_cols < 1)
        throw ConfigError("config: region grid must be at least 1x1");
    model_config().validate();  // also checks scheme/encoder names via construction
    train_config().validate();
}

ModelConfig RunConfig::model_config() const {
    ModelConfig cfg;
    cfg.embed_dim = embed_dim;
    cfg.head_dim = head_dim;
    cfg.num_heads = num_heads;
    cfg.num_layers = num_layers;
    cfg.patch_dim = patch_dim;
    cfg.text_vocab_size = tokens::kNumSpecial + vocab_size;
    cfg.enc_hidden = enc_hidden;
    cfg.mlp_hidden = mlp_hidden;
    cfg.encoder = encoder_from_string(encoder);
    cfg.scheme = scheme_from_string(scheme);
    cfg.rope_base = rope_base;
    cfg.seed = model_seed;
    return cfg;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch_size = batch_size;
    cfg.learning_rate = learning_rate;
    cfg.beta1 = beta1;
    cfg.beta2 = beta2;
    cfg.adam_eps = adam_eps;
    cfg.log_every = log_every;
    // distinct stream from parameter init
    cfg.shuffle_seed = model_seed ^ 0x9e3779b97f4a7c15ull;
    return cfg;
}

std::string RunConfig::to_json() const {
    json j;
    j["vocab_size"] = vocab_size;
    j["patch_dim"] = patch_dim;
    j["num_keys"] = num_keys;
    j["num_train_keys"] = num_train_keys;
    j["disjoint_splits"] = disjoint_splits;
    j["cell_res"] = cell_res;
    j["train_grids_per_key"] = train_grids_per_key;
    j["min_distance"] = min_distance;
    j["dataset_seed"] = dataset_seed;
    j["scheme"] = scheme;
    j["encoder"] = encoder;
    j["embed_dim"] = embed_dim;
    j["head_dim"] = head_dim;
    j["num_heads"] = num_heads;
    j["num_layers"] = num_layers;
    j["enc_hidden"] = enc_hidden;
    j["mlp_hidden"] = mlp_hidden;
    j["rope_base"] = rope_base;
    j["model_seed"] = model_seed;
    j["steps"] = steps;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["log_every"] = log_every;
    j["threads"] = threads;
    j["region_rows"] = region_rows;
    j["region_cols"] = region_cols;
    j["background_value"] = background_value;
    j["out_dir"] = out_dir;
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad json: ") + e.what());
    }
    static const std::set<std::string> known = {
        "vocab_size", "patch_dim", "num_keys", "num_train_keys", "disjoint_splits",
        "cell_res", "train_grids_per_key", "min_distance", "dataset_seed", "scheme", "encoder", "embed_dim",
        "head_dim", "num_heads", "num_layers", "enc_hidden", "mlp_hidden", "rope_base",
        "model_seed", "steps", "batch_size", "learning_rate", "beta1", "beta2",
        "adam_eps", "log_every", "threads", "region_rows", "region_cols",
        "background_value", "out_dir"};
    for (const auto& item : j.items())
        if (known.find(item.key()) == known.end())
            throw ConfigError("config: unknown key \"" + item.key() + "\"");

    RunConfig cfg;
    try {
        cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
        cfg.patch_dim = j.value("patch_dim", cfg.patch_dim);
        cfg.num_keys = j.value("num_keys", cfg.num_keys);
        cfg.num_train_keys = j.value("num_train_keys", cfg.num_train_keys);
        cfg.disjoint_splits = j.value("disjoint_splits", cfg.disjoint_splits);
        cfg.cell_res = j.value("cell_res", cfg.cell_res);
        cfg.train_grids_per_key = j.value("train_grids_per_key", cfg.train_grids_per_key);
        cfg.min_distance = j.value("min_distance", cfg.min_distance);
        cfg.dataset_seed = j.value("dataset_seed", cfg.dataset_seed);
        cfg.scheme = j.value("scheme", cfg.scheme);
        cfg.encoder = j.value("encoder", cfg.encoder);
        cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
        cfg.head_dim = j.value("head_dim", cfg.head_dim);
        cfg.num_heads = j.value("num_heads", cfg.num_heads);
        cfg.num_layers = j.value("num_layers", cfg.num_layers);
        cfg.enc_hidden = j.value("enc_hidden", cfg.enc_hidden);
        cfg.mlp_hidden = j.value("mlp_hidden", cfg.mlp_hidden);
        cfg.rope_base = j.value("rope_base", cfg.rope_base);
        cfg.model_seed = j.value("model_seed", cfg.model_seed);
        cfg.steps = j.value("steps", cfg.steps);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
        cfg.beta1 = j.value("beta1", cfg.beta1);
        cfg.beta2 = j.value("beta2", cfg.beta2);
        cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
        cfg.log_every = j.value("log_every", cfg.log_every);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.region_rows = j.value("region_rows", cfg.region_rows);
        cfg.region_cols = j.value("region_cols", cfg.region_cols);
        cfg.background_value = j.value("background_value", cfg.background_value);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid field type: ") + e.what());
    }
    return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    return from_json(read_file(path));
}

}  // namespace vlmlab
