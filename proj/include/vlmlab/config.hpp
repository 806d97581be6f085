#pragma once

#include <cstdint>
#include <string>

#include "vlmlab/model.hpp"
#include "vlmlab/train.hpp"

namespace vlmlab {

// Everything one experiment run needs, with the desk-scale defaults baked
// in. Loadable from JSON (partial files fine, unknown keys rejected); CLI
// flags override individual fields; the effective values are echoed into
// every output manifest.
struct RunConfig {
    // dataset
    int vocab_size = 64;
    int patch_dim = 16;
    int num_keys = 20;
    int num_train_keys = 20;
    bool disjoint_splits = false;
    int cell_res = 1;
    int train_grids_per_key = 3;
    double min_distance = 1.0;
    uint64_t dataset_seed = 7;

    // model
    std::string scheme = "sequential";
    std::string encoder = "per_patch";
    int embed_dim = 64;
    int head_dim = 16;
    int num_heads = 4;
    int num_layers = 2;
    int enc_hidden = 64;
    int mlp_hidden = 128;
    double rope_base = 10000.0;
    uint64_t model_seed = 1;

    // training
    int steps = 1500;
    int batch_size = 16;
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int log_every = 25;

    // evaluation / analysis
    int threads = 1;
    int region_rows = 3;
    int region_cols = 3;
    double background_value = 0.0;

    std::string out_dir = "out";

    void validate() const;

    ModelConfig model_config() const;
    TrainConfig train_config() const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
};

}  // namespace vlmlab
