#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vlmlab/numeric.hpp"

namespace vlmlab {

// Bank of distinct patch patterns. Pattern index doubles as the caption
// symbol: caption c "describes" pattern c.
struct PatternLibrary {
    int vocab_size = 0;
    int patch_dim = 0;
    uint64_t seed = 0;
    double min_distance = 0.0;
    Mat patterns;  // vocab_size x patch_dim

    Vec pattern(int id) const { return patterns.row(id); }
};

// Patterns drawn uniformly from [-1, 1]^patch_dim, redrawn deterministically
// until every pair is at least min_distance apart. Needs vocab_size >= 10:
// one key, eight distractors, one substitute for the matched negative.
PatternLibrary gen_library(int vocab_size, int patch_dim, uint64_t seed,
                           double min_distance = 1.0);

// One probe instance on a 3x3 cell grid. For label yes the caption's pattern
// sits at `slot`; for the matched negative the same caption is asked but its
// pattern appears nowhere in the grid.
struct CompositeSample {
    int key_id = 0;
    int caption_id = 0;
    std::array<int, 8> distractor_ids{};
    int slot = 0;  // 3*row + col, row-major
    bool label_yes = false;
    std::array<int, 9> cell_ids{};  // raster order

    bool operator==(const CompositeSample&) const = default;
};

constexpr int kGridSlots = 9;
constexpr int kGridSide = 3;

// Materializes the patch grid for a sample: cell_res=1 gives one patch per
// cell (9 tokens); cell_res=c renders each cell as a c x c block of that
// cell's pattern, rastered over the full 3c x 3c patch grid (9c^2 tokens).
Mat sample_patch_grid(const PatternLibrary& lib, const CompositeSample& sample, int cell_res = 1);

struct DatasetManifest {
    uint32_t version = 1;
    uint64_t seed = 0;
    int vocab_size = 0;
    int patch_dim = 0;
    int num_keys = 0;        // eval keys
    int num_train_keys = 0;
    bool disjoint_splits = true;
    int cell_res = 1;
    int train_grids_per_key = 1;
    int eval_count = 0;
    int train_count = 0;
    std::string content_hash;  // filled by save, verified by load
};

// Eval split: for every key and every slot, one positive and one matched
// negative, so each slot carries the identical multiset of (key, caption)
// pairs and labels balance 50/50. Train split has the same structure over
// its own keys.
struct ProbeDataset {
    DatasetManifest manifest;
    PatternLibrary lib;
    std::vector<CompositeSample> train;
    std::vector<CompositeSample> eval;
};

struct ProbeOptions {
    int num_train_keys = -1;  // -1: same count as eval keys
    bool disjoint_splits = true;
    int cell_res = 1;
    // Distinct grid arrangements per (key, slot) in the train split; the
    // eval split always has exactly one positive and one matched negative.
    int train_grids_per_key = 1;
};

ProbeDataset gen_probe(const PatternLibrary& lib, int num_keys, uint64_t seed,
                       const ProbeOptions& opts = {});

std::vector<const CompositeSample*> eval_for_slot(const ProbeDataset& ds, int slot);

void save_dataset(const ProbeDataset& ds, const std::string& path);
ProbeDataset load_dataset(const std::string& path);

// Content hash over manifest fields, library and samples; stable across
// runs, used to pair reports produced from the same data.
std::string dataset_hash(const ProbeDataset& ds);

}  // namespace vlmlab
