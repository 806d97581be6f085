#include "vlmlab/probe.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "vlmlab/errors.hpp"
#include "vlmlab/io.hpp"
#include "vlmlab/rng.hpp"

namespace vlmlab {

using nlohmann::json;

PatternLibrary gen_library(int vocab_size, int patch_dim, uint64_t seed, double min_distance) {
    if (vocab_size < 10)
        throw ConfigError("gen_library: vocab_size must be >= 10 (key + 8 distractors + substitute), got " +
                          std::to_string(vocab_size));
    if (patch_dim < 1) throw ConfigError("gen_library: patch_dim must be >= 1");
    if (!(min_distance >= 0.0)) throw ConfigError("gen_library: min_distance must be >= 0");

    PatternLibrary lib;
    lib.vocab_size = vocab_size;
    lib.patch_dim = patch_dim;
    lib.seed = seed;
    lib.min_distance = min_distance;
    lib.patterns = Mat(vocab_size, patch_dim);

    Rng rng(seed);
    std::vector<Vec> accepted;
    accepted.reserve(static_cast<size_t>(vocab_size));
    while (static_cast<int>(accepted.size()) < vocab_size) {
        Vec cand(static_cast<size_t>(patch_dim));
        for (double& x : cand) x = rng.uniform(-1.0, 1.0);
        bool ok = true;
        for (const Vec& prev : accepted) {
            double d2 = 0.0;
            for (int j = 0; j < patch_dim; ++j) d2 += (cand[j] - prev[j]) * (cand[j] - prev[j]);
            if (std::sqrt(d2) <= min_distance) {
                ok = false;
                break;
            }
        }
        if (ok) accepted.push_back(std::move(cand));
    }
    for (int i = 0; i < vocab_size; ++i) lib.patterns.set_row(i, accepted[static_cast<size_t>(i)]);
    return lib;
}

Mat sample_patch_grid(const PatternLibrary& lib, const CompositeSample& sample, int cell_res) {
    if (cell_res < 1) throw ConfigError("sample_patch_grid: cell_res must be >= 1");
    const int side = kGridSide * cell_res;
    Mat grid(side * side, lib.patch_dim);
    for (int pr = 0; pr < side; ++pr) {
        for (int pc = 0; pc < side; ++pc) {
            const int cell = (pr / cell_res) * kGridSide + (pc / cell_res);
            grid.set_row(pr * side + pc, lib.pattern(sample.cell_ids[static_cast<size_t>(cell)]));
        }
    }
    return grid;
}

namespace {

// Draws `count` distinct ids from [0, vocab) excluding `banned`.
std::vector<int> draw_distinct(Rng& rng, int vocab, int count, const std::vector<int>& banned) {
    std::vector<int> out;
    out.reserve(static_cast<size_t>(count));
    while (static_cast<int>(out.size()) < count) {
        const int cand = static_cast<int>(rng.next_below(static_cast<uint64_t>(vocab)));
        if (std::find(banned.begin(), banned.end(), cand) != banned.end()) continue;
        if (std::find(out.begin(), out.end(), cand) != out.end()) continue;
        out.push_back(cand);
    }
    return out;
}

// For one key: 9 positives (key at every slot) and 9 matched negatives
// (same caption, key swapped for a substitute), appended in slot order.
// copies > 1 repeats the construction with fresh distractor draws.
void emit_key_samples(Rng& rng, int vocab, int key, int copies, std::vector<CompositeSample>& out) {
    for (int slot = 0; slot < kGridSlots; ++slot) {
        for (int copy = 0; copy < copies; ++copy) {
        const std::vector<int> distractors = draw_distinct(rng, vocab, 8, {key});
        CompositeSample pos;
        pos.key_id = key;
        pos.caption_id = key;
        std::copy(distractors.begin(), distractors.end(), pos.distractor_ids.begin());
        pos.slot = slot;
        pos.label_yes = true;
        int d = 0;
        for (int cell = 0; cell < kGridSlots; ++cell)
            pos.cell_ids[static_cast<size_t>(cell)] = (cell == slot) ? key : distractors[static_cast<size_t>(d++)];
        out.push_back(pos);

        // matched negative: identical grid except the key cell holds a fresh
        // distractor, so the caption's pattern appears nowhere
        std::vector<int> banned = distractors;
        banned.push_back(key);
        const int substitute = draw_distinct(rng, vocab, 1, banned)[0];
        CompositeSample neg = pos;
        neg.label_yes = false;
        neg.cell_ids[static_cast<size_t>(slot)] = substitute;
        out.push_back(neg);
        }
    }
}

}  // namespace

ProbeDataset gen_probe(const PatternLibrary& lib, int num_keys, uint64_t seed,
                       const ProbeOptions& opts) {
    if (num_keys < 1) throw ConfigError("gen_probe: num_keys must be >= 1");
    if (num_keys > lib.vocab_size - 9)
        throw ConfigError("gen_probe: num_keys " + std::to_string(num_keys) +
                          " exceeds vocab_size - 9 = " + std::to_string(lib.vocab_size - 9));
    const int num_train_keys = opts.num_train_keys < 0 ? num_keys : opts.num_train_keys;
    if (num_train_keys < 1) throw ConfigError("gen_probe: num_train_keys must be >= 1");
    if (opts.disjoint_splits && num_keys + num_train_keys > lib.vocab_size)
        throw ConfigError("gen_probe: disjoint splits need num_keys + num_train_keys <= vocab_size");
    if (opts.cell_res < 1) throw ConfigError("gen_probe: cell_res must be >= 1");
    if (opts.train_grids_per_key < 1)
        throw ConfigError("gen_probe: train_grids_per_key must be >= 1");

    Rng rng(seed);
    std::vector<int> ids(static_cast<size_t>(lib.vocab_size));
    for (int i = 0; i < lib.vocab_size; ++i) ids[static_cast<size_t>(i)] = i;
    rng.shuffle(ids);

    std::vector<int> eval_keys(ids.begin(), ids.begin() + num_keys);
    std::vector<int> train_keys;
    if (opts.disjoint_splits) {
        train_keys.assign(ids.begin() + num_keys, ids.begin() + num_keys + num_train_keys);
    } else {
        train_keys.assign(ids.begin(), ids.begin() + num_train_keys);
    }

    ProbeDataset ds;
    ds.lib = lib;
    for (int key : train_keys)
        emit_key_samples(rng, lib.vocab_size, key, opts.train_grids_per_key, ds.train);
    for (int key : eval_keys) emit_key_samples(rng, lib.vocab_size, key, 1, ds.eval);

    ds.manifest.version = 1;
    ds.manifest.seed = seed;
    ds.manifest.vocab_size = lib.vocab_size;
    ds.manifest.patch_dim = lib.patch_dim;
    ds.manifest.num_keys = num_keys;
    ds.manifest.num_train_keys = num_train_keys;
    ds.manifest.disjoint_splits = opts.disjoint_splits;
    ds.manifest.cell_res = opts.cell_res;
    ds.manifest.train_grids_per_key = opts.train_grids_per_key;
    ds.manifest.eval_count = static_cast<int>(ds.eval.size());
    ds.manifest.train_count = static_cast<int>(ds.train.size());
    ds.manifest.content_hash = dataset_hash(ds);
    return ds;
}

std::vector<const CompositeSample*> eval_for_slot(const ProbeDataset& ds, int slot) {
    if (slot < 0 || slot >= kGridSlots) throw ConfigError("eval_for_slot: slot out of range");
    std::vector<const CompositeSample*> out;
    for (const auto& s : ds.eval)
        if (s.slot == slot) out.push_back(&s);
    return out;
}

namespace {

json sample_to_json(const CompositeSample& s) {
    json j;
    j["key"] = s.key_id;
    j["caption"] = s.caption_id;
    j["distractors"] = s.distractor_ids;
    j["slot"] = s.slot;
    j["label"] = s.label_yes ? "yes" : "no";
    j["cells"] = s.cell_ids;
    return j;
}

CompositeSample sample_from_json(const json& j) {
    CompositeSample s;
    s.key_id = j.at("key").get<int>();
    s.caption_id = j.at("caption").get<int>();
    auto d = j.at("distractors").get<std::vector<int>>();
    if (d.size() != 8) throw FormatError("dataset: sample must list 8 distractors");
    std::copy(d.begin(), d.end(), s.distractor_ids.begin());
    s.slot = j.at("slot").get<int>();
    const std::string label = j.at("label").get<std::string>();
    if (label != "yes" && label != "no") throw FormatError("dataset: label must be yes or no");
    s.label_yes = label == "yes";
    auto c = j.at("cells").get<std::vector<int>>();
    if (c.size() != 9) throw FormatError("dataset: sample must list 9 cells");
    std::copy(c.begin(), c.end(), s.cell_ids.begin());
    return s;
}

// Everything except the hash itself, serialized canonically.
std::string hashable_payload(const ProbeDataset& ds) {
    json j;
    j["version"] = ds.manifest.version;
    j["seed"] = ds.manifest.seed;
    j["vocab_size"] = ds.manifest.vocab_size;
    j["patch_dim"] = ds.manifest.patch_dim;
    j["num_keys"] = ds.manifest.num_keys;
    j["num_train_keys"] = ds.manifest.num_train_keys;
    j["disjoint_splits"] = ds.manifest.disjoint_splits;
    j["cell_res"] = ds.manifest.cell_res;
    j["train_grids_per_key"] = ds.manifest.train_grids_per_key;
    j["lib_seed"] = ds.lib.seed;
    j["lib_min_distance"] = ds.lib.min_distance;
    j["patterns"] = ds.lib.patterns.data;
    json train = json::array();
    for (const auto& s : ds.train) train.push_back(sample_to_json(s));
    json eval = json::array();
    for (const auto& s : ds.eval) eval.push_back(sample_to_json(s));
    j["train"] = std::move(train);
    j["eval"] = std::move(eval);
    return j.dump();
}

}  // namespace

std::string dataset_hash(const ProbeDataset& ds) {
    return hex64(fnv1a64(hashable_payload(ds)));
}

void save_dataset(const ProbeDataset& ds, const std::string& path) {
    json j;
    json manifest;
    manifest["version"] = ds.manifest.version;
    manifest["seed"] = ds.manifest.seed;
    manifest["vocab_size"] = ds.manifest.vocab_size;
    manifest["patch_dim"] = ds.manifest.patch_dim;
    manifest["num_keys"] = ds.manifest.num_keys;
    manifest["num_train_keys"] = ds.manifest.num_train_keys;
    manifest["disjoint_splits"] = ds.manifest.disjoint_splits;
    manifest["cell_res"] = ds.manifest.cell_res;
    manifest["train_grids_per_key"] = ds.manifest.train_grids_per_key;
    manifest["eval_count"] = ds.manifest.eval_count;
    manifest["train_count"] = ds.manifest.train_count;
    manifest["content_hash"] = dataset_hash(ds);
    j["manifest"] = std::move(manifest);
    json lib;
    lib["seed"] = ds.lib.seed;
    lib["min_distance"] = ds.lib.min_distance;
    lib["patterns"] = ds.lib.patterns.data;
    j["library"] = std::move(lib);
    json train = json::array();
    for (const auto& s : ds.train) train.push_back(sample_to_json(s));
    json eval = json::array();
    for (const auto& s : ds.eval) eval.push_back(sample_to_json(s));
    j["train"] = std::move(train);
    j["eval"] = std::move(eval);
    write_file(path, j.dump(2) + "\n");
}

ProbeDataset load_dataset(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw FormatError(std::string("dataset: bad json: ") + e.what());
    }
    ProbeDataset ds;
    try {
        const json& m = j.at("manifest");
        ds.manifest.version = m.at("version").get<uint32_t>();
        if (ds.manifest.version != 1)
            throw FormatError("dataset: unsupported version " + std::to_string(ds.manifest.version));
        ds.manifest.seed = m.at("seed").get<uint64_t>();
        ds.manifest.vocab_size = m.at("vocab_size").get<int>();
        ds.manifest.patch_dim = m.at("patch_dim").get<int>();
        ds.manifest.num_keys = m.at("num_keys").get<int>();
        ds.manifest.num_train_keys = m.at("num_train_keys").get<int>();
        ds.manifest.disjoint_splits = m.at("disjoint_splits").get<bool>();
        ds.manifest.cell_res = m.at("cell_res").get<int>();
        ds.manifest.train_grids_per_key = m.at("train_grids_per_key").get<int>();
        ds.manifest.eval_count = m.at("eval_count").get<int>();
        ds.manifest.train_count = m.at("train_count").get<int>();
        ds.manifest.content_hash = m.at("content_hash").get<std::string>();

        const json& lib = j.at("library");
        ds.lib.vocab_size = ds.manifest.vocab_size;
        ds.lib.patch_dim = ds.manifest.patch_dim;
        ds.lib.seed = lib.at("seed").get<uint64_t>();
        ds.lib.min_distance = lib.at("min_distance").get<double>();
        auto flat = lib.at("patterns").get<std::vector<double>>();
        if (static_cast<int>(flat.size()) != ds.lib.vocab_size * ds.lib.patch_dim)
            throw FormatError("dataset: pattern table size mismatch");
        ds.lib.patterns = Mat(ds.lib.vocab_size, ds.lib.patch_dim);
        ds.lib.patterns.data = std::move(flat);
        if (!all_finite(ds.lib.patterns)) throw FormatError("dataset: non-finite pattern values");

        for (const json& s : j.at("train")) ds.train.push_back(sample_from_json(s));
        for (const json& s : j.at("eval")) ds.eval.push_back(sample_from_json(s));
    } catch (const json::exception& e) {
        throw FormatError(std::string("dataset: missing or invalid field: ") + e.what());
    }
    if (static_cast<int>(ds.train.size()) != ds.manifest.train_count ||
        static_cast<int>(ds.eval.size()) != ds.manifest.eval_count)
        throw FormatError("dataset: sample counts disagree with manifest");
    if (dataset_hash(ds) != ds.manifest.content_hash)
        throw FormatError("dataset: content hash mismatch (tampered or corrupt file)");
    return ds;
}

}  // namespace vlmlab
