#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "doctest.h"
#include "vlmlab/io.hpp"
#include "vlmlab/probe.hpp"

using namespace vlmlab;

TEST_CASE("library generation is deterministic and distinct") {
    PatternLibrary a = gen_library(32, 16, 123);
    PatternLibrary b = gen_library(32, 16, 123);
    CHECK(a.patterns == b.patterns);

    PatternLibrary c = gen_library(32, 16, 124);
    CHECK_FALSE(a.patterns == c.patterns);

    for (int i = 0; i < a.vocab_size; ++i)
        for (int j = i + 1; j < a.vocab_size; ++j) {
            double d2 = 0.0;
            for (int k = 0; k < a.patch_dim; ++k) {
                const double d = a.patterns.at(i, k) - a.patterns.at(j, k);
                d2 += d * d;
            }
            CHECK(std::sqrt(d2) > a.min_distance);
        }
}

TEST_CASE("library precondition") {
    CHECK_THROWS_AS(gen_library(9, 16, 1), ConfigError);
    CHECK_NOTHROW(gen_library(10, 16, 1));
}

TEST_CASE("probe construction invariants") {
    PatternLibrary lib = gen_library(32, 8, 5);
    ProbeDataset ds = gen_probe(lib, 10, 77);

    // eval size: keys x 9 slots x {positive, matched negative}
    CHECK(ds.eval.size() == 180);
    CHECK(ds.manifest.eval_count == 180);

    int yes = 0;
    for (const auto& s : ds.eval) {
        if (s.label_yes) {
            ++yes;
            CHECK(s.key_id == s.caption_id);
            CHECK(s.cell_ids[static_cast<size_t>(s.slot)] == s.key_id);
        } else {
            // caption pattern absent from every cell
            for (int cell : s.cell_ids) CHECK(cell != s.caption_id);
        }
        for (int d : s.distractor_ids) CHECK(d != s.key_id);
    }
    CHECK(yes * 2 == static_cast<int>(ds.eval.size()));  // 50/50 label balance
}

TEST_CASE("every slot carries the same multiset of key-caption pairs") {
    PatternLibrary lib = gen_library(40, 8, 6);
    ProbeDataset ds = gen_probe(lib, 12, 9);
    std::map<int, std::multiset<std::pair<int, int>>> per_slot;
    for (const auto& s : ds.eval)
        per_slot[s.slot].insert({s.key_id, s.caption_id});
    REQUIRE(per_slot.size() == 9);
    for (int slot = 1; slot < 9; ++slot) CHECK(per_slot[slot] == per_slot[0]);
}

TEST_CASE("train and eval keys are disjoint when configured") {
    PatternLibrary lib = gen_library(32, 8, 5);
    ProbeDataset ds = gen_probe(lib, 10, 77, {.num_train_keys = 12, .disjoint_splits = true});
    std::set<int> eval_keys, train_keys;
    for (const auto& s : ds.eval) eval_keys.insert(s.key_id);
    for (const auto& s : ds.train) train_keys.insert(s.key_id);
    CHECK(eval_keys.size() == 10);
    CHECK(train_keys.size() == 12);
    for (int k : train_keys) CHECK(eval_keys.count(k) == 0);
}

TEST_CASE("probe generation is deterministic") {
    PatternLibrary lib = gen_library(32, 8, 5);
    ProbeDataset a = gen_probe(lib, 10, 77);
    ProbeDataset b = gen_probe(lib, 10, 77);
    CHECK(a.eval == b.eval);
    CHECK(a.train == b.train);
    CHECK(a.manifest.content_hash == b.manifest.content_hash);

    ProbeDataset c = gen_probe(lib, 10, 78);
    CHECK(a.manifest.content_hash != c.manifest.content_hash);
}

TEST_CASE("probe preconditions") {
    PatternLibrary lib = gen_library(16, 8, 5);
    CHECK_THROWS_AS(gen_probe(lib, 8, 1), ConfigError);   // > vocab - 9
    CHECK_NOTHROW(gen_probe(lib, 7, 1, {.num_train_keys = 7}));
    CHECK_THROWS_AS(gen_probe(lib, 7, 1, {.num_train_keys = 10, .disjoint_splits = true}),
                    ConfigError);
}

TEST_CASE("patch grid materialization") {
    PatternLibrary lib = gen_library(16, 4, 2);
    CompositeSample s;
    s.key_id = 3;
    s.caption_id = 3;
    s.slot = 4;  // center
    s.label_yes = true;
    for (int cell = 0; cell < 9; ++cell) s.cell_ids[static_cast<size_t>(cell)] = cell;
    s.cell_ids[4] = 3;

    Mat grid = sample_patch_grid(lib, s, 1);
    REQUIRE(grid.rows == 9);
    for (int cell = 0; cell < 9; ++cell)
        CHECK(grid.row(cell) == lib.pattern(s.cell_ids[static_cast<size_t>(cell)]));

    // cell_res 2: every cell becomes a 2x2 block in a 6x6 patch raster
    Mat big = sample_patch_grid(lib, s, 2);
    REQUIRE(big.rows == 36);
    for (int pr = 0; pr < 6; ++pr)
        for (int pc = 0; pc < 6; ++pc) {
            const int cell = (pr / 2) * 3 + (pc / 2);
            CHECK(big.row(pr * 6 + pc) == lib.pattern(s.cell_ids[static_cast<size_t>(cell)]));
        }
}

TEST_CASE("dataset save/load round-trips") {
    PatternLibrary lib = gen_library(24, 6, 11);
    ProbeDataset ds = gen_probe(lib, 6, 13);
    const std::string path = "test_dataset.json";
    save_dataset(ds, path);
    ProbeDataset loaded = load_dataset(path);
    CHECK(loaded.eval == ds.eval);
    CHECK(loaded.train == ds.train);
    CHECK(loaded.lib.patterns == ds.lib.patterns);
    CHECK(loaded.manifest.content_hash == ds.manifest.content_hash);
    CHECK(dataset_hash(loaded) == dataset_hash(ds));
    std::remove(path.c_str());
}

TEST_CASE("tampered or missing dataset files are rejected") {
    PatternLibrary lib = gen_library(24, 6, 11);
    ProbeDataset ds = gen_probe(lib, 6, 13);
    const std::string path = "test_dataset_tamper.json";
    save_dataset(ds, path);

    // flip a manifest field
    std::string text = read_file(path);
    const size_t pos = text.find("\"num_keys\": 6");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 13, "\"num_keys\": 7");
    write_file(path, text);
    CHECK_THROWS_AS(load_dataset(path), FormatError);

    // unsupported version
    save_dataset(ds, path);
    text = read_file(path);
    const size_t vpos = text.find("\"version\": 1");
    REQUIRE(vpos != std::string::npos);
    text.replace(vpos, 12, "\"version\": 9");
    write_file(path, text);
    CHECK_THROWS_AS(load_dataset(path), FormatError);

    std::remove(path.c_str());
    CHECK_THROWS_AS(load_dataset(path), IoError);
}

TEST_CASE("eval_for_slot filters by slot") {
    PatternLibrary lib = gen_library(24, 6, 11);
    ProbeDataset ds = gen_probe(lib, 6, 13);
    for (int slot = 0; slot < 9; ++slot) {
        auto samples = eval_for_slot(ds, slot);
        CHECK(samples.size() == 12);  // 6 keys x {pos, neg}
        for (const CompositeSample* s : samples) CHECK(s->slot == slot);
    }
    CHECK_THROWS_AS(eval_for_slot(ds, 9), ConfigError);
}
