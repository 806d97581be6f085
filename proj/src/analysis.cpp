#include "vlmlab/analysis.hpp"

#include <cmath>

namespace vlmlab {

namespace {

int square_side(int image_len, const char* what) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(image_len))));
    if (side * side != image_len)
        throw ConfigError(std::string(what) + ": image span " + std::to_string(image_len) +
                          " is not a square patch grid");
    return side;
}

}  // namespace

Mat mask_region(const Mat& patch_grid, int side, int region_rows, int region_cols, int r, int c,
                const Vec& background) {
    if (region_rows < 1 || region_cols < 1)
        throw ConfigError("occlusion: region grid must be at least 1x1");
    if (patch_grid.rows != side * side)
        throw ShapeError("occlusion: patch grid is not side*side rows");
    if (side % region_rows != 0 || side % region_cols != 0)
        throw ConfigError("occlusion: " + std::to_string(region_rows) + "x" +
                          std::to_string(region_cols) + " regions do not tile a " +
                          std::to_string(side) + "x" + std::to_string(side) + " patch grid");
    if (r < 0 || r >= region_rows || c < 0 || c >= region_cols)
        throw ConfigError("occlusion: region index out of range");
    if (static_cast<int>(background.size()) != patch_grid.cols)
        throw ShapeError("occlusion: background patch has wrong dimension");
    const int rh = side / region_rows;
    const int rw = side / region_cols;
    Mat masked = patch_grid;
    for (int pr = r * rh; pr < (r + 1) * rh; ++pr)
        for (int pc = c * rw; pc < (c + 1) * rw; ++pc)
            masked.set_row(pr * side + pc, background);
    return masked;
}

ImportanceMap occlusion_importance(const Model& model, const MultimodalInput& input,
                                   int region_rows, int region_cols, const Vec& background) {
    if (static_cast<int>(background.size()) != model.config().patch_dim)
        throw ShapeError("occlusion: background patch has wrong dimension");
    if (!all_finite(background)) throw DegenerateInputError("occlusion: non-finite background");
    const int side = square_side(input.layout.image_len, "occlusion");

    ImportanceMap map;
    map.rows = region_rows;
    map.cols = region_cols;
    map.scores = Mat(region_rows, region_cols);
    map.background = background;
    map.reference_logit = model.forward(input).logits[kLogitYes];

    for (int r = 0; r < region_rows; ++r) {
        for (int c = 0; c < region_cols; ++c) {
            MultimodalInput masked = input;
            masked.patch_grid = mask_region(input.patch_grid, side, region_rows, region_cols, r, c, background);
            const double masked_logit = model.forward(masked).logits[kLogitYes];
            map.scores.at(r, c) = map.reference_logit - masked_logit;
        }
    }
    return map;
}

ImportanceMap occlusion_importance(const Model& model, const MultimodalInput& input,
                                   int region_rows, int region_cols) {
    return occlusion_importance(model, input, region_rows, region_cols,
                                Vec(static_cast<size_t>(model.config().patch_dim), 0.0));
}

Mat aggregate_importance(const std::vector<ImportanceMap>& maps) {
    if (maps.empty()) throw ShapeError("aggregate_importance: no maps");
    const int rows = maps[0].rows;
    const int cols = maps[0].cols;
    Mat acc(rows, cols);
    for (const auto& m : maps) {
        if (m.rows != rows || m.cols != cols)
            throw ShapeError("aggregate_importance: mixed region grids");
        double lo = m.scores.data[0], hi = m.scores.data[0];
        for (double x : m.scores.data) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        const double span = hi - lo;
        for (size_t i = 0; i < acc.data.size(); ++i)
            acc.data[i] += span > 0.0 ? (m.scores.data[i] - lo) / span : 0.0;
    }
    for (double& x : acc.data) x /= static_cast<double>(maps.size());
    return acc;
}

std::vector<SimilarityRecord> similarity_probe(const Model& model, const PatternLibrary& lib,
                                               const std::vector<int>& pattern_ids, int cell_res) {
    if (lib.patch_dim != model.config().patch_dim)
        throw ConfigError("similarity_probe: library patch_dim != model patch_dim");
    if (pattern_ids.empty()) throw ConfigError("similarity_probe: no pattern ids given");
    for (int id : pattern_ids)
        if (id < 0 || id >= lib.vocab_size)
            throw ConfigError("similarity_probe: pattern id out of range");
    if (cell_res < 1) throw ConfigError("similarity_probe: cell_res must be >= 1");

    const int side = kGridSide * cell_res;
    const Vec background(static_cast<size_t>(lib.patch_dim), 0.0);

    std::vector<SimilarityRecord> records;
    records.reserve(kGridSlots);
    for (int slot = 0; slot < kGridSlots; ++slot) {
        double sum = 0.0;
        for (int id : pattern_ids) {
            Mat grid(side * side, lib.patch_dim);
            for (int pr = 0; pr < side; ++pr)
                for (int pc = 0; pc < side; ++pc) {
                    const int cell = (pr / cell_res) * kGridSide + (pc / cell_res);
                    grid.set_row(pr * side + pc, cell == slot ? lib.pattern(id) : background);
                }
            const Mat embeds = model.encode_image(grid);
            Vec pooled(static_cast<size_t>(embeds.cols), 0.0);
            for (int r = 0; r < embeds.rows; ++r)
                for (int c = 0; c < embeds.cols; ++c) pooled[static_cast<size_t>(c)] += embeds.at(r, c);
            for (double& x : pooled) x /= static_cast<double>(embeds.rows);
            sum += cosine(pooled, model.text_embedding(tokens::caption_token(id)));
        }
        records.push_back({slot, sum / static_cast<double>(pattern_ids.size())});
    }
    return records;
}

std::vector<SimilarityRecord> similarity_probe(const Model& model, const PatternLibrary& lib) {
    std::vector<int> all(static_cast<size_t>(lib.vocab_size));
    for (int i = 0; i < lib.vocab_size; ++i) all[static_cast<size_t>(i)] = i;
    return similarity_probe(model, lib, all, 1);
}

AttentionFlowMap attention_flow(const Model& model, const std::vector<MultimodalInput>& samples) {
    if (samples.empty()) throw ConfigError("attention_flow: no samples");
    const ModalityLayout layout = samples[0].layout;
    for (const auto& s : samples)
        if (s.layout.system_len != layout.system_len || s.layout.image_len != layout.image_len ||
            s.layout.user_len != layout.user_len)
            throw ConfigError("attention_flow: samples must share one layout");

    const int i = layout.system_len;
    const int j = layout.image_len;
    const int k = layout.user_len;

    AttentionFlowMap flow;
    flow.mean_received.assign(static_cast<size_t>(j), 0.0);
    flow.sample_count = static_cast<int>(samples.size());

    int per_sample_queries = 0;
    for (const auto& sample : samples) {
        const ForwardTrace trace = model.forward(sample, /*capture=*/true);
        if (trace.attention.empty())
            throw ConfigError("attention_flow: forward trace has no attention capture");
        per_sample_queries = 0;
        for (const auto& layer : trace.attention) {
            for (const Mat& attn : layer) {
                for (int u = 0; u < k; ++u) {
                    const int qrow = i + j + u;
                    for (int t = 0; t < j; ++t) {
                        const double w = attn.at(qrow, i + t);
                        flow.mean_received[static_cast<size_t>(t)] += w;
                        flow.total_text_to_image += w;
                    }
                    ++per_sample_queries;
                }
            }
        }
    }
    flow.text_query_count = per_sample_queries * flow.sample_count;
    for (double& x : flow.mean_received) x /= static_cast<double>(flow.text_query_count);
    return flow;
}

double coefficient_of_variation(const std::vector<double>& values) {
    if (values.empty()) throw ShapeError("coefficient_of_variation: empty");
    const double m = mean(values);
    if (m == 0.0) throw DegenerateInputError("coefficient_of_variation: zero mean");
    return std::sqrt(variance(values)) / m;
}

}  // namespace vlmlab
