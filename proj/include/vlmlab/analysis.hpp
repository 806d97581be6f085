#pragma once

#include <vector>

#include "vlmlab/model.hpp"
#include "vlmlab/probe.hpp"

namespace vlmlab {

// Region-occlusion importance over a composite. scores(r,c) is the yes-logit
// drop when region (r,c) is replaced by the background patch.
struct ImportanceMap {
    int rows = 0;
    int cols = 0;
    Mat scores;
    double reference_logit = 0.0;  // yes-logit on the unmasked input
    Vec background;
};

// Replaces every patch of region (r, c) with the background patch. The
// region_rows x region_cols grid must tile the side x side patch grid
// exactly; together the regions cover every patch exactly once.
Mat mask_region(const Mat& patch_grid, int side, int region_rows, int region_cols, int r, int c,
                const Vec& background);

// Masks one region at a time (regions must tile the patch grid exactly) and
// records logit_yes(original) - logit_yes(masked). Pre-softmax logits, so
// saturated probabilities cannot flatten the map.
ImportanceMap occlusion_importance(const Model& model, const MultimodalInput& input,
                                   int region_rows, int region_cols, const Vec& background);

// Default background: the zero patch (neutral input of the encoder's linear
// part).
ImportanceMap occlusion_importance(const Model& model, const MultimodalInput& input,
                                   int region_rows = kGridSide, int region_cols = kGridSide);

// Aggregation across samples: per-sample min-max normalization, then mean.
// Keeps any single large-logit sample from dominating the heatmap.
Mat aggregate_importance(const std::vector<ImportanceMap>& maps);

struct SimilarityRecord {
    int slot = 0;
    double score = 0.0;  // in [-1, 1]
};

// For each slot: paste each listed pattern onto a background-only grid at
// that slot, mean-pool the encoder's image embeddings, and take the cosine
// against the caption embedding; scores are averaged over patterns.
std::vector<SimilarityRecord> similarity_probe(const Model& model, const PatternLibrary& lib,
                                               const std::vector<int>& pattern_ids,
                                               int cell_res = 1);
std::vector<SimilarityRecord> similarity_probe(const Model& model, const PatternLibrary& lib);

// Per-image-token attention received from user-text queries, averaged over
// layers, heads, text queries and samples. System tokens precede the image
// span, so the causal mask pins their rows to zero over image columns; they
// are excluded rather than diluting the average.
struct AttentionFlowMap {
    std::vector<double> mean_received;  // length == image span
    double total_text_to_image = 0.0;   // summed mass before the final mean
    int text_query_count = 0;
    int sample_count = 0;
};

AttentionFlowMap attention_flow(const Model& model, const std::vector<MultimodalInput>& samples);

// Dispersion of the flow map across image tokens: stddev / mean.
double coefficient_of_variation(const std::vector<double>& values);

}  // namespace vlmlab
