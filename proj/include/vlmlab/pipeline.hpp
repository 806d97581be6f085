#pragma once

#include "vlmlab/model.hpp"
#include "vlmlab/probe.hpp"

namespace vlmlab {

// Text vocab needed to caption every pattern in a library.
inline int text_vocab_for(const PatternLibrary& lib) {
    return tokens::kNumSpecial + lib.vocab_size;
}

// Builds the model input for a probe sample: two system tokens, the
// materialized patch grid, and the user span {question, caption, readout}.
MultimodalInput make_input(const PatternLibrary& lib, const CompositeSample& sample, int cell_res = 1);

inline int label_of(const CompositeSample& sample) { return sample.label_yes ? 1 : 0; }

// Materializes one split for the trainer/evaluators.
void make_examples(const ProbeDataset& ds, const std::vector<CompositeSample>& split,
                   std::vector<MultimodalInput>& inputs, std::vector<int>& labels);

inline bool predicts_yes(const ForwardTrace& trace) {
    return trace.logits[kLogitYes] > trace.logits[kLogitNo];
}

}  // namespace vlmlab
