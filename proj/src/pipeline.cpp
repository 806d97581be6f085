#include "vlmlab/pipeline.hpp"

namespace vlmlab {

MultimodalInput make_input(const PatternLibrary& lib, const CompositeSample& sample, int cell_res) {
    MultimodalInput input;
    input.patch_grid = sample_patch_grid(lib, sample, cell_res);
    input.layout.system_len = tokens::kSystemLen;
    input.layout.image_len = input.patch_grid.rows;
    input.layout.user_len = tokens::kUserLen;
    input.system_tokens = {tokens::kSystem0, tokens::kSystem1};
    input.user_tokens = {tokens::kQuestion, tokens::caption_token(sample.caption_id), tokens::kReadout};
    return input;
}

void make_examples(const ProbeDataset& ds, const std::vector<CompositeSample>& split,
                   std::vector<MultimodalInput>& inputs, std::vector<int>& labels) {
    inputs.clear();
    labels.clear();
    inputs.reserve(split.size());
    labels.reserve(split.size());
    for (const auto& s : split) {
        inputs.push_back(make_input(ds.lib, s, ds.manifest.cell_res));
        labels.push_back(label_of(s));
    }
}

}  // namespace vlmlab
