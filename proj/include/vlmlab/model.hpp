#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vlmlab/autodiff.hpp"
#include "vlmlab/numeric.hpp"
#include "vlmlab/position.hpp"
#include "vlmlab/rope.hpp"

namespace vlmlab {

// Patch encoder variants. per_patch maps each patch independently (no
// positional information crosses patches), which makes position-invariance
// checks exact. mixing adds fixed 2-D sinusoidal offsets and one non-causal
// self-attention layer over the patches, emulating an encoder that mixes
// spatial context.
enum class EncoderKind {
    per_patch,
    mixing,
};

EncoderKind encoder_from_string(const std::string& name);
std::string to_string(EncoderKind kind);

struct ModelConfig {
    int embed_dim = 64;
    int head_dim = 16;
    int num_heads = 4;
    int num_layers = 2;
    int patch_dim = 16;
    int text_vocab_size = 68;
    int enc_hidden = 64;
    int mlp_hidden = 128;
    EncoderKind encoder = EncoderKind::per_patch;
    SchemeId scheme = SchemeId::sequential;
    double rope_base = 10000.0;
    uint64_t seed = 1;

    void validate() const;
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// Text-token protocol shared by the dataset pipeline and the model: four
// special tokens, then one caption token per library pattern.
namespace tokens {
constexpr int kSystem0 = 0;
constexpr int kSystem1 = 1;
constexpr int kQuestion = 2;
constexpr int kReadout = 3;
constexpr int kNumSpecial = 4;
constexpr int kSystemLen = 2;  // {kSystem0, kSystem1}
constexpr int kUserLen = 3;    // {kQuestion, caption, kReadout}

inline int caption_token(int pattern_id) { return kNumSpecial + pattern_id; }
}  // namespace tokens

// One forward-pass input: exactly one image span between system and user
// text, patches in raster order.
struct MultimodalInput {
    ModalityLayout layout;
    std::vector<int> system_tokens;
    Mat patch_grid;  // layout.image_len x patch_dim
    std::vector<int> user_tokens;

    void validate(const ModelConfig& cfg) const;
};

// Outputs of one forward pass. attention/scores/hidden are filled only when
// capture was requested; attention holds softmaxed rows (masked entries are
// exactly 0, every row sums to 1), scores the scaled pre-mask logits.
struct ForwardTrace {
    std::array<double, 2> logits{};  // [no, yes]
    PositionIds position_ids;
    std::vector<std::vector<Mat>> attention;  // [layer][head], n x n
    std::vector<std::vector<Mat>> scores;     // [layer][head], n x n
    std::vector<Mat> hidden;                  // [layer], n x embed_dim
};

constexpr int kLogitNo = 0;
constexpr int kLogitYes = 1;

struct Param {
    std::string name;
    Mat value;
};

// Tiny multimodal decoder: patch encoder + projector + text embedding table,
// then pre-norm transformer blocks whose attention rotates q/k to the
// position ids produced by the configured scheme, and a 2-way head read off
// the final user token. Parameters live in a flat named registry so the
// optimizer, checkpoints and finite-difference checks all address them the
// same way.
class Model {
  public:
    static Model init(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    const RopeParams& rope() const { return rope_; }

    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    int param_index(const std::string& name) const;

    // g(f_v(patches)): one embedding row per patch. With the per_patch
    // encoder, row t depends only on patch t.
    Mat encode_image(const Mat& patch_grid) const;

    Vec text_embedding(int token) const;

    ForwardTrace forward(const MultimodalInput& input, bool capture = false) const;

    // Mean cross-entropy over the batch plus exact reverse-mode gradients,
    // one matrix per registry entry. labels are 0 (no) / 1 (yes).
    double loss_and_grads(const std::vector<MultimodalInput>& inputs,
                          const std::vector<int>& labels,
                          std::vector<Mat>& grads) const;

    // Versioned binary checkpoint; round-trips bit-exactly.
    void save(const std::string& path) const;
    static Model load(const std::string& path);

  private:
    struct GraphOut {
        ad::Var logits;
        std::vector<std::vector<ad::Var>> attention;
        std::vector<std::vector<ad::Var>> scores;
        std::vector<ad::Var> hidden;
    };

    Model() = default;

    std::vector<ad::Var> make_param_leaves(ad::Tape& tape) const;
    ad::Var encode_graph(ad::Tape& tape, const std::vector<ad::Var>& p, ad::Var patches) const;
    GraphOut build_graph(ad::Tape& tape, const std::vector<ad::Var>& p,
                         const MultimodalInput& input, bool capture) const;

    ModelConfig cfg_;
    RopeParams rope_;
    std::vector<Param> params_;
};

// Fixed 2-D sinusoidal table for a side x side patch grid; dim % 4 == 0.
Mat sinusoidal_position_table(int side, int dim);

}  // namespace vlmlab
