#include "vlmlab/model.hpp"

#include <cmath>
#include <cstring>

#include "json.hpp"
#include "vlmlab/io.hpp"
#include "vlmlab/rng.hpp"

namespace vlmlab {

using nlohmann::json;

EncoderKind encoder_from_string(const std::string& name) {
    if (name == "per_patch") return EncoderKind::per_patch;
    if (name == "mixing") return EncoderKind::mixing;
    throw ConfigError("unknown encoder kind \"" + name + "\" (expected \"per_patch\" or \"mixing\")");
}

std::string to_string(EncoderKind kind) {
    return kind == EncoderKind::per_patch ? "per_patch" : "mixing";
}

void ModelConfig::validate() const {
    if (embed_dim < 1 || head_dim < 1 || num_heads < 1 || num_layers < 1 || patch_dim < 1 ||
        enc_hidden < 1 || mlp_hidden < 1)
        throw ConfigError("model config: all dimensions must be >= 1");
    if (embed_dim != num_heads * head_dim)
        throw ConfigError("model config: embed_dim (" + std::to_string(embed_dim) +
                          ") != num_heads * head_dim (" + std::to_string(num_heads) + " * " +
                          std::to_string(head_dim) + ")");
    if (head_dim % 2 != 0)
        throw ConfigError("model config: head_dim must be even for rotary embedding");
    if (text_vocab_size <= tokens::kNumSpecial)
        throw ConfigError("model config: text_vocab_size must exceed the special-token count");
    if (!(rope_base > 0.0))
        throw ConfigError("model config: rope_base must be positive");
    if (encoder == EncoderKind::mixing && embed_dim % 4 != 0)
        throw ConfigError("model config: mixing encoder needs embed_dim divisible by 4");
}

std::string ModelConfig::to_json() const {
    json j;
    j["embed_dim"] = embed_dim;
    j["head_dim"] = head_dim;
    j["num_heads"] = num_heads;
    j["num_layers"] = num_layers;
    j["patch_dim"] = patch_dim;
    j["text_vocab_size"] = text_vocab_size;
    j["enc_hidden"] = enc_hidden;
    j["mlp_hidden"] = mlp_hidden;
    j["encoder"] = to_string(encoder);
    j["scheme"] = vlmlab::to_string(scheme);
    j["rope_base"] = rope_base;
    j["seed"] = seed;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: bad json: ") + e.what());
    }
    ModelConfig cfg;
    try {
        cfg.embed_dim = j.at("embed_dim").get<int>();
        cfg.head_dim = j.at("head_dim").get<int>();
        cfg.num_heads = j.at("num_heads").get<int>();
        cfg.num_layers = j.at("num_layers").get<int>();
        cfg.patch_dim = j.at("patch_dim").get<int>();
        cfg.text_vocab_size = j.at("text_vocab_size").get<int>();
        cfg.enc_hidden = j.at("enc_hidden").get<int>();
        cfg.mlp_hidden = j.at("mlp_hidden").get<int>();
        cfg.encoder = encoder_from_string(j.at("encoder").get<std::string>());
        cfg.scheme = scheme_from_string(j.at("scheme").get<std::string>());
        cfg.rope_base = j.at("rope_base").get<double>();
        cfg.seed = j.at("seed").get<uint64_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: missing or invalid field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void MultimodalInput::validate(const ModelConfig& cfg) const {
    layout.validate();
    if (static_cast<int>(system_tokens.size()) != layout.system_len)
        throw ShapeError("input: system token count != layout.system_len");
    if (static_cast<int>(user_tokens.size()) != layout.user_len)
        throw ShapeError("input: user token count != layout.user_len");
    if (patch_grid.rows != layout.image_len)
        throw ShapeError("input: patch count != layout.image_len");
    if (patch_grid.cols != cfg.patch_dim)
        throw ShapeError("input: patch dim " + std::to_string(patch_grid.cols) + " != config patch_dim " +
                         std::to_string(cfg.patch_dim));
    if (!all_finite(patch_grid)) throw DegenerateInputError("input: non-finite patch values");
    for (int t : system_tokens)
        if (t < 0 || t >= cfg.text_vocab_size) throw ShapeError("input: system token out of vocab range");
    for (int t : user_tokens)
        if (t < 0 || t >= cfg.text_vocab_size) throw ShapeError("input: user token out of vocab range");
}

Mat sinusoidal_position_table(int side, int dim) {
    if (dim % 4 != 0) throw ShapeError("sinusoidal_position_table: dim must be divisible by 4");
    Mat pe(side * side, dim);
    const int half = dim / 2;     // first half row, second half col
    const int pairs = half / 2;   // (sin, cos) pairs per half
    for (int t = 0; t < side * side; ++t) {
        const int row = t / side;
        const int col = t % side;
        for (int m = 0; m < pairs; ++m) {
            const double freq = std::pow(10000.0, -2.0 * m / half);
            pe.at(t, 2 * m) = std::sin(row * freq);
            pe.at(t, 2 * m + 1) = std::cos(row * freq);
            pe.at(t, half + 2 * m) = std::sin(col * freq);
            pe.at(t, half + 2 * m + 1) = std::cos(col * freq);
        }
    }
    return pe;
}

namespace {

Mat uniform_mat(Rng& rng, int rows, int cols, double scale) {
    Mat m(rows, cols);
    for (double& x : m.data) x = rng.uniform(-scale, scale);
    return m;
}

Mat ones_row(int cols) {
    Mat m(1, cols);
    for (double& x : m.data) x = 1.0;
    return m;
}

}  // namespace

Model Model::init(const ModelConfig& cfg) {
    cfg.validate();
    Model model;
    model.cfg_ = cfg;
    model.rope_ = make_thetas(cfg.head_dim, cfg.rope_base);

    Rng rng(cfg.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
    auto& p = model.params_;
    auto weight = [&](const std::string& name, int r, int c) {
        p.push_back({name, uniform_mat(rng, r, c, scale)});
    };
    auto zeros_bias = [&](const std::string& name, int c) { p.push_back({name, Mat(1, c)}); };
    auto gain = [&](const std::string& name, int c) { p.push_back({name, ones_row(c)}); };

    weight("text_embed", cfg.text_vocab_size, cfg.embed_dim);
    weight("enc.w1", cfg.patch_dim, cfg.enc_hidden);
    zeros_bias("enc.b1", cfg.enc_hidden);
    weight("enc.w2", cfg.enc_hidden, cfg.embed_dim);
    zeros_bias("enc.b2", cfg.embed_dim);
    weight("proj.w", cfg.embed_dim, cfg.embed_dim);
    zeros_bias("proj.b", cfg.embed_dim);
    if (cfg.encoder == EncoderKind::mixing) {
        weight("mix.wq", cfg.embed_dim, cfg.embed_dim);
        weight("mix.wk", cfg.embed_dim, cfg.embed_dim);
        weight("mix.wv", cfg.embed_dim, cfg.embed_dim);
        weight("mix.wo", cfg.embed_dim, cfg.embed_dim);
    }
    for (int l = 0; l < cfg.num_layers; ++l) {
        const std::string lp = "layer" + std::to_string(l) + ".";
        gain(lp + "attn_norm", cfg.embed_dim);
        for (int h = 0; h < cfg.num_heads; ++h) {
            const std::string hp = lp + "h" + std::to_string(h) + ".";
            weight(hp + "wq", cfg.embed_dim, cfg.head_dim);
            weight(hp + "wk", cfg.embed_dim, cfg.head_dim);
            weight(hp + "wv", cfg.embed_dim, cfg.head_dim);
            weight(hp + "wo", cfg.head_dim, cfg.embed_dim);
        }
        gain(lp + "mlp_norm", cfg.embed_dim);
        weight(lp + "mlp.w_in", cfg.embed_dim, cfg.mlp_hidden);
        zeros_bias(lp + "mlp.b_in", cfg.mlp_hidden);
        weight(lp + "mlp.w_out", cfg.mlp_hidden, cfg.embed_dim);
        zeros_bias(lp + "mlp.b_out", cfg.embed_dim);
    }
    gain("final_norm", cfg.embed_dim);
    weight("head.w", cfg.embed_dim, 2);
    zeros_bias("head.b", 2);
    return model;
}

int Model::param_index(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return static_cast<int>(i);
    throw ConfigError("unknown parameter name: " + name);
}

std::vector<ad::Var> Model::make_param_leaves(ad::Tape& tape) const {
    std::vector<ad::Var> vars;
    vars.reserve(params_.size());
    for (const auto& prm : params_) vars.push_back(tape.leaf(prm.value));
    return vars;
}

ad::Var Model::encode_graph(ad::Tape& tape, const std::vector<ad::Var>& p, ad::Var patches) const {
    auto idx = [this](const char* name) { return static_cast<size_t>(param_index(name)); };
    // f_v: two-layer per-patch perceptron
    ad::Var h = tape.tanh(tape.add_row_broadcast(tape.matmul(patches, p[idx("enc.w1")]), p[idx("enc.b1")]));
    ad::Var feat = tape.add_row_broadcast(tape.matmul(h, p[idx("enc.w2")]), p[idx("enc.b2")]);
    if (cfg_.encoder == EncoderKind::mixing) {
        const int j = tape.value(feat).rows;
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(j))));
        if (side * side != j)
            throw ConfigError("mixing encoder: patch count " + std::to_string(j) + " is not a square grid");
        feat = tape.add_const(feat, sinusoidal_position_table(side, cfg_.embed_dim));
        ad::Var q = tape.matmul(feat, p[idx("mix.wq")]);
        ad::Var k = tape.matmul(feat, p[idx("mix.wk")]);
        ad::Var v = tape.matmul(feat, p[idx("mix.wv")]);
        ad::Var attn = tape.softmax_rows(
            tape.scale(tape.matmul_bt(q, k), 1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim))),
            /*causal=*/false);
        feat = tape.add(feat, tape.matmul(tape.matmul(attn, v), p[idx("mix.wo")]));
    }
    // projector g
    return tape.add_row_broadcast(tape.matmul(feat, p[idx("proj.w")]), p[idx("proj.b")]);
}

Model::GraphOut Model::build_graph(ad::Tape& tape, const std::vector<ad::Var>& p,
                                   const MultimodalInput& input, bool capture) const {
    input.validate(cfg_);
    auto idx = [this](const std::string& name) { return static_cast<size_t>(param_index(name)); };

    ad::Var patches = tape.leaf(input.patch_grid);
    ad::Var image_rows = encode_graph(tape, p, patches);

    std::vector<ad::Var> parts;
    if (!input.system_tokens.empty())
        parts.push_back(tape.select_rows(p[idx("text_embed")], input.system_tokens));
    parts.push_back(image_rows);
    parts.push_back(tape.select_rows(p[idx("text_embed")], input.user_tokens));
    ad::Var x = parts.size() == 1 ? parts[0] : tape.concat_rows(parts);

    const PositionIds ids = scheme_for(cfg_.scheme)(input.layout);
    const int n = input.layout.total();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg_.head_dim));

    GraphOut out;
    out.attention.resize(static_cast<size_t>(cfg_.num_layers));
    out.scores.resize(static_cast<size_t>(cfg_.num_layers));

    for (int l = 0; l < cfg_.num_layers; ++l) {
        const std::string lp = "layer" + std::to_string(l) + ".";
        ad::Var xn = tape.rmsnorm_rows(x, p[idx(lp + "attn_norm")]);
        ad::Var attn_sum{-1};
        for (int h = 0; h < cfg_.num_heads; ++h) {
            const std::string hp = lp + "h" + std::to_string(h) + ".";
            ad::Var q = tape.rope_rows(tape.matmul(xn, p[idx(hp + "wq")]), rope_, ids);
            ad::Var k = tape.rope_rows(tape.matmul(xn, p[idx(hp + "wk")]), rope_, ids);
            ad::Var v = tape.matmul(xn, p[idx(hp + "wv")]);
            ad::Var scores = tape.scale(tape.matmul_bt(q, k), inv_sqrt_d);
            ad::Var attn = tape.softmax_rows(scores, /*causal=*/true);
            if (capture) {
                out.scores[static_cast<size_t>(l)].push_back(scores);
                out.attention[static_cast<size_t>(l)].push_back(attn);
            }
            ad::Var head_out = tape.matmul(tape.matmul(attn, v), p[idx(hp + "wo")]);
            attn_sum = (h == 0) ? head_out : tape.add(attn_sum, head_out);
        }
        x = tape.add(x, attn_sum);
        ad::Var xm = tape.rmsnorm_rows(x, p[idx(lp + "mlp_norm")]);
        ad::Var mid = tape.tanh(
            tape.add_row_broadcast(tape.matmul(xm, p[idx(lp + "mlp.w_in")]), p[idx(lp + "mlp.b_in")]));
        ad::Var mlp_out =
            tape.add_row_broadcast(tape.matmul(mid, p[idx(lp + "mlp.w_out")]), p[idx(lp + "mlp.b_out")]);
        x = tape.add(x, mlp_out);
        if (capture) out.hidden.push_back(x);
    }

    ad::Var xf = tape.rmsnorm_rows(x, p[idx("final_norm")]);
    ad::Var last = tape.select_rows(xf, {n - 1});
    out.logits = tape.add_row_broadcast(tape.matmul(last, p[idx("head.w")]), p[idx("head.b")]);
    return out;
}

Mat Model::encode_image(const Mat& patch_grid) const {
    if (patch_grid.cols != cfg_.patch_dim)
        throw ShapeError("encode_image: patch dim mismatch");
    if (patch_grid.rows < 1) throw ShapeError("encode_image: no patches");
    if (!all_finite(patch_grid)) throw DegenerateInputError("encode_image: non-finite patches");
    ad::Tape tape;
    std::vector<ad::Var> p = make_param_leaves(tape);
    ad::Var patches = tape.leaf(patch_grid);
    return tape.value(encode_graph(tape, p, patches));
}

Vec Model::text_embedding(int token) const {
    const Mat& e = params_[static_cast<size_t>(param_index("text_embed"))].value;
    if (token < 0 || token >= e.rows) throw ShapeError("text_embedding: token out of range");
    return e.row(token);
}

ForwardTrace Model::forward(const MultimodalInput& input, bool capture) const {
    ad::Tape tape;
    std::vector<ad::Var> p = make_param_leaves(tape);
    GraphOut g = build_graph(tape, p, input, capture);
    ForwardTrace trace;
    trace.logits[0] = tape.value(g.logits).at(0, 0);
    trace.logits[1] = tape.value(g.logits).at(0, 1);
    trace.position_ids = scheme_for(cfg_.scheme)(input.layout);
    if (capture) {
        for (auto& layer : g.attention) {
            std::vector<Mat> mats;
            for (ad::Var v : layer) mats.push_back(tape.value(v));
            trace.attention.push_back(std::move(mats));
        }
        for (auto& layer : g.scores) {
            std::vector<Mat> mats;
            for (ad::Var v : layer) mats.push_back(tape.value(v));
            trace.scores.push_back(std::move(mats));
        }
        for (ad::Var v : g.hidden) trace.hidden.push_back(tape.value(v));
    }
    return trace;
}

double Model::loss_and_grads(const std::vector<MultimodalInput>& inputs,
                             const std::vector<int>& labels, std::vector<Mat>& grads) const {
    if (inputs.empty()) throw ShapeError("loss_and_grads: empty batch");
    if (inputs.size() != labels.size())
        throw ShapeError("loss_and_grads: inputs and labels differ in length");
    for (int lbl : labels)
        if (lbl != 0 && lbl != 1) throw ShapeError("loss_and_grads: labels must be 0 or 1");

    ad::Tape tape;
    std::vector<ad::Var> p = make_param_leaves(tape);
    std::vector<ad::Var> losses;
    losses.reserve(inputs.size());
    for (size_t i = 0; i < inputs.size(); ++i) {
        GraphOut g = build_graph(tape, p, inputs[i], /*capture=*/false);
        losses.push_back(tape.cross_entropy(g.logits, labels[i]));
    }
    ad::Var loss = tape.mean_scalars(losses);
    tape.backward(loss);

    grads.clear();
    grads.reserve(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) grads.push_back(tape.grad(p[i]));
    return tape.value(loss).at(0, 0);
}

namespace {
constexpr char kCheckpointMagic[9] = "VLMLCKP1";
constexpr uint32_t kCheckpointVersion = 1;
}  // namespace

void Model::save(const std::string& path) const {
    std::string out;
    out.append(kCheckpointMagic, 8);
    append_u32(out, kCheckpointVersion);
    const std::string cfg_json = cfg_.to_json();
    append_u64(out, cfg_json.size());
    out.append(cfg_json);
    append_u64(out, params_.size());
    for (const auto& prm : params_) {
        append_u64(out, prm.name.size());
        out.append(prm.name);
        append_u32(out, static_cast<uint32_t>(prm.value.rows));
        append_u32(out, static_cast<uint32_t>(prm.value.cols));
        for (double x : prm.value.data) append_f64(out, x);
    }
    append_u64(out, fnv1a64(out));
    write_file(path, out);
}

Model Model::load(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 8 + 4 + 8) throw FormatError("checkpoint: file too short");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic");
    const char* p = bytes.data() + bytes.size() - 8;
    const char* end = bytes.data() + bytes.size();
    const uint64_t stored_sum = read_u64(p, end);
    if (fnv1a64(bytes.data(), bytes.size() - 8) != stored_sum)
        throw FormatError("checkpoint: checksum mismatch (corrupt file)");

    p = bytes.data() + 8;
    end = bytes.data() + bytes.size() - 8;
    const uint32_t version = read_u32(p, end);
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const uint64_t cfg_len = read_u64(p, end);
    const std::string cfg_json = read_bytes(p, end, cfg_len);

    Model model = Model::init(ModelConfig::from_json(cfg_json));
    const uint64_t nparams = read_u64(p, end);
    if (nparams != model.params_.size())
        throw FormatError("checkpoint: parameter count mismatch");
    for (auto& prm : model.params_) {
        const uint64_t name_len = read_u64(p, end);
        const std::string name = read_bytes(p, end, name_len);
        if (name != prm.name) throw FormatError("checkpoint: unexpected parameter " + name);
        const uint32_t rows = read_u32(p, end);
        const uint32_t cols = read_u32(p, end);
        if (static_cast<int>(rows) != prm.value.rows || static_cast<int>(cols) != prm.value.cols)
            throw FormatError("checkpoint: shape mismatch for " + name);
        for (double& x : prm.value.data) x = read_f64(p, end);
    }
    if (p != end) throw FormatError("checkpoint: trailing bytes");
    return model;
}

}  // namespace vlmlab
