#include "vlmlab/autodiff.hpp"

#include <cmath>

namespace vlmlab {
namespace ad {

namespace {

constexpr double kRmsNormEps = 1e-6;

void add_into(Mat& dst, const Mat& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

Var Tape::push(Mat value) {
    Node node;
    node.grad = Mat(value.rows, value.cols);
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Mat value) { return push(std::move(value)); }

Var Tape::matmul(Var a, Var b) {
    Var out = push(vlmlab::matmul(value(a), value(b)));
    const int ai = a.idx, bi = b.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, bi, oi]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        add_into(nodes_[static_cast<size_t>(ai)].grad, matmul_abt(g, nodes_[static_cast<size_t>(bi)].value));
        add_into(nodes_[static_cast<size_t>(bi)].grad, matmul_atb(nodes_[static_cast<size_t>(ai)].value, g));
    };
    return out;
}

Var Tape::matmul_bt(Var a, Var b) {
    Var out = push(vlmlab::matmul_abt(value(a), value(b)));
    const int ai = a.idx, bi = b.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, bi, oi]() {
        // C = A B^T  =>  dA = dC B, dB = dC^T A
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        add_into(nodes_[static_cast<size_t>(ai)].grad, vlmlab::matmul(g, nodes_[static_cast<size_t>(bi)].value));
        add_into(nodes_[static_cast<size_t>(bi)].grad, matmul_atb(g, nodes_[static_cast<size_t>(ai)].value));
    };
    return out;
}

Var Tape::add(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (!av.same_shape(bv)) throw ShapeError("tape add: shape mismatch");
    Mat c = av;
    add_into(c, bv);
    Var out = push(std::move(c));
    const int ai = a.idx, bi = b.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, bi, oi]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        add_into(nodes_[static_cast<size_t>(ai)].grad, g);
        add_into(nodes_[static_cast<size_t>(bi)].grad, g);
    };
    return out;
}

Var Tape::add_row_broadcast(Var a, Var row) {
    const Mat& av = value(a);
    const Mat& rv = value(row);
    if (rv.rows != 1 || rv.cols != av.cols)
        throw ShapeError("tape add_row_broadcast: row must be 1 x cols");
    Mat c = av;
    for (int r = 0; r < c.rows; ++r)
        for (int j = 0; j < c.cols; ++j) c.at(r, j) += rv.at(0, j);
    Var out = push(std::move(c));
    const int ai = a.idx, ri = row.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, ri, oi]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        add_into(nodes_[static_cast<size_t>(ai)].grad, g);
        Mat& rg = nodes_[static_cast<size_t>(ri)].grad;
        for (int r = 0; r < g.rows; ++r)
            for (int j = 0; j < g.cols; ++j) rg.at(0, j) += g.at(r, j);
    };
    return out;
}

Var Tape::add_const(Var a, const Mat& c) {
    const Mat& av = value(a);
    if (!av.same_shape(c)) throw ShapeError("tape add_const: shape mismatch");
    Mat out_val = av;
    add_into(out_val, c);
    Var out = push(std::move(out_val));
    const int ai = a.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, oi]() {
        add_into(nodes_[static_cast<size_t>(ai)].grad, nodes_[static_cast<size_t>(oi)].grad);
    };
    return out;
}

Var Tape::scale(Var a, double s) {
    Mat c = value(a);
    for (double& x : c.data) x *= s;
    Var out = push(std::move(c));
    const int ai = a.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, oi, s]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        Mat& ag = nodes_[static_cast<size_t>(ai)].grad;
        for (size_t i = 0; i < g.data.size(); ++i) ag.data[i] += s * g.data[i];
    };
    return out;
}

Var Tape::tanh(Var a) {
    Mat c = value(a);
    for (double& x : c.data) x = std::tanh(x);
    Var out = push(std::move(c));
    const int ai = a.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, oi]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        const Mat& y = nodes_[static_cast<size_t>(oi)].value;
        Mat& ag = nodes_[static_cast<size_t>(ai)].grad;
        for (size_t i = 0; i < g.data.size(); ++i)
            ag.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
    return out;
}

Var Tape::rmsnorm_rows(Var a, Var gain) {
    const Mat& av = value(a);
    const Mat& gv = value(gain);
    if (gv.rows != 1 || gv.cols != av.cols)
        throw ShapeError("tape rmsnorm_rows: gain must be 1 x cols");
    Mat c(av.rows, av.cols);
    for (int r = 0; r < av.rows; ++r) {
        double ms = 0.0;
        for (int j = 0; j < av.cols; ++j) ms += av.at(r, j) * av.at(r, j);
        const double rms = std::sqrt(ms / av.cols + kRmsNormEps);
        for (int j = 0; j < av.cols; ++j) c.at(r, j) = av.at(r, j) * gv.at(0, j) / rms;
    }
    Var out = push(std::move(c));
    const int ai = a.idx, gi = gain.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, gi, oi]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        const Mat& x = nodes_[static_cast<size_t>(ai)].value;
        const Mat& gn = nodes_[static_cast<size_t>(gi)].value;
        Mat& xg = nodes_[static_cast<size_t>(ai)].grad;
        Mat& gg = nodes_[static_cast<size_t>(gi)].grad;
        const int n = x.cols;
        for (int r = 0; r < x.rows; ++r) {
            double ms = 0.0;
            for (int j = 0; j < n; ++j) ms += x.at(r, j) * x.at(r, j);
            const double rms = std::sqrt(ms / n + kRmsNormEps);
            double proj = 0.0;  // sum_j dy_j * gain_j * x_j
            for (int j = 0; j < n; ++j) proj += g.at(r, j) * gn.at(0, j) * x.at(r, j);
            const double inv_rms = 1.0 / rms;
            const double inv_rms3 = inv_rms / (rms * rms);
            for (int j = 0; j < n; ++j) {
                xg.at(r, j) += g.at(r, j) * gn.at(0, j) * inv_rms - x.at(r, j) * proj * inv_rms3 / n;
                gg.at(0, j) += g.at(r, j) * x.at(r, j) * inv_rms;
            }
        }
    };
    return out;
}

Var Tape::rope_rows(Var a, const RopeParams& params, std::vector<int> positions) {
    const Mat& av = value(a);
    if (av.cols != params.head_dim)
        throw ShapeError("tape rope_rows: cols != head_dim");
    if (static_cast<int>(positions.size()) != av.rows)
        throw ShapeError("tape rope_rows: positions length != rows");
    Mat c = av;
    for (int r = 0; r < c.rows; ++r)
        rotate_inplace(params, static_cast<double>(positions[static_cast<size_t>(r)]), c.row_ptr(r));
    Var out = push(std::move(c));
    const int ai = a.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, oi, params, positions = std::move(positions)]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        Mat gback = g;
        for (int r = 0; r < gback.rows; ++r)
            rotate_inplace(params, -static_cast<double>(positions[static_cast<size_t>(r)]), gback.row_ptr(r));
        add_into(nodes_[static_cast<size_t>(ai)].grad, gback);
    };
    return out;
}

Var Tape::softmax_rows(Var scores, bool causal) {
    const Mat& sv = value(scores);
    Mat c(sv.rows, sv.cols);
    for (int r = 0; r < sv.rows; ++r) {
        const int allowed = causal ? std::min(r + 1, sv.cols) : sv.cols;
        double mx = sv.at(r, 0);
        for (int j = 1; j < allowed; ++j) mx = std::max(mx, sv.at(r, j));
        double sum = 0.0;
        for (int j = 0; j < allowed; ++j) {
            c.at(r, j) = std::exp(sv.at(r, j) - mx);
            sum += c.at(r, j);
        }
        for (int j = 0; j < allowed; ++j) c.at(r, j) /= sum;
    }
    Var out = push(std::move(c));
    const int si = scores.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, si, oi, causal]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        const Mat& y = nodes_[static_cast<size_t>(oi)].value;
        Mat& sg = nodes_[static_cast<size_t>(si)].grad;
        for (int r = 0; r < y.rows; ++r) {
            const int allowed = causal ? std::min(r + 1, y.cols) : y.cols;
            double acc = 0.0;
            for (int j = 0; j < allowed; ++j) acc += g.at(r, j) * y.at(r, j);
            for (int j = 0; j < allowed; ++j)
                sg.at(r, j) += y.at(r, j) * (g.at(r, j) - acc);
        }
    };
    return out;
}

Var Tape::select_rows(Var a, std::vector<int> rows) {
    const Mat& av = value(a);
    Mat c(static_cast<int>(rows.size()), av.cols);
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= av.rows)
            throw ShapeError("tape select_rows: index out of range");
        c.set_row(static_cast<int>(r), av.row(rows[r]));
    }
    Var out = push(std::move(c));
    const int ai = a.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, ai, oi, rows = std::move(rows)]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        Mat& ag = nodes_[static_cast<size_t>(ai)].grad;
        for (size_t r = 0; r < rows.size(); ++r)
            for (int j = 0; j < g.cols; ++j)
                ag.at(rows[r], j) += g.at(static_cast<int>(r), j);
    };
    return out;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("tape concat_rows: no parts");
    int total_rows = 0;
    const int cols = value(parts[0]).cols;
    for (Var p : parts) {
        if (value(p).cols != cols) throw ShapeError("tape concat_rows: column mismatch");
        total_rows += value(p).rows;
    }
    Mat c(total_rows, cols);
    int r0 = 0;
    for (Var p : parts) {
        const Mat& pv = value(p);
        for (int r = 0; r < pv.rows; ++r) c.set_row(r0 + r, pv.row(r));
        r0 += pv.rows;
    }
    Var out = push(std::move(c));
    std::vector<int> part_idx;
    part_idx.reserve(parts.size());
    for (Var p : parts) part_idx.push_back(p.idx);
    const int oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, oi, part_idx = std::move(part_idx)]() {
        const Mat& g = nodes_[static_cast<size_t>(oi)].grad;
        int r0 = 0;
        for (int pi : part_idx) {
            Mat& pg = nodes_[static_cast<size_t>(pi)].grad;
            for (int r = 0; r < pg.rows; ++r)
                for (int j = 0; j < pg.cols; ++j) pg.at(r, j) += g.at(r0 + r, j);
            r0 += pg.rows;
        }
    };
    return out;
}

Var Tape::cross_entropy(Var logits, int label) {
    const Mat& lv = value(logits);
    if (lv.rows != 1) throw ShapeError("tape cross_entropy: logits must be 1 x C");
    if (label < 0 || label >= lv.cols) throw ShapeError("tape cross_entropy: label out of range");
    double mx = lv.at(0, 0);
    for (int j = 1; j < lv.cols; ++j) mx = std::max(mx, lv.at(0, j));
    double sum = 0.0;
    for (int j = 0; j < lv.cols; ++j) sum += std::exp(lv.at(0, j) - mx);
    const double logsumexp = mx + std::log(sum);
    Mat c(1, 1);
    c.at(0, 0) = logsumexp - lv.at(0, label);
    Var out = push(std::move(c));
    const int li = logits.idx, oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, li, oi, label]() {
        const double g = nodes_[static_cast<size_t>(oi)].grad.at(0, 0);
        const Mat& lvv = nodes_[static_cast<size_t>(li)].value;
        Mat& lg = nodes_[static_cast<size_t>(li)].grad;
        double mx2 = lvv.at(0, 0);
        for (int j = 1; j < lvv.cols; ++j) mx2 = std::max(mx2, lvv.at(0, j));
        double sum2 = 0.0;
        for (int j = 0; j < lvv.cols; ++j) sum2 += std::exp(lvv.at(0, j) - mx2);
        for (int j = 0; j < lvv.cols; ++j) {
            const double p = std::exp(lvv.at(0, j) - mx2) / sum2;
            lg.at(0, j) += g * (p - (j == label ? 1.0 : 0.0));
        }
    };
    return out;
}

Var Tape::mean_scalars(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw ShapeError("tape mean_scalars: empty");
    Mat c(1, 1);
    for (Var s : scalars) {
        if (value(s).rows != 1 || value(s).cols != 1)
            throw ShapeError("tape mean_scalars: inputs must be 1x1");
        c.at(0, 0) += value(s).at(0, 0);
    }
    c.at(0, 0) /= static_cast<double>(scalars.size());
    Var out = push(std::move(c));
    std::vector<int> idx;
    idx.reserve(scalars.size());
    for (Var s : scalars) idx.push_back(s.idx);
    const int oi = out.idx;
    nodes_[static_cast<size_t>(oi)].back = [this, oi, idx = std::move(idx)]() {
        const double g = nodes_[static_cast<size_t>(oi)].grad.at(0, 0) / static_cast<double>(idx.size());
        for (int i : idx) nodes_[static_cast<size_t>(i)].grad.at(0, 0) += g;
    };
    return out;
}

void Tape::backward(Var root) {
    Mat& g = grad_mut(root);
    if (g.rows != 1 || g.cols != 1) throw ShapeError("tape backward: root must be 1x1");
    g.at(0, 0) = 1.0;
    for (size_t i = nodes_.size(); i > 0; --i) {
        auto& back = nodes_[i - 1].back;
        if (back) back();
    }
}

}  // namespace ad
}  // namespace vlmlab
