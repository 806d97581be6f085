#pragma once

#include <functional>
#include <vector>

#include "vlmlab/numeric.hpp"
#include "vlmlab/rope.hpp"

namespace vlmlab {
namespace ad {

// Handle into a Tape. Valid only for the tape that produced it.
struct Var {
    int idx = -1;
};

// Reverse-mode tape over dense double matrices. Nodes are created in
// topological order by construction; backward() replays them in reverse.
// The op set is exactly what the model needs, each op carrying its own
// backward closure. A fresh tape is built per forward/batch and thrown away.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Mat value);

    const Mat& value(Var v) const { return nodes_[static_cast<size_t>(v.idx)].value; }
    const Mat& grad(Var v) const { return nodes_[static_cast<size_t>(v.idx)].grad; }

    Var matmul(Var a, Var b);
    // value = a * b^T (attention scores from row-stacked q and k).
    Var matmul_bt(Var a, Var b);
    Var add(Var a, Var b);
    // value = a + row broadcast over every row of a; row is 1 x cols.
    Var add_row_broadcast(Var a, Var row);
    // value = a + c for a constant (non-differentiated) matrix c.
    Var add_const(Var a, const Mat& c);
    Var scale(Var a, double s);
    Var tanh(Var a);
    // Per-row RMS normalization with learned gain (1 x cols):
    // y = x * gain / sqrt(mean(x^2) + eps).
    Var rmsnorm_rows(Var a, Var gain);
    // Rotates each row r of a (cols == params.head_dim) to position
    // positions[r]. Orthogonal per row, so backward rotates grads back.
    Var rope_rows(Var a, const RopeParams& params, std::vector<int> positions);
    // Row-wise softmax. With causal=true only columns <= row index
    // participate; masked entries are exactly 0 in the output.
    Var softmax_rows(Var scores, bool causal);
    // Gathers rows of a at the given indices (embedding lookup, readout).
    // Backward scatter-adds, so repeated indices accumulate.
    Var select_rows(Var a, std::vector<int> rows);
    Var concat_rows(const std::vector<Var>& parts);
    // logits: 1 x C. Returns 1x1 node holding -log softmax(logits)[label].
    Var cross_entropy(Var logits, int label);
    Var mean_scalars(const std::vector<Var>& scalars);

    // root must be 1x1. Zeroes nothing: grads are zero-initialized at node
    // creation, so call backward at most once per tape.
    void backward(Var root);

    size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void()> back;
    };

    std::vector<Node> nodes_;

    Var push(Mat value);
    Mat& grad_mut(Var v) { return nodes_[static_cast<size_t>(v.idx)].grad; }
};

}  // namespace ad
}  // namespace vlmlab
