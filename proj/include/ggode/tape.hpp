#pragma once

#include <functional>
#include <vector>

#include "ggode/tensor.hpp"

namespace ggode {

class Tape;

// Handle to a node on a tape. Cheap to copy; only valid together with
// the tape that produced it.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff tape. Operations record their inputs on the
// forward pass; backward() replays the tape in reverse and accumulates
// gradients into every node that requires them. Values are immutable
// once recorded; grad buffers are the only mutable state. A tape is
// single-writer and not thread-safe; use one tape per concurrent unit
// of work.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // ---- node creation ----
    Var leaf(Tensor value, bool requires_grad);
    Var constant(Tensor value) { return leaf(std::move(value), false); }
    Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

    // ---- elementwise / scalar ----
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);             // elementwise, same shape
    Var div(Var a, Var b);             // elementwise, same shape
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    Var tanh_(Var a);
    Var softplus_(Var a);              // stable: max(w,0) + log1p(exp(-|w|))
    Var exp_(Var a);
    Var log_(Var a);
    Var sqrt_(Var a);

    // ---- reductions ----
    Var sum(Var a);                    // -> scalar
    Var mean(Var a);                   // -> scalar
    Var logsumexp(Var a);              // -> scalar, stable

    // ---- linear algebra ----
    // C = opA(A) * opB(B) where opX transposes when the flag is set.
    Var matmul(Var a, Var b, bool ta = false, bool tb = false);
    Var add_rowvec(Var a, Var v);      // broadcast row vector over rows of a
    Var repeat_row(Var v, int n);      // [c] -> [n x c]

    // ---- shape / indexing ----
    Var rows_gather(Var a, std::vector<int> idx);
    Var concat_cols(Var a, Var b);
    Var concat_rows(const std::vector<Var>& parts);
    Var slice_cols(Var a, int c0, int c1);  // half-open [c0, c1)
    // Rows of `a` summed into `n_out` output rows by segment id; used
    // for edge-to-node aggregation. Empty segments produce zero rows.
    Var segment_sum(Var a, std::vector<int> seg, int n_out);

    // ---- fused NN primitives ----
    Var softmax(Var a);                                    // 1-D, shift-invariant
    Var layer_norm(Var x, Var gain, Var bias, double eps); // row-wise

    // ---- access ----
    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    // Accumulates gradients for every node reachable from `loss` that
    // requires them. Repeated calls without clearing accumulate.
    void backward(Var loss);

    void clear() { nodes_.clear(); }

private:
    enum class Op : std::uint8_t {
        Leaf, Add, Sub, Mul, Div, Scale, AddScalar, Tanh, Softplus, Exp, Log, Sqrt,
        Sum, Mean, LogSumExp, MatMul, AddRowVec, RepeatRow, RowsGather,
        ConcatCols, ConcatRows, SliceCols, SegmentSum, Softmax, LayerNorm,
    };

    struct Node {
        Op op = Op::Leaf;
        int a = -1, b = -1, c = -1;   // parent ids
        double s = 0.0;               // scalar payload (scale factor, eps)
        int i0 = 0, i1 = 0;           // int payload (slice bounds, flags)
        std::vector<int> idx;         // index payload (gather/segment/concat)
        Tensor value;
        Tensor grad;                  // allocated on demand during backward
        bool requires_grad = false;
    };

    int push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }
    Node& node(Var v) { return nodes_[v.id]; }
    const Node& node(Var v) const { return nodes_[v.id]; }
    void ensure_grad(int id);
    void backprop_node(int id);

    std::vector<Node> nodes_;
};

// max over coordinates of the relative difference between the analytic
// gradient (from backward) and central finite differences. `build`
// receives a fresh tape and a leaf for theta and returns the scalar
// loss; it must be deterministic across calls.
double grad_check(const std::function<Var(Tape&, Var)>& build, const Tensor& theta, double eps);

}  // namespace ggode
