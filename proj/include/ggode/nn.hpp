#pragma once

#include "ggode/rng.hpp"
#include "ggode/tape.hpp"
#include "ggode/tensor.hpp"

namespace ggode {

// Two affine layers with a tanh hidden activation:
//   y = W2 * tanh(W1 * x + b1) + b2
// Weights are stored [out x in]; inputs are batches of rows.
struct Mlp2 {
    Tensor W1, b1, W2, b2;

    int in_dim() const { return W1.cols(); }
    int hidden_dim() const { return W1.rows(); }
    int out_dim() const { return W2.rows(); }

    static Mlp2 zeros(int in, int hidden, int out) {
        if (hidden <= 0) throw std::invalid_argument("Mlp2: hidden width must be positive");
        Mlp2 m;
        m.W1 = Tensor::zeros({hidden, in});
        m.b1 = Tensor::zeros({hidden});
        m.W2 = Tensor::zeros({out, hidden});
        m.b2 = Tensor::zeros({out});
        return m;
    }
};

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform(Tensor& t, int fan_in, Rng& rng);
Mlp2 mlp2_random(int in, int hidden, int out, Rng& rng);

// Untraced forward pass; x is [batch x in].
Tensor forward_mlp2(const Mlp2& net, const Tensor& x);

// Untraced primitives (oracle-friendly plain evaluation).
Tensor softmax(const Tensor& v);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// ---- traced counterparts ----

struct Mlp2Vars {
    Var W1, b1, W2, b2;
};

inline Mlp2Vars lift(Tape& tape, const Mlp2& m, bool requires_grad) {
    return Mlp2Vars{tape.leaf(m.W1, requires_grad), tape.leaf(m.b1, requires_grad),
                    tape.leaf(m.W2, requires_grad), tape.leaf(m.b2, requires_grad)};
}

// x * W^T + b for row-major batches.
inline Var linear(Tape& t, Var x, Var W, Var b) {
    return t.add_rowvec(t.matmul(x, W, false, true), b);
}

inline Var forward_mlp2(Tape& t, const Mlp2Vars& m, Var x) {
    return linear(t, t.tanh_(linear(t, x, m.W1, m.b1)), m.W2, m.b2);
}

}  // namespace ggode
