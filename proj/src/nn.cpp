#include "ggode/nn.hpp"

#include <algorithm>
#include <cmath>

namespace ggode {

void init_uniform(Tensor& t, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
}

Mlp2 mlp2_random(int in, int hidden, int out, Rng& rng) {
    Mlp2 m = Mlp2::zeros(in, hidden, out);
    init_uniform(m.W1, in, rng);
    init_uniform(m.b1, in, rng);
    init_uniform(m.W2, hidden, rng);
    init_uniform(m.b2, hidden, rng);
    return m;
}

Tensor forward_mlp2(const Mlp2& net, const Tensor& x) {
    if (x.cols() != net.in_dim())
        throw std::invalid_argument("forward_mlp2: input width " + std::to_string(x.cols()) +
                                    " does not match layer-1 input " + std::to_string(net.in_dim()));
    const int batch = x.rows(), h = net.hidden_dim(), out = net.out_dim(), in = net.in_dim();
    Tensor hidden = Tensor::zeros({batch, h});
    for (int i = 0; i < batch; ++i)
        for (int j = 0; j < h; ++j) {
            double acc = net.b1.data[j];
            const double* wrow = net.W1.data.data() + static_cast<std::size_t>(j) * in;
            const double* xrow = x.data.data() + static_cast<std::size_t>(i) * in;
            for (int l = 0; l < in; ++l) acc += wrow[l] * xrow[l];
            hidden.at(i, j) = std::tanh(acc);
        }
    Tensor y = Tensor::zeros({batch, out});
    for (int i = 0; i < batch; ++i)
        for (int j = 0; j < out; ++j) {
            double acc = net.b2.data[j];
            const double* wrow = net.W2.data.data() + static_cast<std::size_t>(j) * h;
            const double* hrow = hidden.data.data() + static_cast<std::size_t>(i) * h;
            for (int l = 0; l < h; ++l) acc += wrow[l] * hrow[l];
            y.at(i, j) = acc;
        }
    return y;
}

Tensor softmax(const Tensor& v) {
    if (v.numel() == 0) throw std::invalid_argument("softmax: empty input");
    Tensor out = v;
    double mx = out.data[0];
    for (double x : out.data) mx = std::max(mx, x);
    double z = 0.0;
    for (double& x : out.data) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : out.data) x /= z;
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const int r = x.rows(), c = x.cols();
    if (gain.numel() != c || bias.numel() != c)
        throw std::invalid_argument("layer_norm: gain/bias width mismatch");
    Tensor out = Tensor::zeros(x.shape);
    for (int i = 0; i < r; ++i) {
        const double* row = x.data.data() + static_cast<std::size_t>(i) * c;
        double* o = out.data.data() + static_cast<std::size_t>(i) * c;
        double mu = 0.0;
        for (int j = 0; j < c; ++j) mu += row[j];
        mu /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j) o[j] = gain.data[j] * (row[j] - mu) * inv + bias.data[j];
    }
    return out;
}

}  // namespace ggode
