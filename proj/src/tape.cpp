#include "ggode/tape.hpp"

#include <algorithm>
#include <cmath>

namespace ggode {

namespace {

// C (+)= opA(A) * opB(B). Plain loops; the ikj orderings keep the inner
// loop contiguous for the common layouts.
void gemm_acc(const Tensor& A, const Tensor& B, bool ta, bool tb, double alpha, Tensor& C) {
    const int m = ta ? A.cols() : A.rows();
    const int k = ta ? A.rows() : A.cols();
    const int n = tb ? B.rows() : B.cols();
    const double* a = A.data.data();
    const double* b = B.data.data();
    double* c = C.data.data();
    const int lda = A.cols(), ldb = B.cols(), ldc = n;

    if (!ta && !tb) {
        for (int i = 0; i < m; ++i)
            for (int l = 0; l < k; ++l) {
                const double av = alpha * a[i * lda + l];
                if (av == 0.0) continue;
                const double* brow = b + l * ldb;
                double* crow = c + i * ldc;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
    } else if (!ta && tb) {
        for (int i = 0; i < m; ++i) {
            const double* arow = a + i * lda;
            double* crow = c + i * ldc;
            for (int j = 0; j < n; ++j) {
                const double* brow = b + j * ldb;
                double acc = 0.0;
                for (int l = 0; l < k; ++l) acc += arow[l] * brow[l];
                crow[j] += alpha * acc;
            }
        }
    } else if (ta && !tb) {
        for (int l = 0; l < k; ++l) {
            const double* arow = a + l * lda;
            const double* brow = b + l * ldb;
            for (int i = 0; i < m; ++i) {
                const double av = alpha * arow[i];
                if (av == 0.0) continue;
                double* crow = c + i * ldc;
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        for (int j = 0; j < n; ++j) {
            const double* brow = b + j * ldb;
            for (int l = 0; l < k; ++l) {
                const double bv = alpha * brow[l];
                if (bv == 0.0) continue;
                const double* arow = a + l * lda;
                for (int i = 0; i < m; ++i) c[i * ldc + j] += bv * arow[i];
            }
        }
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                    " vs " + shape_str(b.shape));
}

double stable_softplus(double w) {
    return std::max(w, 0.0) + std::log1p(std::exp(-std::abs(w)));
}

}  // namespace

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return Var{push(std::move(n))};
}

const Tensor& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.data.empty())
        throw std::logic_error("Tape::grad: no gradient recorded for this node");
    return n.grad;
}

Var Tape::add(Var a, Var b) {
    check_same_shape(value(a), value(b), "add");
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += value(b).data[i];
    return Var{push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
    check_same_shape(value(a), value(b), "sub");
    Node n;
    n.op = Op::Sub;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] -= value(b).data[i];
    return Var{push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
    check_same_shape(value(a), value(b), "mul");
    Node n;
    n.op = Op::Mul;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] *= value(b).data[i];
    return Var{push(std::move(n))};
}

Var Tape::div(Var a, Var b) {
    check_same_shape(value(a), value(b), "div");
    Node n;
    n.op = Op::Div;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = value(a);
    for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] /= value(b).data[i];
    return Var{push(std::move(n))};
}

Var Tape::scale(Var a, double s) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.s = s;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v *= s;
    return Var{push(std::move(n))};
}

Var Tape::add_scalar(Var a, double s) {
    Node n;
    n.op = Op::AddScalar;
    n.a = a.id;
    n.s = s;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v += s;
    return Var{push(std::move(n))};
}

Var Tape::tanh_(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v = std::tanh(v);
    return Var{push(std::move(n))};
}

Var Tape::softplus_(Var a) {
    Node n;
    n.op = Op::Softplus;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v = stable_softplus(v);
    return Var{push(std::move(n))};
}

Var Tape::exp_(Var a) {
    Node n;
    n.op = Op::Exp;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v = std::exp(v);
    return Var{push(std::move(n))};
}

Var Tape::log_(Var a) {
    Node n;
    n.op = Op::Log;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v = std::log(v);
    return Var{push(std::move(n))};
}

Var Tape::sqrt_(Var a) {
    Node n;
    n.op = Op::Sqrt;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = value(a);
    for (double& v : n.value.data) v = std::sqrt(v);
    return Var{push(std::move(n))};
}

Var Tape::sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    double acc = 0.0;
    for (double v : value(a).data) acc += v;
    n.value = Tensor::scalar(acc);
    return Var{push(std::move(n))};
}

Var Tape::mean(Var a) {
    if (value(a).numel() == 0) throw std::invalid_argument("mean: empty input");
    Node n;
    n.op = Op::Mean;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    double acc = 0.0;
    for (double v : value(a).data) acc += v;
    n.value = Tensor::scalar(acc / static_cast<double>(value(a).numel()));
    return Var{push(std::move(n))};
}

Var Tape::logsumexp(Var a) {
    const Tensor& x = value(a);
    if (x.numel() == 0) throw std::invalid_argument("logsumexp: empty input");
    double mx = x.data[0];
    for (double v : x.data) mx = std::max(mx, v);
    double acc = 0.0;
    for (double v : x.data) acc += std::exp(v - mx);
    Node n;
    n.op = Op::LogSumExp;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor::scalar(mx + std::log(acc));
    return Var{push(std::move(n))};
}

Var Tape::matmul(Var a, Var b, bool ta, bool tb) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() > 2 || B.rank() > 2) throw std::invalid_argument("matmul: rank > 2");
    const int m = ta ? A.cols() : A.rows();
    const int ka = ta ? A.rows() : A.cols();
    const int kb = tb ? B.cols() : B.rows();
    const int nn = tb ? B.rows() : B.cols();
    if (ka != kb)
        throw std::invalid_argument("matmul: inner dimension mismatch " + shape_str(A.shape) +
                                    (ta ? "^T" : "") + " * " + shape_str(B.shape) + (tb ? "^T" : ""));
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.i0 = ta ? 1 : 0;
    n.i1 = tb ? 1 : 0;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = Tensor::zeros({m, nn});
    gemm_acc(A, B, ta, tb, 1.0, n.value);
    return Var{push(std::move(n))};
}

Var Tape::add_rowvec(Var a, Var v) {
    const Tensor& A = value(a);
    const Tensor& V = value(v);
    if (V.numel() != A.cols()) throw std::invalid_argument("add_rowvec: width mismatch");
    Node n;
    n.op = Op::AddRowVec;
    n.a = a.id;
    n.b = v.id;
    n.requires_grad = node(a).requires_grad || node(v).requires_grad;
    n.value = A;
    const int r = A.rows(), c = A.cols();
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) n.value.data[static_cast<std::size_t>(i) * c + j] += V.data[j];
    return Var{push(std::move(n))};
}

Var Tape::repeat_row(Var v, int nrep) {
    const Tensor& V = value(v);
    if (V.rows() != 1) throw std::invalid_argument("repeat_row: input must be a single row");
    const int c = V.cols();
    Node n;
    n.op = Op::RepeatRow;
    n.a = v.id;
    n.requires_grad = node(v).requires_grad;
    n.value = Tensor::zeros({nrep, c});
    for (int i = 0; i < nrep; ++i)
        std::copy(V.data.begin(), V.data.end(), n.value.data.begin() + static_cast<std::size_t>(i) * c);
    return Var{push(std::move(n))};
}

Var Tape::rows_gather(Var a, std::vector<int> idx) {
    const Tensor& A = value(a);
    const int c = A.cols();
    Node n;
    n.op = Op::RowsGather;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor::zeros({static_cast<int>(idx.size()), c});
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= A.rows()) throw std::invalid_argument("rows_gather: index out of range");
        std::copy_n(A.data.begin() + static_cast<std::size_t>(idx[i]) * c, c,
                    n.value.data.begin() + i * c);
    }
    n.idx = std::move(idx);
    return Var{push(std::move(n))};
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rows() != B.rows()) throw std::invalid_argument("concat_cols: row count mismatch");
    const int r = A.rows(), ca = A.cols(), cb = B.cols();
    Node n;
    n.op = Op::ConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.i0 = ca;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = Tensor::zeros({r, ca + cb});
    for (int i = 0; i < r; ++i) {
        std::copy_n(A.data.begin() + static_cast<std::size_t>(i) * ca, ca,
                    n.value.data.begin() + static_cast<std::size_t>(i) * (ca + cb));
        std::copy_n(B.data.begin() + static_cast<std::size_t>(i) * cb, cb,
                    n.value.data.begin() + static_cast<std::size_t>(i) * (ca + cb) + ca);
    }
    return Var{push(std::move(n))};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: empty input");
    const int c = value(parts[0]).cols();
    int r = 0;
    for (Var p : parts) {
        if (value(p).cols() != c) throw std::invalid_argument("concat_rows: column mismatch");
        r += value(p).rows();
    }
    Node n;
    n.op = Op::ConcatRows;
    n.value = Tensor::zeros({r, c});
    int off = 0;
    for (Var p : parts) {
        const Tensor& P = value(p);
        std::copy(P.data.begin(), P.data.end(), n.value.data.begin() + static_cast<std::size_t>(off) * c);
        off += P.rows();
        n.idx.push_back(p.id);
        n.requires_grad = n.requires_grad || node(p).requires_grad;
    }
    return Var{push(std::move(n))};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Tensor& A = value(a);
    if (c0 < 0 || c1 > A.cols() || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    const int r = A.rows(), c = A.cols(), w = c1 - c0;
    Node n;
    n.op = Op::SliceCols;
    n.a = a.id;
    n.i0 = c0;
    n.i1 = c1;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor::zeros({r, w});
    for (int i = 0; i < r; ++i)
        std::copy_n(A.data.begin() + static_cast<std::size_t>(i) * c + c0, w,
                    n.value.data.begin() + static_cast<std::size_t>(i) * w);
    return Var{push(std::move(n))};
}

Var Tape::segment_sum(Var a, std::vector<int> seg, int n_out) {
    const Tensor& A = value(a);
    if (static_cast<int>(seg.size()) != A.rows())
        throw std::invalid_argument("segment_sum: one segment id per row required");
    const int c = A.cols();
    Node n;
    n.op = Op::SegmentSum;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor::zeros({n_out, c});
    for (std::size_t i = 0; i < seg.size(); ++i) {
        if (seg[i] < 0 || seg[i] >= n_out) throw std::invalid_argument("segment_sum: id out of range");
        const double* src = A.data.data() + i * c;
        double* dst = n.value.data.data() + static_cast<std::size_t>(seg[i]) * c;
        for (int j = 0; j < c; ++j) dst[j] += src[j];
    }
    n.idx = std::move(seg);
    return Var{push(std::move(n))};
}

Var Tape::softmax(Var a) {
    const Tensor& x = value(a);
    if (x.numel() == 0) throw std::invalid_argument("softmax: empty input");
    double mx = x.data[0];
    for (double v : x.data) mx = std::max(mx, v);
    Node n;
    n.op = Op::Softmax;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = x;
    double z = 0.0;
    for (double& v : n.value.data) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : n.value.data) v /= z;
    return Var{push(std::move(n))};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& X = value(x);
    const int r = X.rows(), c = X.cols();
    if (value(gain).numel() != c || value(bias).numel() != c)
        throw std::invalid_argument("layer_norm: gain/bias width mismatch");
    Node n;
    n.op = Op::LayerNorm;
    n.a = x.id;
    n.b = gain.id;
    n.c = bias.id;
    n.s = eps;
    n.requires_grad = node(x).requires_grad || node(gain).requires_grad || node(bias).requires_grad;
    n.value = Tensor::zeros(X.shape);
    const double* g = value(gain).data.data();
    const double* bi = value(bias).data.data();
    for (int i = 0; i < r; ++i) {
        const double* row = X.data.data() + static_cast<std::size_t>(i) * c;
        double* out = n.value.data.data() + static_cast<std::size_t>(i) * c;
        double mu = 0.0;
        for (int j = 0; j < c; ++j) mu += row[j];
        mu /= c;
        double var = 0.0;
        for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= c;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int j = 0; j < c; ++j) out[j] = g[j] * (row[j] - mu) * inv + bi[j];
    }
    return Var{push(std::move(n))};
}

void Tape::ensure_grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
}

void Tape::backward(Var loss) {
    Node& ln = nodes_[loss.id];
    if (ln.value.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    ensure_grad(loss.id);
    ln.grad.data[0] += 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.data.empty()) continue;
        backprop_node(id);
    }
}

void Tape::backprop_node(int id) {
    Node& n = nodes_[id];
    const Tensor& g = n.grad;
    auto need = [&](int pid) { return pid >= 0 && nodes_[pid].requires_grad; };
    auto pgrad = [&](int pid) -> Tensor& {
        ensure_grad(pid);
        return nodes_[pid].grad;
    };

    switch (n.op) {
        case Op::Leaf:
            break;
        case Op::Add: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
            }
            break;
        }
        case Op::Sub: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
            }
            break;
        }
        case Op::Mul: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * bv.data[i];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i] * av.data[i];
            }
            break;
        }
        case Op::Div: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / bv.data[i];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    gb.data[i] -= g.data[i] * av.data[i] / (bv.data[i] * bv.data[i]);
            }
            break;
        }
        case Op::Scale: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * n.s;
            }
            break;
        }
        case Op::AddScalar: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            break;
        }
        case Op::Tanh: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i] * (1.0 - n.value.data[i] * n.value.data[i]);
            }
            break;
        }
        case Op::Softplus: {
            if (need(n.a)) {
                const Tensor& av = nodes_[n.a].value;
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) {
                    const double w = av.data[i];
                    const double sig = w >= 0.0 ? 1.0 / (1.0 + std::exp(-w))
                                                : std::exp(w) / (1.0 + std::exp(w));
                    ga.data[i] += g.data[i] * sig;
                }
            }
            break;
        }
        case Op::Exp: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] * n.value.data[i];
            }
            break;
        }
        case Op::Log: {
            if (need(n.a)) {
                const Tensor& av = nodes_[n.a].value;
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i] / av.data[i];
            }
            break;
        }
        case Op::Sqrt: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i] * 0.5 / n.value.data[i];
            }
            break;
        }
        case Op::Sum: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const double s = g.data[0];
                for (double& v : ga.data) v += s;
            }
            break;
        }
        case Op::Mean: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const double s = g.data[0] / static_cast<double>(ga.data.size());
                for (double& v : ga.data) v += s;
            }
            break;
        }
        case Op::LogSumExp: {
            if (need(n.a)) {
                const Tensor& av = nodes_[n.a].value;
                Tensor& ga = pgrad(n.a);
                const double lse = n.value.data[0];
                const double s = g.data[0];
                for (std::size_t i = 0; i < ga.data.size(); ++i)
                    ga.data[i] += s * std::exp(av.data[i] - lse);
            }
            break;
        }
        case Op::MatMul: {
            const bool ta = n.i0 != 0, tb = n.i1 != 0;
            const Tensor& A = nodes_[n.a].value;
            const Tensor& B = nodes_[n.b].value;
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                if (!ta)
                    gemm_acc(g, B, false, !tb, 1.0, ga);
                else
                    gemm_acc(B, g, tb, true, 1.0, ga);
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                if (!tb)
                    gemm_acc(A, g, !ta, false, 1.0, gb);
                else
                    gemm_acc(g, A, true, ta, 1.0, gb);
            }
            break;
        }
        case Op::AddRowVec: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                const int r = n.value.rows(), c = n.value.cols();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) gb.data[j] += g.data[static_cast<std::size_t>(i) * c + j];
            }
            break;
        }
        case Op::RepeatRow: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const int r = n.value.rows(), c = n.value.cols();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) ga.data[j] += g.data[static_cast<std::size_t>(i) * c + j];
            }
            break;
        }
        case Op::RowsGather: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const int c = n.value.cols();
                for (std::size_t i = 0; i < n.idx.size(); ++i) {
                    double* dst = ga.data.data() + static_cast<std::size_t>(n.idx[i]) * c;
                    const double* src = g.data.data() + i * c;
                    for (int j = 0; j < c; ++j) dst[j] += src[j];
                }
            }
            break;
        }
        case Op::ConcatCols: {
            const int r = n.value.rows(), ct = n.value.cols(), ca = n.i0;
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < ca; ++j)
                        ga.data[static_cast<std::size_t>(i) * ca + j] +=
                            g.data[static_cast<std::size_t>(i) * ct + j];
            }
            if (need(n.b)) {
                Tensor& gb = pgrad(n.b);
                const int cb = ct - ca;
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < cb; ++j)
                        gb.data[static_cast<std::size_t>(i) * cb + j] +=
                            g.data[static_cast<std::size_t>(i) * ct + ca + j];
            }
            break;
        }
        case Op::ConcatRows: {
            const int c = n.value.cols();
            int off = 0;
            for (int pid : n.idx) {
                Node& p = nodes_[pid];
                const int pr = p.value.rows();
                if (p.requires_grad) {
                    ensure_grad(pid);
                    for (int i = 0; i < pr; ++i)
                        for (int j = 0; j < c; ++j)
                            p.grad.data[static_cast<std::size_t>(i) * c + j] +=
                                g.data[static_cast<std::size_t>(off + i) * c + j];
                }
                off += pr;
            }
            break;
        }
        case Op::SliceCols: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const int r = n.value.rows(), w = n.value.cols(), c = ga.cols();
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < w; ++j)
                        ga.data[static_cast<std::size_t>(i) * c + n.i0 + j] +=
                            g.data[static_cast<std::size_t>(i) * w + j];
            }
            break;
        }
        case Op::SegmentSum: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const int c = n.value.cols();
                for (std::size_t i = 0; i < n.idx.size(); ++i) {
                    const double* src = g.data.data() + static_cast<std::size_t>(n.idx[i]) * c;
                    double* dst = ga.data.data() + i * c;
                    for (int j = 0; j < c; ++j) dst[j] += src[j];
                }
            }
            break;
        }
        case Op::Softmax: {
            if (need(n.a)) {
                Tensor& ga = pgrad(n.a);
                const Tensor& y = n.value;
                double dot = 0.0;
                for (std::size_t i = 0; i < y.data.size(); ++i) dot += g.data[i] * y.data[i];
                for (std::size_t i = 0; i < y.data.size(); ++i)
                    ga.data[i] += y.data[i] * (g.data[i] - dot);
            }
            break;
        }
        case Op::LayerNorm: {
            const Tensor& X = nodes_[n.a].value;
            const Tensor& G = nodes_[n.b].value;
            const int r = X.rows(), c = X.cols();
            const double eps = n.s;
            for (int i = 0; i < r; ++i) {
                const double* row = X.data.data() + static_cast<std::size_t>(i) * c;
                const double* gy = g.data.data() + static_cast<std::size_t>(i) * c;
                double mu = 0.0;
                for (int j = 0; j < c; ++j) mu += row[j];
                mu /= c;
                double var = 0.0;
                for (int j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
                var /= c;
                const double inv = 1.0 / std::sqrt(var + eps);
                if (need(n.b)) {
                    Tensor& gg = pgrad(n.b);
                    for (int j = 0; j < c; ++j) gg.data[j] += gy[j] * (row[j] - mu) * inv;
                }
                if (need(n.c)) {
                    Tensor& gb = pgrad(n.c);
                    for (int j = 0; j < c; ++j) gb.data[j] += gy[j];
                }
                if (need(n.a)) {
                    Tensor& gx = pgrad(n.a);
                    double* out = gx.data.data() + static_cast<std::size_t>(i) * c;
                    double m1 = 0.0, m2 = 0.0;
                    for (int j = 0; j < c; ++j) {
                        const double dxh = gy[j] * G.data[j];
                        const double xh = (row[j] - mu) * inv;
                        m1 += dxh;
                        m2 += dxh * xh;
                    }
                    m1 /= c;
                    m2 /= c;
                    for (int j = 0; j < c; ++j) {
                        const double dxh = gy[j] * G.data[j];
                        const double xh = (row[j] - mu) * inv;
                        out[j] += inv * (dxh - m1 - xh * m2);
                    }
                }
            }
            break;
        }
    }
}

double grad_check(const std::function<Var(Tape&, Var)>& build, const Tensor& theta, double eps) {
    Tape tape;
    Var leaf = tape.leaf(theta, true);
    Var loss = build(tape, leaf);
    tape.backward(loss);
    Tensor analytic = tape.grad(leaf);

    auto eval = [&](const Tensor& t) {
        Tape tp;
        Var lf = tp.leaf(t, false);
        Var l = build(tp, lf);
        return tp.value(l).data[0];
    };

    double worst = 0.0;
    Tensor probe = theta;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + eps;
        const double fp = eval(probe);
        probe.data[i] = orig - eps;
        const double fm = eval(probe);
        probe.data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(analytic.data[i] - numeric) /
                           (std::abs(analytic.data[i]) + std::abs(numeric) + 1e-12);
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace ggode
