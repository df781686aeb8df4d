#include "skewprune/tape.hpp"

#include <algorithm>
#include <cmath>

namespace skewprune {

namespace {
constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2/pi)
constexpr float kGeluA = 0.044715f;            // tanh-approximation cubic coefficient
}  // namespace

Var GradTape::leaf(Tensor value, bool requires_grad) {
    check_finite(value, "leaf");
    nodes_.push_back({std::move(value), requires_grad && recording_, nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var GradTape::push(Tensor value, bool requires_grad,
                   std::function<void(GradTape&, const Tensor&)> backward_fn,
                   const char* op_name) {
    check_finite(value, op_name);
    const bool track = recording_ && requires_grad;
    nodes_.push_back({std::move(value), track, track ? std::move(backward_fn) : nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void GradTape::accumulate(Var v, const Tensor& g) {
    if (!rg(v)) return;
    Tensor& slot = grads_[static_cast<size_t>(v.id)];
    if (slot.data.empty()) slot = Tensor(nodes_[static_cast<size_t>(v.id)].value.shape);
    for (size_t i = 0; i < g.data.size(); ++i) slot.data[i] += g.data[i];
}

Tensor GradTape::grad(Var v) const {
    const Tensor& slot = grads_.at(static_cast<size_t>(v.id));
    if (!slot.data.empty()) return slot;
    return Tensor(nodes_[static_cast<size_t>(v.id)].value.shape);
}

void GradTape::backward(Var loss) {
    if (!recording_) throw std::logic_error("backward: tape is not recording");
    if (value(loss).numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    grads_.assign(nodes_.size(), Tensor{});
    Tensor seed(value(loss).shape);
    seed.data[0] = 1.0f;
    grads_[static_cast<size_t>(loss.id)] = seed;
    for (int i = loss.id; i >= 0; --i) {
        Node& node = nodes_[static_cast<size_t>(i)];
        if (!node.backward_fn) continue;
        const Tensor& g = grads_[static_cast<size_t>(i)];
        if (g.data.empty()) continue;
        node.backward_fn(*this, g);
    }
}

Var GradTape::conv2d(Var input, Var weight, Var bias, int stride, int padding) {
    Tensor out = kernels::conv2d_forward(value(input), value(weight), value(bias),
                                         stride, padding, kernels::default_exec());
    const int H = value(input).dim(2), W = value(input).dim(3);
    const int kh = value(weight).dim(2), kw = value(weight).dim(3);
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(input))
            t.accumulate(input, kernels::conv2d_backward_input(g, t.value(weight), stride, padding,
                                                               H, W, kernels::default_exec()));
        if (t.rg(weight))
            t.accumulate(weight, kernels::conv2d_backward_weight(g, t.value(input), stride, padding,
                                                                 kh, kw, kernels::default_exec()));
        if (t.rg(bias)) t.accumulate(bias, kernels::conv2d_backward_bias(g));
    };
    return push(std::move(out), rg(input) || rg(weight) || rg(bias), bwd, "conv2d");
}

Var GradTape::linear(Var input, Var weight, Var bias) {
    Tensor out = kernels::linear_forward(value(input), value(weight), value(bias),
                                         kernels::default_exec());
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(input))
            t.accumulate(input, kernels::linear_backward_input(g, t.value(weight), kernels::default_exec()));
        if (t.rg(weight))
            t.accumulate(weight, kernels::linear_backward_weight(g, t.value(input), kernels::default_exec()));
        if (t.rg(bias)) t.accumulate(bias, kernels::linear_backward_bias(g));
    };
    return push(std::move(out), rg(input) || rg(weight) || rg(bias), bwd, "linear");
}

Var GradTape::linear3d(Var input, Var weight, Var bias) {
    const Tensor& x = value(input);
    if (x.ndim() != 3) throw std::invalid_argument("linear3d: input must be 3D");
    const int B = x.dim(0), T = x.dim(1), F = x.dim(2);
    const int O = value(weight).dim(0);
    Var flat = reshape(input, {B * T, F});
    Var y = linear(flat, weight, bias);
    return reshape(y, {B, T, O});
}

Var GradTape::maxpool2d(Var input, int k, int stride) {
    std::vector<int> argmax;
    Tensor out = kernels::maxpool2d_forward(value(input), k, stride,
                                            rg(input) ? &argmax : nullptr,
                                            kernels::default_exec());
    std::vector<int> in_shape = value(input).shape;
    auto bwd = [=, argmax = std::move(argmax)](GradTape& t, const Tensor& g) {
        t.accumulate(input, kernels::maxpool2d_backward(g, argmax, in_shape));
    };
    return push(std::move(out), rg(input), bwd, "maxpool2d");
}

Var GradTape::relu(Var x) {
    Tensor out = value(x);
    for (float& v : out.data) v = std::max(0.0f, v);
    auto bwd = [=](GradTape& t, const Tensor& g) {
        const Tensor& in = t.value(x);
        Tensor gi(in.shape);
        for (size_t i = 0; i < gi.data.size(); ++i)
            gi.data[i] = in.data[i] > 0.0f ? g.data[i] : 0.0f;
        t.accumulate(x, gi);
    };
    return push(std::move(out), rg(x), bwd, "relu");
}

Var GradTape::gelu(Var x) {
    Tensor out = value(x);
    for (float& v : out.data) {
        const float u = kGeluC * (v + kGeluA * v * v * v);
        v = 0.5f * v * (1.0f + std::tanh(u));
    }
    auto bwd = [=](GradTape& t, const Tensor& g) {
        const Tensor& in = t.value(x);
        Tensor gi(in.shape);
        for (size_t i = 0; i < gi.data.size(); ++i) {
            const float v = in.data[i];
            const float u = kGeluC * (v + kGeluA * v * v * v);
            const float th = std::tanh(u);
            const float sech2 = 1.0f - th * th;
            const float du = kGeluC * (1.0f + 3.0f * kGeluA * v * v);
            gi.data[i] = g.data[i] * (0.5f * (1.0f + th) + 0.5f * v * sech2 * du);
        }
        t.accumulate(x, gi);
    };
    return push(std::move(out), rg(x), bwd, "gelu");
}

Var GradTape::layernorm(Var x, Var gamma, Var beta, float eps) {
    const Tensor& in = value(x);
    if (in.ndim() < 1) throw std::invalid_argument("layernorm: input rank must be >= 1");
    const int d = in.shape.back();
    if (value(gamma).numel() != d || value(beta).numel() != d)
        throw std::invalid_argument("layernorm: gamma/beta size mismatch");
    const int64_t rows = in.numel() / d;
    Tensor out(in.shape);
    Tensor xhat(in.shape);
    std::vector<float> inv_sigma(static_cast<size_t>(rows));
    const float* gm = value(gamma).data.data();
    const float* bt = value(beta).data.data();
    for (int64_t r = 0; r < rows; ++r) {
        const float* xi = in.data.data() + r * d;
        float mean = 0.0f;
        for (int i = 0; i < d; ++i) mean += xi[i];
        mean /= static_cast<float>(d);
        float var = 0.0f;
        for (int i = 0; i < d; ++i) var += (xi[i] - mean) * (xi[i] - mean);
        var /= static_cast<float>(d);
        const float is = 1.0f / std::sqrt(var + eps);
        inv_sigma[static_cast<size_t>(r)] = is;
        for (int i = 0; i < d; ++i) {
            const float xh = (xi[i] - mean) * is;
            xhat.data[static_cast<size_t>(r * d + i)] = xh;
            out.data[static_cast<size_t>(r * d + i)] = gm[i] * xh + bt[i];
        }
    }
    auto bwd = [=, xhat = std::move(xhat), inv_sigma = std::move(inv_sigma)](GradTape& t, const Tensor& g) {
        const int64_t nrows = g.numel() / d;
        const float* gmv = t.value(gamma).data.data();
        Tensor gx(t.value(x).shape), ggamma({d}), gbeta({d});
        for (int64_t r = 0; r < nrows; ++r) {
            const float* gr = g.data.data() + r * d;
            const float* xh = xhat.data.data() + r * d;
            float sum_gg = 0.0f, sum_ggx = 0.0f;
            for (int i = 0; i < d; ++i) {
                const float gg = gr[i] * gmv[i];
                sum_gg += gg;
                sum_ggx += gg * xh[i];
                ggamma.data[static_cast<size_t>(i)] += gr[i] * xh[i];
                gbeta.data[static_cast<size_t>(i)] += gr[i];
            }
            const float mean_gg = sum_gg / static_cast<float>(d);
            const float mean_ggx = sum_ggx / static_cast<float>(d);
            const float is = inv_sigma[static_cast<size_t>(r)];
            for (int i = 0; i < d; ++i) {
                const float gg = gr[i] * gmv[i];
                gx.data[static_cast<size_t>(r * d + i)] = (gg - mean_gg - xh[i] * mean_ggx) * is;
            }
        }
        if (t.rg(x)) t.accumulate(x, gx);
        if (t.rg(gamma)) t.accumulate(gamma, ggamma);
        if (t.rg(beta)) t.accumulate(beta, gbeta);
    };
    return push(std::move(out), rg(x) || rg(gamma) || rg(beta), bwd, "layernorm");
}

Var GradTape::softmax_last(Var x) {
    Tensor out = softmax(value(x), value(x).ndim() - 1);
    // Backward needs the output value, so the closure is installed after the
    // node exists and reads it back by id.
    Var out_var = push(std::move(out), rg(x), nullptr, "softmax");
    if (rg(x)) {
        const int d = value(out_var).shape.back();
        int out_id = out_var.id;
        nodes_[static_cast<size_t>(out_var.id)].backward_fn =
            [x, out_id, d](GradTape& t, const Tensor& g) {
                const Tensor& y = t.value(Var{out_id});
                Tensor gx(y.shape);
                const int64_t rows = y.numel() / d;
                for (int64_t r = 0; r < rows; ++r) {
                    const float* yr = y.data.data() + r * d;
                    const float* gr = g.data.data() + r * d;
                    float dot = 0.0f;
                    for (int i = 0; i < d; ++i) dot += yr[i] * gr[i];
                    for (int i = 0; i < d; ++i)
                        gx.data[static_cast<size_t>(r * d + i)] = yr[i] * (gr[i] - dot);
                }
                t.accumulate(x, gx);
            };
    }
    return out_var;
}

Var GradTape::bmm(Var a, Var b, bool transpose_b) {
    Tensor out = kernels::bmm(value(a), value(b), transpose_b, kernels::default_exec());
    auto bwd = [=](GradTape& t, const Tensor& g) {
        // C = A * B  (B possibly given transposed):
        //   dA = g * B^T   (or g * B when B was transposed)
        //   dB = A^T * g   (or g^T * A when B was transposed)
        const Tensor& A = t.value(a);
        const Tensor& B = t.value(b);
        if (t.rg(a)) {
            Tensor ga = transpose_b ? kernels::bmm(g, B, false, kernels::default_exec())
                                    : kernels::bmm(g, B, true, kernels::default_exec());
            t.accumulate(a, ga);
        }
        if (t.rg(b)) {
            // dB[i] = A[i]^T g[i]; express via bmm on transposed views.
            const int Bn = A.dim(0), M = A.dim(1), K = A.dim(2);
            const int N = g.dim(2);
            if (transpose_b) {
                // B is [Bn,N,K]; dB = g^T-view: dB[i] = g[i]^T A[i] => [N,K]
                Tensor gt({Bn, N, M});
                for (int i = 0; i < Bn; ++i)
                    for (int m = 0; m < M; ++m)
                        for (int n = 0; n < N; ++n)
                            gt.data[static_cast<size_t>((static_cast<int64_t>(i) * N + n) * M + m)] =
                                g.data[static_cast<size_t>((static_cast<int64_t>(i) * M + m) * N + n)];
                t.accumulate(b, kernels::bmm(gt, A, false, kernels::default_exec()));
            } else {
                // B is [Bn,K,N]; dB[i] = A[i]^T g[i] => [K,N]
                Tensor at({Bn, K, M});
                for (int i = 0; i < Bn; ++i)
                    for (int m = 0; m < M; ++m)
                        for (int k = 0; k < K; ++k)
                            at.data[static_cast<size_t>((static_cast<int64_t>(i) * K + k) * M + m)] =
                                A.data[static_cast<size_t>((static_cast<int64_t>(i) * M + m) * K + k)];
                t.accumulate(b, kernels::bmm(at, g, false, kernels::default_exec()));
            }
        }
    };
    return push(std::move(out), rg(a) || rg(b), bwd, "bmm");
}

Var GradTape::scale(Var x, float c) {
    Tensor out = value(x);
    for (float& v : out.data) v *= c;
    auto bwd = [=](GradTape& t, const Tensor& g) {
        Tensor gx = g;
        for (float& v : gx.data) v *= c;
        t.accumulate(x, gx);
    };
    return push(std::move(out), rg(x), bwd, "scale");
}

Var GradTape::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    if (!ta.same_shape(tb))
        throw std::invalid_argument("add: shape mismatch " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
    Tensor out = ta;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += tb.data[i];
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(a)) t.accumulate(a, g);
        if (t.rg(b)) t.accumulate(b, g);
    };
    return push(std::move(out), rg(a) || rg(b), bwd, "add");
}

Var GradTape::add_broadcast(Var x, Var y) {
    const Tensor& tx = value(x);
    const Tensor& ty = value(y);
    const int64_t inner = ty.numel();
    if (tx.numel() % inner != 0 ||
        !std::equal(ty.shape.begin(), ty.shape.end(), tx.shape.end() - ty.ndim()))
        throw std::invalid_argument("add_broadcast: trailing shapes must match");
    const int64_t reps = tx.numel() / inner;
    Tensor out = tx;
    for (int64_t r = 0; r < reps; ++r)
        for (int64_t i = 0; i < inner; ++i)
            out.data[static_cast<size_t>(r * inner + i)] += ty.data[static_cast<size_t>(i)];
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(x)) t.accumulate(x, g);
        if (t.rg(y)) {
            Tensor gy(t.value(y).shape);
            for (int64_t r = 0; r < reps; ++r)
                for (int64_t i = 0; i < inner; ++i)
                    gy.data[static_cast<size_t>(i)] += g.data[static_cast<size_t>(r * inner + i)];
            t.accumulate(y, gy);
        }
    };
    return push(std::move(out), rg(x) || rg(y), bwd, "add_broadcast");
}

Var GradTape::prepend_token(Var x, Var token) {
    const Tensor& tx = value(x);
    const Tensor& tok = value(token);
    if (tx.ndim() != 3) throw std::invalid_argument("prepend_token: input must be 3D");
    const int B = tx.dim(0), T = tx.dim(1), D = tx.dim(2);
    if (tok.numel() != D) throw std::invalid_argument("prepend_token: token dim mismatch");
    Tensor out({B, T + 1, D});
    for (int b = 0; b < B; ++b) {
        float* ob = out.data.data() + static_cast<int64_t>(b) * (T + 1) * D;
        std::copy(tok.data.begin(), tok.data.end(), ob);
        std::copy(tx.data.begin() + static_cast<int64_t>(b) * T * D,
                  tx.data.begin() + static_cast<int64_t>(b + 1) * T * D, ob + D);
    }
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(token)) {
            Tensor gt({D});
            for (int b = 0; b < B; ++b)
                for (int i = 0; i < D; ++i)
                    gt.data[static_cast<size_t>(i)] +=
                        g.data[static_cast<size_t>(static_cast<int64_t>(b) * (T + 1) * D + i)];
            t.accumulate(token, gt);
        }
        if (t.rg(x)) {
            Tensor gx({B, T, D});
            for (int b = 0; b < B; ++b)
                std::copy(g.data.begin() + static_cast<int64_t>(b) * (T + 1) * D + D,
                          g.data.begin() + static_cast<int64_t>(b + 1) * (T + 1) * D,
                          gx.data.begin() + static_cast<int64_t>(b) * T * D);
            t.accumulate(x, gx);
        }
    };
    return push(std::move(out), rg(x) || rg(token), bwd, "prepend_token");
}

Var GradTape::slice_last(Var x, int start, int len) {
    const Tensor& tx = value(x);
    const int d = tx.shape.back();
    if (start < 0 || len <= 0 || start + len > d) throw std::out_of_range("slice_last: range out of bounds");
    std::vector<int> out_shape = tx.shape;
    out_shape.back() = len;
    Tensor out(out_shape);
    const int64_t rows = tx.numel() / d;
    for (int64_t r = 0; r < rows; ++r)
        std::copy(tx.data.begin() + r * d + start, tx.data.begin() + r * d + start + len,
                  out.data.begin() + r * len);
    auto bwd = [=](GradTape& t, const Tensor& g) {
        Tensor gx(t.value(x).shape);
        for (int64_t r = 0; r < rows; ++r)
            std::copy(g.data.begin() + r * len, g.data.begin() + (r + 1) * len,
                      gx.data.begin() + r * d + start);
        t.accumulate(x, gx);
    };
    return push(std::move(out), rg(x), bwd, "slice_last");
}

Var GradTape::concat_last(const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_last: no inputs");
    std::vector<int> lens;
    int total = 0;
    bool any_rg = false;
    for (Var v : xs) {
        lens.push_back(value(v).shape.back());
        total += lens.back();
        any_rg = any_rg || rg(v);
    }
    std::vector<int> out_shape = value(xs[0]).shape;
    out_shape.back() = total;
    Tensor out(out_shape);
    const int64_t rows = out.numel() / total;
    int off = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const Tensor& t = value(xs[i]);
        const int d = lens[i];
        for (int64_t r = 0; r < rows; ++r)
            std::copy(t.data.begin() + r * d, t.data.begin() + (r + 1) * d,
                      out.data.begin() + r * total + off);
        off += d;
    }
    auto bwd = [=](GradTape& t, const Tensor& g) {
        int o = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            const int d = lens[i];
            if (t.rg(xs[i])) {
                Tensor gx(t.value(xs[i]).shape);
                for (int64_t r = 0; r < rows; ++r)
                    std::copy(g.data.begin() + r * total + o, g.data.begin() + r * total + o + d,
                              gx.data.begin() + r * d);
                t.accumulate(xs[i], gx);
            }
            o += d;
        }
    };
    return push(std::move(out), any_rg, bwd, "concat_last");
}

Var GradTape::reshape(Var x, std::vector<int> new_shape) {
    if (shape_numel(new_shape) != value(x).numel())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor out = value(x);
    out.shape = new_shape;
    auto bwd = [=](GradTape& t, const Tensor& g) {
        Tensor gx = g;
        gx.shape = t.value(x).shape;
        t.accumulate(x, gx);
    };
    return push(std::move(out), rg(x), bwd, "reshape");
}

Var GradTape::transpose_12(Var x) {
    const Tensor& tx = value(x);
    if (tx.ndim() != 3) throw std::invalid_argument("transpose_12: input must be 3D");
    const int B = tx.dim(0), A = tx.dim(1), C = tx.dim(2);
    Tensor out({B, C, A});
    for (int b = 0; b < B; ++b)
        for (int a = 0; a < A; ++a)
            for (int c = 0; c < C; ++c)
                out.data[static_cast<size_t>((static_cast<int64_t>(b) * C + c) * A + a)] =
                    tx.data[static_cast<size_t>((static_cast<int64_t>(b) * A + a) * C + c)];
    auto bwd = [=](GradTape& t, const Tensor& g) {
        Tensor gx({B, A, C});
        for (int b = 0; b < B; ++b)
            for (int a = 0; a < A; ++a)
                for (int c = 0; c < C; ++c)
                    gx.data[static_cast<size_t>((static_cast<int64_t>(b) * A + a) * C + c)] =
                        g.data[static_cast<size_t>((static_cast<int64_t>(b) * C + c) * A + a)];
        t.accumulate(x, gx);
    };
    return push(std::move(out), rg(x), bwd, "transpose_12");
}

Var GradTape::residual_add_pruned(Var x_in, Var residual, const std::vector<int>& keep) {
    const Tensor& xi = value(x_in);
    const Tensor& res = value(residual);
    const int d = res.shape.back();
    const int k = xi.shape.back();
    if (static_cast<int>(keep.size()) != k)
        throw std::invalid_argument("residual_add_pruned: keep size does not match input dim");
    if (k > d) throw std::invalid_argument("residual_add_pruned: |K| exceeds output dim");
    for (size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] < 0 || keep[i] >= d) throw std::out_of_range("residual_add_pruned: index out of range");
        if (i > 0 && keep[i] <= keep[i - 1])
            throw std::invalid_argument("residual_add_pruned: keep indices must be strictly increasing");
    }
    if (xi.numel() / k != res.numel() / d)
        throw std::invalid_argument("residual_add_pruned: leading shapes mismatch");
    Tensor out = res;
    const int64_t rows = res.numel() / d;
    for (int64_t r = 0; r < rows; ++r)
        for (int i = 0; i < k; ++i)
            out.data[static_cast<size_t>(r * d + keep[static_cast<size_t>(i)])] +=
                xi.data[static_cast<size_t>(r * k + i)];
    auto bwd = [=](GradTape& t, const Tensor& g) {
        if (t.rg(residual)) t.accumulate(residual, g);
        if (t.rg(x_in)) {
            Tensor gx(t.value(x_in).shape);
            for (int64_t r = 0; r < rows; ++r)
                for (int i = 0; i < k; ++i)
                    gx.data[static_cast<size_t>(r * k + i)] =
                        g.data[static_cast<size_t>(r * d + keep[static_cast<size_t>(i)])];
            t.accumulate(x_in, gx);
        }
    };
    return push(std::move(out), rg(x_in) || rg(residual), bwd, "residual_add_pruned");
}

Var GradTape::cross_entropy(Var logits, const std::vector<int>& labels) {
    const Tensor& z = value(logits);
    if (z.ndim() != 2) throw std::invalid_argument("cross_entropy: logits must be 2D");
    const int N = z.dim(0), C = z.dim(1);
    if (static_cast<int>(labels.size()) != N)
        throw std::invalid_argument("cross_entropy: label count mismatch");
    Tensor probs = softmax(z, 1);
    Tensor loss({1});
    double acc = 0.0;
    for (int n = 0; n < N; ++n) {
        const int y = labels[static_cast<size_t>(n)];
        if (y < 0 || y >= C) throw std::out_of_range("cross_entropy: label out of range");
        acc -= std::log(static_cast<double>(probs.data[static_cast<size_t>(n) * C + y]) + 1e-12);
    }
    loss.data[0] = static_cast<float>(acc / N);
    auto bwd = [=, probs = std::move(probs), labels = labels](GradTape& t, const Tensor& g) {
        Tensor gz({N, C});
        const float s = g.data[0] / static_cast<float>(N);
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                float p = probs.data[static_cast<size_t>(n) * C + c];
                if (c == labels[static_cast<size_t>(n)]) p -= 1.0f;
                gz.data[static_cast<size_t>(n) * C + c] = s * p;
            }
        t.accumulate(logits, gz);
    };
    return push(std::move(loss), rg(logits), bwd, "cross_entropy");
}

Tensor softmax(const Tensor& x, int axis) {
    if (axis < 0) axis += x.ndim();
    if (axis < 0 || axis >= x.ndim()) throw std::invalid_argument("softmax: bad axis");
    const int d = x.dim(axis);
    int64_t inner = 1;
    for (int i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    const int64_t outer = x.numel() / (d * inner);
    Tensor out(x.shape);
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * d * inner + in;
            float mx = x.data[static_cast<size_t>(base)];
            for (int i = 1; i < d; ++i)
                mx = std::max(mx, x.data[static_cast<size_t>(base + i * inner)]);
            float sum = 0.0f;
            for (int i = 0; i < d; ++i) {
                const float e = std::exp(x.data[static_cast<size_t>(base + i * inner)] - mx);
                out.data[static_cast<size_t>(base + i * inner)] = e;
                sum += e;
            }
            for (int i = 0; i < d; ++i) out.data[static_cast<size_t>(base + i * inner)] /= sum;
        }
    }
    return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const int N = logits.dim(0), C = logits.dim(1);
    std::vector<int> out(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        int best = 0;
        for (int c = 1; c < C; ++c)
            if (logits.data[static_cast<size_t>(n) * C + c] >
                logits.data[static_cast<size_t>(n) * C + best])
                best = c;
        out[static_cast<size_t>(n)] = best;
    }
    return out;
}

}  // namespace skewprune
