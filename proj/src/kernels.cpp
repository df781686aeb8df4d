#include "skewprune/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <limits>

namespace skewprune::kernels {

namespace {
Exec g_default_exec = Exec::Parallel;
}

Exec default_exec() { return g_default_exec; }
void set_default_exec(Exec e) { g_default_exec = e; }

int thread_count() {
    static int n = [] {
        if (const char* env = std::getenv("SKEWPRUNE_THREADS")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return omp_get_max_threads();
    }();
    return n;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int padding, Exec exec) {
    if (input.ndim() != 4 || weight.ndim() != 4)
        throw std::invalid_argument("conv2d: input and weight must be 4D");
    if (stride < 1 || padding < 0)
        throw std::invalid_argument("conv2d: stride must be >= 1 and padding >= 0");
    const int N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(1) != Cin)
        throw std::invalid_argument("conv2d: input channels " + std::to_string(Cin) +
                                    " do not match weight " + std::to_string(weight.dim(1)));
    if (bias.numel() != Cout) throw std::invalid_argument("conv2d: bias size mismatch");
    const int Ho = (H + 2 * padding - kh) / stride + 1;
    const int Wo = (W + 2 * padding - kw) / stride + 1;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("conv2d: kernel larger than padded input");

    Tensor out({N, Cout, Ho, Wo});
    const float* in = input.data.data();
    const float* w = weight.data.data();
    float* o = out.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int n = 0; n < N; ++n) {
        for (int co = 0; co < Cout; ++co) {
            for (int oh = 0; oh < Ho; ++oh) {
                for (int ow = 0; ow < Wo; ++ow) {
                    float acc = bias.data[static_cast<size_t>(co)];
                    for (int ci = 0; ci < Cin; ++ci) {
                        for (int r = 0; r < kh; ++r) {
                            const int ih = oh * stride + r - padding;
                            if (ih < 0 || ih >= H) continue;
                            for (int c = 0; c < kw; ++c) {
                                const int iw = ow * stride + c - padding;
                                if (iw < 0 || iw >= W) continue;
                                acc += in[((static_cast<int64_t>(n) * Cin + ci) * H + ih) * W + iw] *
                                       w[((static_cast<int64_t>(co) * Cin + ci) * kh + r) * kw + c];
                            }
                        }
                    }
                    o[((static_cast<int64_t>(n) * Cout + co) * Ho + oh) * Wo + ow] = acc;
                }
            }
        }
    }
    check_finite(out, "conv2d");
    return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight,
                             int stride, int padding, int H, int W, Exec exec) {
    const int N = grad_out.dim(0), Cout = grad_out.dim(1), Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    const int Cin = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    Tensor gin({N, Cin, H, W});
    const float* go = grad_out.data.data();
    const float* w = weight.data.data();
    float* gi = gin.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int n = 0; n < N; ++n) {
        for (int ci = 0; ci < Cin; ++ci) {
            for (int co = 0; co < Cout; ++co) {
                for (int oh = 0; oh < Ho; ++oh) {
                    for (int ow = 0; ow < Wo; ++ow) {
                        const float g = go[((static_cast<int64_t>(n) * Cout + co) * Ho + oh) * Wo + ow];
                        for (int r = 0; r < kh; ++r) {
                            const int ih = oh * stride + r - padding;
                            if (ih < 0 || ih >= H) continue;
                            for (int c = 0; c < kw; ++c) {
                                const int iw = ow * stride + c - padding;
                                if (iw < 0 || iw >= W) continue;
                                gi[((static_cast<int64_t>(n) * Cin + ci) * H + ih) * W + iw] +=
                                    g * w[((static_cast<int64_t>(co) * Cin + ci) * kh + r) * kw + c];
                            }
                        }
                    }
                }
            }
        }
    }
    return gin;
}

Tensor conv2d_backward_weight(const Tensor& grad_out, const Tensor& input,
                              int stride, int padding, int kh, int kw, Exec exec) {
    const int N = grad_out.dim(0), Cout = grad_out.dim(1), Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    const int Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    Tensor gw({Cout, Cin, kh, kw});
    const float* go = grad_out.data.data();
    const float* in = input.data.data();
    float* g = gw.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int co = 0; co < Cout; ++co) {
        for (int ci = 0; ci < Cin; ++ci) {
            for (int r = 0; r < kh; ++r) {
                for (int c = 0; c < kw; ++c) {
                    float acc = 0.0f;
                    for (int n = 0; n < N; ++n) {
                        for (int oh = 0; oh < Ho; ++oh) {
                            const int ih = oh * stride + r - padding;
                            if (ih < 0 || ih >= H) continue;
                            for (int ow = 0; ow < Wo; ++ow) {
                                const int iw = ow * stride + c - padding;
                                if (iw < 0 || iw >= W) continue;
                                acc += go[((static_cast<int64_t>(n) * Cout + co) * Ho + oh) * Wo + ow] *
                                       in[((static_cast<int64_t>(n) * Cin + ci) * H + ih) * W + iw];
                            }
                        }
                    }
                    g[((static_cast<int64_t>(co) * Cin + ci) * kh + r) * kw + c] = acc;
                }
            }
        }
    }
    return gw;
}

Tensor conv2d_backward_bias(const Tensor& grad_out) {
    const int N = grad_out.dim(0), Cout = grad_out.dim(1);
    const int64_t plane = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    Tensor gb({Cout});
    for (int n = 0; n < N; ++n)
        for (int co = 0; co < Cout; ++co) {
            const float* p = grad_out.data.data() + (static_cast<int64_t>(n) * Cout + co) * plane;
            float acc = gb.data[static_cast<size_t>(co)];
            for (int64_t i = 0; i < plane; ++i) acc += p[i];
            gb.data[static_cast<size_t>(co)] = acc;
        }
    return gb;
}

Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, Exec exec) {
    if (input.ndim() != 2 || weight.ndim() != 2)
        throw std::invalid_argument("linear: input and weight must be 2D");
    const int N = input.dim(0), F = input.dim(1);
    const int O = weight.dim(0);
    if (weight.dim(1) != F)
        throw std::invalid_argument("linear: in_features " + std::to_string(F) +
                                    " do not match weight " + std::to_string(weight.dim(1)));
    if (bias.numel() != O) throw std::invalid_argument("linear: bias size mismatch");
    Tensor out({N, O});
    const float* in = input.data.data();
    const float* w = weight.data.data();
    float* o = out.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int n = 0; n < N; ++n) {
        for (int j = 0; j < O; ++j) {
            float acc = bias.data[static_cast<size_t>(j)];
            const float* xi = in + static_cast<int64_t>(n) * F;
            const float* wj = w + static_cast<int64_t>(j) * F;
            for (int f = 0; f < F; ++f) acc += wj[f] * xi[f];
            o[static_cast<int64_t>(n) * O + j] = acc;
        }
    }
    check_finite(out, "linear");
    return out;
}

Tensor linear_backward_input(const Tensor& grad_out, const Tensor& weight, Exec exec) {
    const int N = grad_out.dim(0), O = grad_out.dim(1), F = weight.dim(1);
    Tensor gin({N, F});
    const float* go = grad_out.data.data();
    const float* w = weight.data.data();
    float* gi = gin.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for num_threads(thread_count()) if (par)
    for (int n = 0; n < N; ++n) {
        for (int f = 0; f < F; ++f) {
            float acc = 0.0f;
            for (int j = 0; j < O; ++j)
                acc += go[static_cast<int64_t>(n) * O + j] * w[static_cast<int64_t>(j) * F + f];
            gi[static_cast<int64_t>(n) * F + f] = acc;
        }
    }
    return gin;
}

Tensor linear_backward_weight(const Tensor& grad_out, const Tensor& input, Exec exec) {
    const int N = grad_out.dim(0), O = grad_out.dim(1), F = input.dim(1);
    Tensor gw({O, F});
    const float* go = grad_out.data.data();
    const float* in = input.data.data();
    float* g = gw.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for num_threads(thread_count()) if (par)
    for (int j = 0; j < O; ++j) {
        for (int f = 0; f < F; ++f) {
            float acc = 0.0f;
            for (int n = 0; n < N; ++n)
                acc += go[static_cast<int64_t>(n) * O + j] * in[static_cast<int64_t>(n) * F + f];
            g[static_cast<int64_t>(j) * F + f] = acc;
        }
    }
    return gw;
}

Tensor linear_backward_bias(const Tensor& grad_out) {
    const int N = grad_out.dim(0), O = grad_out.dim(1);
    Tensor gb({O});
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < O; ++j)
            gb.data[static_cast<size_t>(j)] += grad_out.data[static_cast<size_t>(n) * O + j];
    return gb;
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b, Exec exec) {
    if (a.ndim() != 3 || b.ndim() != 3) throw std::invalid_argument("bmm: operands must be 3D");
    const int B = a.dim(0), M = a.dim(1), K = a.dim(2);
    const int Kb = transpose_b ? b.dim(2) : b.dim(1);
    const int N = transpose_b ? b.dim(1) : b.dim(2);
    if (b.dim(0) != B || Kb != K) throw std::invalid_argument("bmm: shape mismatch");
    Tensor out({B, M, N});
    const float* pa = a.data.data();
    const float* pb = b.data.data();
    float* po = out.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int i = 0; i < B; ++i) {
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                float acc = 0.0f;
                const float* ra = pa + (static_cast<int64_t>(i) * M + m) * K;
                if (transpose_b) {
                    const float* rb = pb + (static_cast<int64_t>(i) * N + n) * K;
                    for (int k = 0; k < K; ++k) acc += ra[k] * rb[k];
                } else {
                    const float* cb = pb + static_cast<int64_t>(i) * K * N + n;
                    for (int k = 0; k < K; ++k) acc += ra[k] * cb[static_cast<int64_t>(k) * N];
                }
                po[(static_cast<int64_t>(i) * M + m) * N + n] = acc;
            }
        }
    }
    check_finite(out, "bmm");
    return out;
}

Tensor maxpool2d_forward(const Tensor& input, int k, int stride,
                         std::vector<int>* argmax, Exec exec) {
    if (input.ndim() != 4) throw std::invalid_argument("maxpool2d: input must be 4D");
    const int N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (k > H || k > W) throw std::invalid_argument("maxpool2d: window larger than input");
    const int Ho = (H - k) / stride + 1;
    const int Wo = (W - k) / stride + 1;
    Tensor out({N, C, Ho, Wo});
    if (argmax) argmax->assign(out.data.size(), 0);
    const float* in = input.data.data();
    float* o = out.data.data();
    const bool par = exec == Exec::Parallel;

#pragma omp parallel for collapse(2) num_threads(thread_count()) if (par)
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* plane = in + (static_cast<int64_t>(n) * C + c) * H * W;
            for (int oh = 0; oh < Ho; ++oh) {
                for (int ow = 0; ow < Wo; ++ow) {
                    float best = -std::numeric_limits<float>::infinity();
                    int best_idx = 0;
                    for (int r = 0; r < k; ++r) {
                        for (int col = 0; col < k; ++col) {
                            const int idx = (oh * stride + r) * W + (ow * stride + col);
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const int64_t off = ((static_cast<int64_t>(n) * C + c) * Ho + oh) * Wo + ow;
                    o[off] = best;
                    if (argmax) (*argmax)[static_cast<size_t>(off)] = best_idx;
                }
            }
        }
    }
    return out;
}

Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<int>& argmax,
                          const std::vector<int>& input_shape) {
    const int N = grad_out.dim(0), C = grad_out.dim(1);
    const int64_t plane_out = static_cast<int64_t>(grad_out.dim(2)) * grad_out.dim(3);
    const int64_t plane_in = static_cast<int64_t>(input_shape[2]) * input_shape[3];
    Tensor gin(input_shape);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const int64_t base_out = (static_cast<int64_t>(n) * C + c) * plane_out;
            const int64_t base_in = (static_cast<int64_t>(n) * C + c) * plane_in;
            for (int64_t i = 0; i < plane_out; ++i)
                gin.data[static_cast<size_t>(base_in + argmax[static_cast<size_t>(base_out + i)])] +=
                    grad_out.data[static_cast<size_t>(base_out + i)];
        }
    return gin;
}

}  // namespace skewprune::kernels
