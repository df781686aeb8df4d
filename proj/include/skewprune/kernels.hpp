#pragma once

#include "skewprune/tensor.hpp"

#include <vector>

namespace skewprune::kernels {

// Serial is the reference path; Parallel distributes independent output
// elements across OpenMP threads with the same inner summation order, so
// both paths produce bit-identical results.
enum class Exec { Serial, Parallel };

// Process-wide default used by the tape ops. Honors SKEWPRUNE_THREADS.
Exec default_exec();
void set_default_exec(Exec e);
int thread_count();

// Cross-correlation, NCHW input, OIHW weight.
Tensor conv2d_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                      int stride, int padding, Exec exec);
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& weight,
                             int stride, int padding, int H, int W, Exec exec);
Tensor conv2d_backward_weight(const Tensor& grad_out, const Tensor& input,
                              int stride, int padding, int kh, int kw, Exec exec);
Tensor conv2d_backward_bias(const Tensor& grad_out);

// y[n,o] = sum_f w[o,f] x[n,f] + b[o]; weight is [O,F].
Tensor linear_forward(const Tensor& input, const Tensor& weight, const Tensor& bias, Exec exec);
Tensor linear_backward_input(const Tensor& grad_out, const Tensor& weight, Exec exec);
Tensor linear_backward_weight(const Tensor& grad_out, const Tensor& input, Exec exec);
Tensor linear_backward_bias(const Tensor& grad_out);

// Batched matmul on 3D tensors: A [B,M,K] x B [B,K,N] -> [B,M,N].
// transpose_b treats the second operand as [B,N,K].
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b, Exec exec);

// k x k window, stride s; argmax holds the flat offset within each (n,c) plane.
Tensor maxpool2d_forward(const Tensor& input, int k, int stride,
                         std::vector<int>* argmax, Exec exec);
Tensor maxpool2d_backward(const Tensor& grad_out, const std::vector<int>& argmax,
                          const std::vector<int>& input_shape);

}  // namespace skewprune::kernels
