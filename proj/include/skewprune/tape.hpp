#pragma once

#include "skewprune/kernels.hpp"
#include "skewprune/tensor.hpp"

#include <functional>
#include <vector>

namespace skewprune {

// Handle into a GradTape node.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in execution order, so a reverse
// index sweep is a reverse topological order and each op's backward runs
// exactly once. With recording off the tape only stores forward values
// (inference mode).
class GradTape {
  public:
    explicit GradTape(bool recording = true) : recording_(recording) {}

    Var leaf(Tensor value, bool requires_grad = false);

    const Tensor& value(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).value; }
    bool requires_grad(Var v) const { return nodes_.at(static_cast<size_t>(v.id)).requires_grad; }

    // Gradient of the last backward() target w.r.t. v; zeros if v was unreachable.
    Tensor grad(Var v) const;

    void backward(Var loss);

    size_t size() const { return nodes_.size(); }

    // --- ops -------------------------------------------------------------
    Var conv2d(Var input, Var weight, Var bias, int stride, int padding);
    Var linear(Var input, Var weight, Var bias);     // [N,F] -> [N,O]
    Var linear3d(Var input, Var weight, Var bias);   // [B,T,F] -> [B,T,O]
    Var maxpool2d(Var input, int k, int stride);
    Var relu(Var x);
    Var gelu(Var x);
    Var layernorm(Var x, Var gamma, Var beta, float eps = 1e-5f);
    Var softmax_last(Var x);
    Var bmm(Var a, Var b, bool transpose_b = false);
    Var scale(Var x, float c);
    Var add(Var a, Var b);                       // same shape
    Var add_broadcast(Var x, Var y);             // y.shape == x.shape[1:], added per batch row
    Var prepend_token(Var x, Var token);         // [B,T,D] + [D] -> [B,T+1,D]
    Var slice_last(Var x, int start, int len);
    Var concat_last(const std::vector<Var>& xs);
    Var reshape(Var x, std::vector<int> new_shape);
    Var transpose_12(Var x);                     // [B,A,C] -> [B,C,A]
    Var residual_add_pruned(Var x_in, Var residual, const std::vector<int>& keep);
    Var cross_entropy(Var logits, const std::vector<int>& labels);  // mean, scalar

  private:
    struct Node {
        Tensor value;
        bool requires_grad = false;
        std::function<void(GradTape&, const Tensor&)> backward_fn;  // receives grad of value
    };

    Var push(Tensor value, bool requires_grad,
             std::function<void(GradTape&, const Tensor&)> backward_fn,
             const char* op_name);
    void accumulate(Var v, const Tensor& g);
    bool rg(Var v) const { return nodes_[static_cast<size_t>(v.id)].requires_grad; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool recording_;
};

// Non-tape helpers.
Tensor softmax(const Tensor& x, int axis);
std::vector<int> argmax_rows(const Tensor& logits);  // [N,C] -> per-row argmax

}  // namespace skewprune
