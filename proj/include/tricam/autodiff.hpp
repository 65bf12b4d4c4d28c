#pragma once

// Minimal tape-based reverse-mode automatic differentiation.
//
// A Graph records coarse operations (dense layers, convolutions, pooling,
// elementwise maps) as they run. backward() walks the tape in reverse and
// accumulates gradients. Parameter leaves accumulate straight into the
// owning Parameter::grad, so one graph per batch is the intended usage.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tricam/kernels.hpp"
#include "tricam/tensor.hpp"

namespace tricam::nn {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Handle to a node in a Graph.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Constant input; never receives a gradient.
  Var input(Tensor value);
  /// Constant that aliases caller-owned storage (inference-only weights).
  Var alias(const Tensor& value);
  /// Trainable leaf. The parameter must outlive the graph.
  Var parameter(Parameter& p);

  const Tensor& value(Var v) const;
  const Shape& shape(Var v) const { return value(v).shape; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient buffer of v, zero-initialized on first access.
  Tensor& grad(Var v);
  bool has_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 for a scalar loss and runs the tape backwards.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  using BackwardFn = std::function<void(Graph&)>;
  /// Appends a computed node. backward_fn is dropped when no input needs a
  /// gradient.
  Var record(Tensor value, bool needs_grad, BackwardFn backward_fn);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // parameter leaves alias their storage
    Tensor grad;
    Tensor* grad_sink = nullptr;
    bool needs_grad = false;
    bool grad_ready = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Operations. Shapes are noted as [rows, cols] for 2-D tensors.

/// x[B, in] * w[in, out] + b[out]
Var linear(Graph& g, Var x, Var w, Var b);
Var relu(Graph& g, Var x);
/// x[N, C, H, W] convolved with w[Cout, C*k*k] + b[Cout].
Var conv2d(Graph& g, Var x, Var w, Var b, std::size_t kernel, std::size_t stride, std::size_t pad);
/// 2x2 / stride 2 max pooling over the last two dims of x[N, C, H, W].
Var maxpool2(Graph& g, Var x);
/// Same data, new shape.
Var reshape(Graph& g, Var x, Shape shape);
/// Concatenates 2-D tensors with equal row counts along columns.
Var concat_cols(Graph& g, std::span<const Var> parts);
/// Picks columns of x[B, C] in the given order.
Var gather_cols(Graph& g, Var x, std::vector<std::size_t> cols);
/// Scales each row r of x[R, ...] by s[r]; s is [R] or [R, 1].
Var scale_rows(Graph& g, Var x, Var s);
/// Row-wise softmax of x[B, K]. The normalizer sums sorted terms so the
/// result is exactly equivariant under column permutations.
Var softmax_rows(Graph& g, Var x);
/// Mean of (pred - target)^2 over entries of rows whose mask is nonzero;
/// mask is [B]. Returns 0 when no row is valid.
Var masked_mse(Graph& g, Var pred, const Tensor& target, const Tensor& mask);
/// sum_i coef_i * term_i for scalar terms.
Var weighted_sum(Graph& g, std::span<const Var> terms, std::span<const double> coefs);

}  // namespace tricam::nn
