// core/include/hadua/graph.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_GRAPH_HPP_
#define HADUA_GRAPH_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hadua/tensor.hpp"

namespace hadua {

class Graph;

/// Handle to a node in a Graph. Cheap to copy; only valid while the
/// owning Graph is alive.
struct Value {
  Graph* graph = nullptr;
  int id = -1;
  bool valid() const { return graph != nullptr && id >= 0; }
};

/// Reverse-mode automatic differentiation tape over dense double tensors.
///
/// Nodes are appended in construction order (which is already a topological
/// order) and evaluated eagerly; forward() re-evaluates every non-leaf node
/// from the current input bindings, backward() accumulates gradients into
/// every requires_grad leaf with one reverse sweep. Tensors are checked for
/// NaN/Inf after every operation; a non-finite result throws NumericError
/// naming the node.
///
/// The op set is closed: matmul, add, mul (elementwise), add/mul by scalar,
/// exp, log, relu, softmax over the last axis (max-subtracted), transpose,
/// n-ary concat over the last axis, reshape, reduce-sum/mean to scalar, and
/// slice. Everything else is composed from these. Broadcasting is
/// scalar-only; shape expansion is explicit (e.g. via matmul with a ones
/// column).
class Graph {
 public:
  enum class Op {
    kInput,
    kConstant,
    kMatMul,
    kAdd,
    kMul,
    kAddScalar,
    kMulScalar,
    kExp,
    kLog,
    kRelu,
    kSoftmax,
    kTranspose,
    kConcat,
    kReshape,
    kReduceSum,
    kReduceMean,
    kSlice
  };

  // Leaves. input() honors t.requires_grad() and may be rebound with
  // set_value(); constants are frozen.
  Value input(Tensor t, std::string name = {});
  Value constant(Tensor t);
  Value constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  // Rebind an input leaf (same shape required) for re-evaluation.
  void set_value(Value input, const Tensor& t);

  // Recompute every non-leaf node from the current leaf values.
  // Deterministic: repeated calls produce bit-identical outputs.
  void forward();

  // Reverse sweep from a scalar output. Gradients of requires_grad leaves
  // accumulate by sum over all paths; the graph itself is unchanged.
  void backward(Value scalar_output);

  const Tensor& value(Value v) const;
  const Tensor& grad(Value v) const;
  bool requires_grad(Value v) const;

  // Primitive ops.
  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  Value add_scalar(Value a, double s);
  Value mul_scalar(Value a, double s);
  Value exp(Value a);
  Value log(Value a);
  Value relu(Value a);
  Value softmax(Value a);
  Value transpose(Value a);
  Value concat(const std::vector<Value>& parts);
  Value reshape(Value a, std::vector<std::size_t> shape);
  Value reduce_sum(Value a);
  Value reduce_mean(Value a);
  Value slice(Value a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1);
  Value slice(Value a, std::size_t b, std::size_t e);  // rank-1

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor out;
    Tensor grad;
    bool needs_grad = false;
    bool grad_live = false;
    double scalar = 0.0;
    std::vector<std::size_t> aux;  // reshape target / slice bounds
    std::string name;
  };

  int push(Node node);
  void compute(int id);
  void check_finite(int id) const;
  const Node& node_at(Value v, const char* what) const;
  Node& node_at(Value v, const char* what);
  std::string node_label(int id) const;

  std::vector<Node> nodes_;
};

// Composed conveniences.
Value sub(Value a, Value b);
Value square(Value a);

inline Value operator+(Value a, Value b) { return a.graph->add(a, b); }
inline Value operator*(Value a, Value b) { return a.graph->mul(a, b); }
inline Value operator-(Value a, Value b) { return sub(a, b); }
inline Value operator*(double s, Value a) { return a.graph->mul_scalar(a, s); }
inline Value operator*(Value a, double s) { return a.graph->mul_scalar(a, s); }
inline Value operator+(Value a, double s) { return a.graph->add_scalar(a, s); }

/// Max over coordinates of |analytic - central_difference| / max(1, |analytic|)
/// for a scalar function built on a fresh graph from `point`.
/// eps must lie in (0, 1e-2].
double grad_check(const std::function<Value(Graph&, Value)>& build_scalar_fn,
                  const Tensor& point, double eps);

}  // namespace hadua

#endif  // HADUA_GRAPH_HPP_
