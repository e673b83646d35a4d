// core/src/graph.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

const char* op_name(Graph::Op op) {
  switch (op) {
    case Graph::Op::kInput: return "input";
    case Graph::Op::kConstant: return "constant";
    case Graph::Op::kMatMul: return "matmul";
    case Graph::Op::kAdd: return "add";
    case Graph::Op::kMul: return "mul";
    case Graph::Op::kAddScalar: return "add_scalar";
    case Graph::Op::kMulScalar: return "mul_scalar";
    case Graph::Op::kExp: return "exp";
    case Graph::Op::kLog: return "log";
    case Graph::Op::kRelu: return "relu";
    case Graph::Op::kSoftmax: return "softmax";
    case Graph::Op::kTranspose: return "transpose";
    case Graph::Op::kConcat: return "concat";
    case Graph::Op::kReshape: return "reshape";
    case Graph::Op::kReduceSum: return "reduce_sum";
    case Graph::Op::kReduceMean: return "reduce_mean";
    case Graph::Op::kSlice: return "slice";
  }
  return "?";
}

// out += a * b for rank-2 row-major tensors.
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      if (av == 0.0) continue;
      const double* brow = pb + l * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  matmul_acc(a, b, out);
  return out;
}

Tensor transpose_plain(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

}  // namespace

int Graph::push(Node node) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  if (nodes_[id].op != Op::kInput && nodes_[id].op != Op::kConstant) {
    compute(id);
  }
  check_finite(id);
  return id;
}

std::string Graph::node_label(int id) const {
  const Node& n = nodes_[id];
  std::string label = "node " + std::to_string(id) + " (" + op_name(n.op);
  if (!n.name.empty()) label += " '" + n.name + "'";
  label += ")";
  return label;
}

const Graph::Node& Graph::node_at(Value v, const char* what) const {
  if (v.graph != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
    throw ContractError(std::string(what) + ": value does not belong to this graph");
  }
  return nodes_[v.id];
}

Graph::Node& Graph::node_at(Value v, const char* what) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node_at(v, what));
}

Value Graph::input(Tensor t, std::string name) {
  Node n;
  n.op = Op::kInput;
  n.needs_grad = t.requires_grad();
  n.out = std::move(t);
  n.name = std::move(name);
  return {this, push(std::move(n))};
}

Value Graph::constant(Tensor t) {
  Node n;
  n.op = Op::kConstant;
  n.needs_grad = false;
  n.out = std::move(t);
  n.out.set_requires_grad(false);
  return {this, push(std::move(n))};
}

void Graph::set_value(Value input, const Tensor& t) {
  Node& n = node_at(input, "set_value");
  if (n.op != Op::kInput) throw ContractError("set_value: " + node_label(input.id) + " is not an input");
  if (!n.out.same_shape(t)) {
    throw ShapeError("set_value: expected " + shape_str(n.out.shape()) + ", got " +
                     shape_str(t.shape()));
  }
  n.out.data() = t.data();
}

void Graph::forward() {
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
    if (nodes_[id].op == Op::kInput || nodes_[id].op == Op::kConstant) continue;
    compute(id);
    check_finite(id);
  }
}

const Tensor& Graph::value(Value v) const { return node_at(v, "value").out; }

bool Graph::requires_grad(Value v) const { return node_at(v, "requires_grad").needs_grad; }

const Tensor& Graph::grad(Value v) const {
  const Node& n = node_at(v, "grad");
  if (!n.needs_grad) throw ContractError("grad: " + node_label(v.id) + " does not require gradients");
  if (!n.grad_live) throw ContractError("grad: backward has not been run");
  return n.grad;
}

void Graph::check_finite(int id) const {
  if (!nodes_[id].out.all_finite()) {
    throw NumericError(node_label(id) + ": non-finite output");
  }
}

void Graph::compute(int id) {
  Node& n = nodes_[id];
  const auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].out; };
  switch (n.op) {
    case Op::kInput:
    case Op::kConstant:
      break;
    case Op::kMatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (n.out.empty()) n.out = Tensor({a.rows(), b.cols()});
      std::fill(n.out.data().begin(), n.out.data().end(), 0.0);
      matmul_acc(a, b, n.out);
      break;
    }
    case Op::kAdd: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = a[i] + b[i];
      break;
    }
    case Op::kMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = a[i] * b[i];
      break;
    }
    case Op::kAddScalar: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = a[i] + n.scalar;
      break;
    }
    case Op::kMulScalar: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = a[i] * n.scalar;
      break;
    }
    case Op::kExp: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = std::exp(a[i]);
      break;
    }
    case Op::kLog: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = std::log(a[i]);
      break;
    }
    case Op::kRelu: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      for (std::size_t i = 0; i < a.size(); ++i) n.out[i] = a[i] > 0.0 ? a[i] : 0.0;
      break;
    }
    case Op::kSoftmax: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(a.shape());
      const std::size_t width = a.last_dim();
      const std::size_t rows = a.size() / width;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* src = a.data().data() + r * width;
        double* dst = n.out.data().data() + r * width;
        double mx = src[0];
        for (std::size_t j = 1; j < width; ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          dst[j] = std::exp(src[j] - mx);
          sum += dst[j];
        }
        for (std::size_t j = 0; j < width; ++j) dst[j] /= sum;
      }
      break;
    }
    case Op::kTranspose: {
      n.out = transpose_plain(in(0));
      break;
    }
    case Op::kConcat: {
      const std::size_t width = n.out.last_dim();
      const std::size_t leading = n.out.size() / width;
      double* dst = n.out.data().data();
      for (std::size_t r = 0; r < leading; ++r) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < n.inputs.size(); ++k) {
          const Tensor& part = in(k);
          const std::size_t w = part.last_dim();
          const double* src = part.data().data() + r * w;
          std::copy(src, src + w, dst + r * width + off);
          off += w;
        }
      }
      break;
    }
    case Op::kReshape: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor(n.aux);
      n.out.data() = a.data();
      break;
    }
    case Op::kReduceSum:
    case Op::kReduceMean: {
      const Tensor& a = in(0);
      if (n.out.empty()) n.out = Tensor({1});
      double s = 0.0;
      for (double v : a.data()) s += v;
      n.out[0] = n.op == Op::kReduceMean ? s / static_cast<double>(a.size()) : s;
      break;
    }
    case Op::kSlice: {
      const Tensor& a = in(0);
      if (n.aux.size() == 4) {
        const std::size_t r0 = n.aux[0], r1 = n.aux[1], c0 = n.aux[2], c1 = n.aux[3];
        if (n.out.empty()) n.out = Tensor({r1 - r0, c1 - c0});
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t c = c0; c < c1; ++c) n.out.at(r - r0, c - c0) = a.at(r, c);
      } else {
        const std::size_t b = n.aux[0], e = n.aux[1];
        if (n.out.empty()) n.out = Tensor({e - b});
        for (std::size_t i = b; i < e; ++i) n.out[i - b] = a[i];
      }
      break;
    }
  }
}

void Graph::backward(Value scalar_output) {
  const Node& out_node = node_at(scalar_output, "backward");
  if (out_node.out.size() != 1) {
    throw ContractError("backward: " + node_label(scalar_output.id) + " is not scalar (shape " +
                        shape_str(out_node.out.shape()) + ")");
  }
  const int out_id = scalar_output.id;
  for (int id = 0; id < static_cast<int>(nodes_.size()); ++id) {
    Node& n = nodes_[id];
    if (!n.needs_grad) continue;
    if (id > out_id) {
      n.grad_live = false;
      continue;
    }
    if (n.grad.same_shape(n.out)) {
      std::fill(n.grad.data().begin(), n.grad.data().end(), 0.0);
    } else {
      n.grad = Tensor(n.out.shape());
    }
    n.grad_live = true;
  }
  if (!out_node.needs_grad) return;  // no differentiable leaf feeds the output
  nodes_[out_id].grad[0] = 1.0;

  for (int id = out_id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::kInput || n.op == Op::kConstant) continue;
    const Tensor& g = n.grad;
    const auto in_node = [&](std::size_t k) -> Node& { return nodes_[n.inputs[k]]; };
    const auto wants = [&](std::size_t k) { return in_node(k).needs_grad; };
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kMatMul: {
        const Tensor& a = in_node(0).out;
        const Tensor& b = in_node(1).out;
        if (wants(0)) matmul_acc(g, transpose_plain(b), in_node(0).grad);
        if (wants(1)) matmul_acc(transpose_plain(a), g, in_node(1).grad);
        break;
      }
      case Op::kAdd: {
        for (std::size_t k = 0; k < 2; ++k) {
          if (!wants(k)) continue;
          Tensor& gi = in_node(k).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& a = in_node(0).out;
        const Tensor& b = in_node(1).out;
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * b[i];
        }
        if (wants(1)) {
          Tensor& gi = in_node(1).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * a[i];
        }
        break;
      }
      case Op::kAddScalar: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case Op::kMulScalar: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * n.scalar;
        }
        break;
      }
      case Op::kExp: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] * n.out[i];
        }
        break;
      }
      case Op::kLog: {
        if (wants(0)) {
          const Tensor& a = in_node(0).out;
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i] / a[i];
        }
        break;
      }
      case Op::kRelu: {
        if (wants(0)) {
          const Tensor& a = in_node(0).out;
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += a[i] > 0.0 ? g[i] : 0.0;
        }
        break;
      }
      case Op::kSoftmax: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          const std::size_t width = n.out.last_dim();
          const std::size_t rows = n.out.size() / width;
          for (std::size_t r = 0; r < rows; ++r) {
            const double* p = n.out.data().data() + r * width;
            const double* gr = g.data().data() + r * width;
            double dot = 0.0;
            for (std::size_t j = 0; j < width; ++j) dot += gr[j] * p[j];
            double* gd = gi.data().data() + r * width;
            for (std::size_t j = 0; j < width; ++j) gd[j] += p[j] * (gr[j] - dot);
          }
        }
        break;
      }
      case Op::kTranspose: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          const std::size_t m = n.out.rows(), c = n.out.cols();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j) gi.at(j, i) += g.at(i, j);
        }
        break;
      }
      case Op::kConcat: {
        const std::size_t width = n.out.last_dim();
        const std::size_t leading = n.out.size() / width;
        for (std::size_t r = 0; r < leading; ++r) {
          std::size_t off = 0;
          for (std::size_t k = 0; k < n.inputs.size(); ++k) {
            const std::size_t w = in_node(k).out.last_dim();
            if (wants(k)) {
              Tensor& gi = in_node(k).grad;
              const double* src = g.data().data() + r * width + off;
              double* dst = gi.data().data() + r * w;
              for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
            }
            off += w;
          }
        }
        break;
      }
      case Op::kReshape: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
        break;
      }
      case Op::kReduceSum: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          const double gv = g[0];
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += gv;
        }
        break;
      }
      case Op::kReduceMean: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          const double gv = g[0] / static_cast<double>(gi.size());
          for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += gv;
        }
        break;
      }
      case Op::kSlice: {
        if (wants(0)) {
          Tensor& gi = in_node(0).grad;
          if (n.aux.size() == 4) {
            const std::size_t r0 = n.aux[0], r1 = n.aux[1], c0 = n.aux[2], c1 = n.aux[3];
            for (std::size_t r = r0; r < r1; ++r)
              for (std::size_t c = c0; c < c1; ++c) gi.at(r, c) += g.at(r - r0, c - c0);
          } else {
            const std::size_t b = n.aux[0], e = n.aux[1];
            for (std::size_t i = b; i < e; ++i) gi[i] += g[i - b];
          }
        }
        break;
      }
    }
  }
}

// ---- op builders ----

namespace {

void require_same_graph(const Value& a, const Value& b, const char* what) {
  if (a.graph == nullptr || a.graph != b.graph) {
    throw ContractError(std::string(what) + ": operands belong to different graphs");
  }
}

}  // namespace

Value Graph::matmul(Value a, Value b) {
  require_same_graph(a, b, "matmul");
  const Tensor& ta = node_at(a, "matmul").out;
  const Tensor& tb = node_at(b, "matmul").out;
  if (ta.rank() != 2 || tb.rank() != 2) {
    throw ShapeError("matmul: rank-2 operands required, got " + shape_str(ta.shape()) + " x " +
                     shape_str(tb.shape()) + " at node " + std::to_string(nodes_.size()));
  }
  if (ta.cols() != tb.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_str(ta.shape()) + " x " +
                     shape_str(tb.shape()) + " at node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kMatMul;
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::add(Value a, Value b) {
  require_same_graph(a, b, "add");
  const Tensor& ta = node_at(a, "add").out;
  const Tensor& tb = node_at(b, "add").out;
  if (!ta.same_shape(tb)) {
    throw ShapeError("add: shape mismatch " + shape_str(ta.shape()) + " vs " +
                     shape_str(tb.shape()) + " at node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::mul(Value a, Value b) {
  require_same_graph(a, b, "mul");
  const Tensor& ta = node_at(a, "mul").out;
  const Tensor& tb = node_at(b, "mul").out;
  if (!ta.same_shape(tb)) {
    throw ShapeError("mul: shape mismatch " + shape_str(ta.shape()) + " vs " +
                     shape_str(tb.shape()) + " at node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kMul;
  n.inputs = {a.id, b.id};
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::add_scalar(Value a, double s) {
  node_at(a, "add_scalar");
  Node n;
  n.op = Op::kAddScalar;
  n.inputs = {a.id};
  n.scalar = s;
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::mul_scalar(Value a, double s) {
  node_at(a, "mul_scalar");
  Node n;
  n.op = Op::kMulScalar;
  n.inputs = {a.id};
  n.scalar = s;
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::exp(Value a) {
  node_at(a, "exp");
  Node n;
  n.op = Op::kExp;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::log(Value a) {
  node_at(a, "log");
  Node n;
  n.op = Op::kLog;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::relu(Value a) {
  node_at(a, "relu");
  Node n;
  n.op = Op::kRelu;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::softmax(Value a) {
  const Tensor& ta = node_at(a, "softmax").out;
  if (ta.rank() < 1 || ta.last_dim() == 0) {
    throw ShapeError("softmax: needs a non-empty last axis at node " +
                     std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::transpose(Value a) {
  const Tensor& ta = node_at(a, "transpose").out;
  if (ta.rank() != 2) {
    throw ShapeError("transpose: rank-2 required, got " + shape_str(ta.shape()) + " at node " +
                     std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kTranspose;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::concat(const std::vector<Value>& parts) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Tensor& first = node_at(parts[0], "concat").out;
  const std::size_t rank = first.rank();
  std::size_t width = 0;
  Node n;
  n.op = Op::kConcat;
  n.needs_grad = false;
  for (const Value& v : parts) {
    require_same_graph(parts[0], v, "concat");
    const Tensor& t = node_at(v, "concat").out;
    if (t.rank() != rank) {
      throw ShapeError("concat: rank mismatch at node " + std::to_string(nodes_.size()));
    }
    for (std::size_t d = 0; d + 1 < rank; ++d) {
      if (t.shape()[d] != first.shape()[d]) {
        throw ShapeError("concat: leading dims differ, " + shape_str(t.shape()) + " vs " +
                         shape_str(first.shape()) + " at node " + std::to_string(nodes_.size()));
      }
    }
    width += t.last_dim();
    n.inputs.push_back(v.id);
    n.needs_grad = n.needs_grad || nodes_[v.id].needs_grad;
  }
  std::vector<std::size_t> shape = first.shape();
  shape.back() = width;
  n.out = Tensor(std::move(shape));
  return {this, push(std::move(n))};
}

Value Graph::reshape(Value a, std::vector<std::size_t> shape) {
  const Tensor& ta = node_at(a, "reshape").out;
  std::size_t prod = 1;
  for (std::size_t d : shape) prod *= d;
  if (prod != ta.size()) {
    throw ShapeError("reshape: " + shape_str(ta.shape()) + " -> " + shape_str(shape) +
                     " changes element count at node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kReshape;
  n.inputs = {a.id};
  n.aux = std::move(shape);
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::reduce_sum(Value a) {
  node_at(a, "reduce_sum");
  Node n;
  n.op = Op::kReduceSum;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::reduce_mean(Value a) {
  node_at(a, "reduce_mean");
  Node n;
  n.op = Op::kReduceMean;
  n.inputs = {a.id};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::slice(Value a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  const Tensor& ta = node_at(a, "slice").out;
  if (ta.rank() != 2) {
    throw ShapeError("slice: rank-2 required, got " + shape_str(ta.shape()) + " at node " +
                     std::to_string(nodes_.size()));
  }
  if (r0 >= r1 || r1 > ta.rows() || c0 >= c1 || c1 > ta.cols()) {
    throw ShapeError("slice: bounds [" + std::to_string(r0) + "," + std::to_string(r1) + ")x[" +
                     std::to_string(c0) + "," + std::to_string(c1) + ") invalid for " +
                     shape_str(ta.shape()) + " at node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kSlice;
  n.inputs = {a.id};
  n.aux = {r0, r1, c0, c1};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value Graph::slice(Value a, std::size_t b, std::size_t e) {
  const Tensor& ta = node_at(a, "slice").out;
  if (ta.rank() != 1) {
    throw ShapeError("slice: rank-1 required, got " + shape_str(ta.shape()) + " at node " +
                     std::to_string(nodes_.size()));
  }
  if (b >= e || e > ta.size()) {
    throw ShapeError("slice: bounds [" + std::to_string(b) + "," + std::to_string(e) +
                     ") invalid for " + shape_str(ta.shape()) + " at node " +
                     std::to_string(nodes_.size()));
  }
  Node n;
  n.op = Op::kSlice;
  n.inputs = {a.id};
  n.aux = {b, e};
  n.needs_grad = nodes_[a.id].needs_grad;
  return {this, push(std::move(n))};
}

Value sub(Value a, Value b) { return a.graph->add(a, a.graph->mul_scalar(b, -1.0)); }

Value square(Value a) { return a.graph->mul(a, a); }

double grad_check(const std::function<Value(Graph&, Value)>& build_scalar_fn,
                  const Tensor& point, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) {
    throw ContractError("grad_check: eps must lie in (0, 1e-2]");
  }
  Graph g;
  Tensor p = point;
  p.set_requires_grad(true);
  Value x = g.input(std::move(p), "grad_check_point");
  Value y = build_scalar_fn(g, x);
  if (g.value(y).size() != 1) throw ContractError("grad_check: function output is not scalar");
  g.backward(y);
  const Tensor analytic = g.grad(x);

  Tensor probe = point;
  double max_err = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    probe[i] = point[i] + eps;
    g.set_value(x, probe);
    g.forward();
    const double fp = g.value(y)[0];
    probe[i] = point[i] - eps;
    g.set_value(x, probe);
    g.forward();
    const double fm = g.value(y)[0];
    probe[i] = point[i];
    const double fd = (fp - fm) / (2.0 * eps);
    const double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace hadua
