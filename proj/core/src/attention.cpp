// core/src/attention.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/attention.hpp"

#include <cmath>

#include "hadua/errors.hpp"

namespace hadua {

AttentionParams AttentionParams::init(std::size_t width, std::size_t heads,
                                      std::mt19937_64& gen) {
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw ConfigError("attention: width " + std::to_string(width) +
                      " not divisible by heads " + std::to_string(heads));
  }
  AttentionParams p;
  p.width = width;
  p.heads = heads;
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto make = [&](std::size_t r, std::size_t c) {
    Tensor t({r, c});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(gen);
    return t;
  };
  const std::size_t dh = width / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.push_back(make(width, dh));
    p.wk.push_back(make(width, dh));
    p.wv.push_back(make(width, dh));
  }
  p.wo = make(width, width);
  return p;
}

void AttentionParams::validate() const {
  if (width == 0 || heads == 0 || width % heads != 0) {
    throw ConfigError("attention: width not divisible by heads");
  }
  const std::size_t dh = head_dim();
  if (wq.size() != heads || wk.size() != heads || wv.size() != heads) {
    throw ShapeError("attention: head weight count mismatch");
  }
  auto check = [&](const Tensor& w, const char* name) {
    if (w.rank() != 2 || w.rows() != width || w.cols() != dh) {
      throw ShapeError(std::string("attention: ") + name + " must be width x head_dim");
    }
    if (!w.all_finite()) throw NumericError(std::string("attention: ") + name + " non-finite");
  };
  for (std::size_t h = 0; h < heads; ++h) {
    check(wq[h], "wq");
    check(wk[h], "wk");
    check(wv[h], "wv");
  }
  if (wo.rank() != 2 || wo.rows() != width || wo.cols() != width) {
    throw ShapeError("attention: wo must be width x width");
  }
  if (!wo.all_finite()) throw NumericError("attention: wo non-finite");
}

BoundAttention bind_attention(Graph& g, const AttentionParams& params, bool trainable) {
  params.validate();
  BoundAttention b;
  b.width = params.width;
  b.heads = params.heads;
  auto bind = [&](const Tensor& t) {
    if (!trainable) return g.constant(t);
    Tensor copy = t;
    copy.set_requires_grad(true);
    return g.input(copy);
  };
  for (std::size_t h = 0; h < params.heads; ++h) {
    b.wq.push_back(bind(params.wq[h]));
    b.wk.push_back(bind(params.wk[h]));
    b.wv.push_back(bind(params.wv[h]));
  }
  b.wo = bind(params.wo);
  return b;
}

Value scaled_dot_attention(Graph& g, Value q, Value k, Value v) {
  const Tensor& tq = g.value(q);
  const Tensor& tk = g.value(k);
  const Tensor& tv = g.value(v);
  if (tq.rank() != 2 || tk.rank() != 2 || tv.rank() != 2) {
    throw ShapeError("scaled_dot_attention: rank-2 operands required");
  }
  if (tq.cols() != tk.cols()) {
    throw ShapeError("scaled_dot_attention: query width " + std::to_string(tq.cols()) +
                     " != key width " + std::to_string(tk.cols()));
  }
  if (tk.rows() != tv.rows()) {
    throw ShapeError("scaled_dot_attention: key count != value count");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(tq.cols()));
  Value logits = g.mul_scalar(g.matmul(q, g.transpose(k)), scale);
  Value weights = g.softmax(logits);
  return g.matmul(weights, v);
}

Value multi_head_attention(Graph& g, const BoundAttention& attn, Value query_tokens,
                           Value kv_tokens) {
  const Tensor& tq = g.value(query_tokens);
  const Tensor& tkv = g.value(kv_tokens);
  if (tq.rank() != 2 || tkv.rank() != 2 || tq.cols() != attn.width ||
      tkv.cols() != attn.width) {
    throw ShapeError("multi_head_attention: token width must equal attention width " +
                     std::to_string(attn.width));
  }
  std::vector<Value> heads;
  heads.reserve(attn.heads);
  for (std::size_t h = 0; h < attn.heads; ++h) {
    Value qh = g.matmul(query_tokens, attn.wq[h]);
    Value kh = g.matmul(kv_tokens, attn.wk[h]);
    Value vh = g.matmul(kv_tokens, attn.wv[h]);
    heads.push_back(scaled_dot_attention(g, qh, kh, vh));
  }
  Value cat = attn.heads == 1 ? heads[0] : g.concat(heads);
  return g.matmul(cat, attn.wo);
}

Tensor block_diagonal_mask(std::size_t samples, std::size_t tokens) {
  const std::size_t n = samples * tokens;
  Tensor mask = Tensor::full({n, n}, -1e30);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < tokens; ++i) {
      for (std::size_t j = 0; j < tokens; ++j) {
        mask.at(s * tokens + i, s * tokens + j) = 0.0;
      }
    }
  }
  return mask;
}

Value multi_head_attention_masked(Graph& g, const BoundAttention& attn, Value query_tokens,
                                  Value kv_tokens, Value logit_mask) {
  const Tensor& tq = g.value(query_tokens);
  const Tensor& tkv = g.value(kv_tokens);
  if (tq.rank() != 2 || tkv.rank() != 2 || tq.cols() != attn.width ||
      tkv.cols() != attn.width) {
    throw ShapeError("multi_head_attention_masked: token width must equal attention width");
  }
  const Tensor& tm = g.value(logit_mask);
  if (tm.rank() != 2 || tm.rows() != tq.rows() || tm.cols() != tkv.rows()) {
    throw ShapeError("multi_head_attention_masked: mask shape mismatch");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(attn.width / attn.heads));
  std::vector<Value> heads;
  heads.reserve(attn.heads);
  for (std::size_t h = 0; h < attn.heads; ++h) {
    Value qh = g.matmul(query_tokens, attn.wq[h]);
    Value kh = g.matmul(kv_tokens, attn.wk[h]);
    Value vh = g.matmul(kv_tokens, attn.wv[h]);
    Value logits = g.add(g.mul_scalar(g.matmul(qh, g.transpose(kh)), scale), logit_mask);
    heads.push_back(g.matmul(g.softmax(logits), vh));
  }
  Value cat = attn.heads == 1 ? heads[0] : g.concat(heads);
  return g.matmul(cat, attn.wo);
}

}  // namespace hadua
