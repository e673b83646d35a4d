// core/include/hadua/attention.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_ATTENTION_HPP_
#define HADUA_ATTENTION_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include "hadua/graph.hpp"
#include "hadua/tensor.hpp"

namespace hadua {

/// Multi-head attention weights operating on token sequences of a given
/// width. Per head, W^Q/W^K/W^V project width -> width/heads; W^O projects
/// the concatenated heads back to width.
struct AttentionParams {
  std::size_t width = 0;
  std::size_t heads = 1;
  std::vector<Tensor> wq, wk, wv;  // heads tensors of width x head_dim
  Tensor wo;                       // width x width

  std::size_t head_dim() const { return width / heads; }

  /// Seeded uniform init in +-1/sqrt(width).
  static AttentionParams init(std::size_t width, std::size_t heads, std::mt19937_64& gen);

  void validate() const;
};

/// Graph bindings of one attention block's weights.
struct BoundAttention {
  std::size_t width = 0;
  std::size_t heads = 1;
  std::vector<Value> wq, wk, wv;
  Value wo;
};

/// Bind weights into a graph; trainable weights get gradients.
BoundAttention bind_attention(Graph& g, const AttentionParams& params, bool trainable);

/// softmax(Q K^T / sqrt(d_h)) V. Q is n_q x d_h, K is n_k x d_h, V is
/// n_k x d_v (the value width may differ; the output is n_q x d_v).
Value scaled_dot_attention(Graph& g, Value q, Value k, Value v);

/// Concat(head_1..head_H) W^O over token sequences. Self-attention when
/// query_tokens and kv_tokens are the same value.
Value multi_head_attention(Graph& g, const BoundAttention& attn, Value query_tokens,
                           Value kv_tokens);

/// Batched variant: tokens of a whole batch are stacked into one sequence
/// and an additive logit mask (0 in-block, -1e30 off-block) keeps every
/// sample attending only to its own tokens. After the max-subtracted
/// softmax, masked entries underflow to exactly zero, so the result equals
/// running multi_head_attention per sample.
Value multi_head_attention_masked(Graph& g, const BoundAttention& attn, Value query_tokens,
                                  Value kv_tokens, Value logit_mask);

/// The block-diagonal mask for `samples` blocks of `tokens` tokens each.
Tensor block_diagonal_mask(std::size_t samples, std::size_t tokens);

}  // namespace hadua

#endif  // HADUA_ATTENTION_HPP_
