// core/include/hadua/model.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_MODEL_HPP_
#define HADUA_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <string>

#include "hadua/attention.hpp"
#include "hadua/graph.hpp"
#include "hadua/tensor.hpp"

namespace hadua {

/// The cross-attention block always queries with the EEG side; eye features
/// only ever serve as keys/values.
inline constexpr const char* kCrossAttentionQueryModality = "eeg";

struct ModelConfig {
  std::size_t eeg_dim = 0;
  std::size_t eye_dim = 0;
  std::size_t d_model = 64;
  std::size_t encoder_hidden = 64;
  std::size_t classifier_hidden = 64;
  std::size_t heads = 2;
  std::size_t tokens = 8;  // each d_model vector is attended as `tokens` tokens
  int classes = 3;
  bool use_attention = true;

  // How the attended representations combine. With attention off the fused
  // vector is always concat(enc_eeg, enc_eye).
  enum class Fusion { kEegCross, kEegEyeCross };
  Fusion fusion = Fusion::kEegCross;

  std::size_t token_dim() const { return d_model / tokens; }
  std::size_t fused_dim() const;
  void validate() const;
};

struct DenseLayer {
  Tensor w;  // in x out
  Tensor b;  // 1 x out
};

struct Encoder {
  DenseLayer l1, l2;
};

/// All trainable state of the network.
struct ModelParams {
  ModelConfig config;
  Encoder eeg_encoder, eye_encoder;
  AttentionParams eeg_self, eye_self, cross;
  DenseLayer cls1, cls2;

  /// Seeded deterministic init, uniform +-1/sqrt(fan_in), zero biases.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  /// Visit every trainable tensor in a fixed order (attention tensors are
  /// visited only when attention is enabled).
  void for_each_tensor(const std::function<void(const std::string&, Tensor&)>& fn);
  void for_each_tensor(
      const std::function<void(const std::string&, const Tensor&)>& fn) const;
};

/// Versioned JSON checkpoint; doubles round-trip bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

struct BoundModel {
  ModelConfig config;
  Value eeg_w1, eeg_b1, eeg_w2, eeg_b2;
  Value eye_w1, eye_b1, eye_w2, eye_b2;
  BoundAttention eeg_self, eye_self, cross;
  Value cls_w1, cls_b1, cls_w2, cls_b2;
  bool trainable = false;
};

/// Bind every parameter into the graph; trainable bindings receive
/// gradients and can be read back in ModelParams::for_each_tensor order.
BoundModel bind_model(Graph& g, const ModelParams& params, bool trainable);

/// Fused representation and class probabilities of one forward pass.
struct FusedBatch {
  Value features;  // B x fused_dim
  Value probs;     // B x classes, rows sum to 1
};

/// h_eeg = eeg tokens after self-attention (residual), h_eye likewise,
/// h_cross = cross-attention with EEG queries over eye keys/values; the
/// fused vector is concat(h_eeg, h_cross) (optionally with h_eye), fed to a
/// two-layer rectifier classifier head.
FusedBatch model_forward(Graph& g, const BoundModel& model, Value eeg, Value eye);

/// Read gradients of all trainable tensors after backward(), in
/// for_each_tensor order.
void collect_gradients(Graph& g, const BoundModel& model,
                       const std::function<void(const std::string&, const Tensor&)>& fn);

}  // namespace hadua

#endif  // HADUA_MODEL_HPP_
