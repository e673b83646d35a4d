// core/src/model.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

constexpr int kCheckpointVersion = 1;

Tensor uniform_fan_in(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t({rows, cols});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(gen);
  return t;
}

DenseLayer init_dense(std::size_t in, std::size_t out, std::mt19937_64& gen) {
  return {uniform_fan_in(in, out, gen), Tensor({1, out})};
}

Value bind_tensor(Graph& g, const Tensor& t, bool trainable) {
  if (!trainable) return g.constant(t);
  Tensor copy = t;
  copy.set_requires_grad(true);
  return g.input(copy);
}

// x W + 1 b  (bias expanded through a ones column).
Value affine(Graph& g, Value x, Value w, Value b) {
  Value xw = g.matmul(x, w);
  Value ones = g.constant(Tensor::ones({g.value(x).rows(), 1}));
  return g.add(xw, g.matmul(ones, b));
}

Value encode(Graph& g, Value x, Value w1, Value b1, Value w2, Value b2) {
  return affine(g, g.relu(affine(g, x, w1, b1)), w2, b2);
}

// Residual per-sample token attention over a B x d_model batch. All
// samples' tokens run as one masked sequence; the block mask keeps the
// result identical to attending each sample separately.
Value attend_batch(Graph& g, const BoundAttention& attn, const ModelConfig& cfg,
                   Value query_src, Value kv_src, Value logit_mask) {
  const std::size_t batch = g.value(query_src).rows();
  const std::size_t d = cfg.d_model;
  const std::size_t tokens = cfg.tokens;
  const std::size_t token_dim = cfg.token_dim();
  Value tq = g.reshape(query_src, {batch * tokens, token_dim});
  Value tkv = g.reshape(kv_src, {batch * tokens, token_dim});
  Value out = multi_head_attention_masked(g, attn, tq, tkv, logit_mask);
  return g.add(query_src, g.reshape(out, {batch, d}));
}

}  // namespace

std::size_t ModelConfig::fused_dim() const {
  if (!use_attention) return 2 * d_model;
  return fusion == Fusion::kEegEyeCross ? 3 * d_model : 2 * d_model;
}

void ModelConfig::validate() const {
  if (eeg_dim == 0 || eye_dim == 0) throw ConfigError("model: input widths must be > 0");
  if (d_model == 0 || encoder_hidden == 0 || classifier_hidden == 0) {
    throw ConfigError("model: layer widths must be > 0");
  }
  if (classes < 2) throw ConfigError("model: need at least 2 classes");
  if (tokens == 0 || d_model % tokens != 0) {
    throw ConfigError("model: d_model " + std::to_string(d_model) +
                      " not divisible by tokens " + std::to_string(tokens));
  }
  if (heads == 0 || token_dim() % heads != 0) {
    throw ConfigError("model: token width " + std::to_string(token_dim()) +
                      " not divisible by heads " + std::to_string(heads));
  }
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 gen(seed);
  ModelParams p;
  p.config = config;
  p.eeg_encoder.l1 = init_dense(config.eeg_dim, config.encoder_hidden, gen);
  p.eeg_encoder.l2 = init_dense(config.encoder_hidden, config.d_model, gen);
  p.eye_encoder.l1 = init_dense(config.eye_dim, config.encoder_hidden, gen);
  p.eye_encoder.l2 = init_dense(config.encoder_hidden, config.d_model, gen);
  p.eeg_self = AttentionParams::init(config.token_dim(), config.heads, gen);
  p.eye_self = AttentionParams::init(config.token_dim(), config.heads, gen);
  p.cross = AttentionParams::init(config.token_dim(), config.heads, gen);
  p.cls1 = init_dense(config.fused_dim(), config.classifier_hidden, gen);
  p.cls2 = init_dense(config.classifier_hidden, static_cast<std::size_t>(config.classes), gen);
  return p;
}

namespace {

template <typename Params, typename Fn>
void for_each_tensor_impl(Params& p, const Fn& fn) {
  fn("eeg_encoder.l1.w", p.eeg_encoder.l1.w);
  fn("eeg_encoder.l1.b", p.eeg_encoder.l1.b);
  fn("eeg_encoder.l2.w", p.eeg_encoder.l2.w);
  fn("eeg_encoder.l2.b", p.eeg_encoder.l2.b);
  fn("eye_encoder.l1.w", p.eye_encoder.l1.w);
  fn("eye_encoder.l1.b", p.eye_encoder.l1.b);
  fn("eye_encoder.l2.w", p.eye_encoder.l2.w);
  fn("eye_encoder.l2.b", p.eye_encoder.l2.b);
  if (p.config.use_attention) {
    auto visit_attention = [&](const std::string& prefix, auto& a) {
      for (std::size_t h = 0; h < a.heads; ++h) {
        fn(prefix + ".wq" + std::to_string(h), a.wq[h]);
        fn(prefix + ".wk" + std::to_string(h), a.wk[h]);
        fn(prefix + ".wv" + std::to_string(h), a.wv[h]);
      }
      fn(prefix + ".wo", a.wo);
    };
    visit_attention("eeg_self", p.eeg_self);
    visit_attention("eye_self", p.eye_self);
    visit_attention("cross", p.cross);
  }
  fn("classifier.l1.w", p.cls1.w);
  fn("classifier.l1.b", p.cls1.b);
  fn("classifier.l2.w", p.cls2.w);
  fn("classifier.l2.b", p.cls2.b);
}

}  // namespace

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, Tensor&)>& fn) {
  for_each_tensor_impl(*this, fn);
}

void ModelParams::for_each_tensor(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  for_each_tensor_impl(*this, fn);
}

BoundModel bind_model(Graph& g, const ModelParams& params, bool trainable) {
  params.config.validate();
  BoundModel m;
  m.config = params.config;
  m.trainable = trainable;
  m.eeg_w1 = bind_tensor(g, params.eeg_encoder.l1.w, trainable);
  m.eeg_b1 = bind_tensor(g, params.eeg_encoder.l1.b, trainable);
  m.eeg_w2 = bind_tensor(g, params.eeg_encoder.l2.w, trainable);
  m.eeg_b2 = bind_tensor(g, params.eeg_encoder.l2.b, trainable);
  m.eye_w1 = bind_tensor(g, params.eye_encoder.l1.w, trainable);
  m.eye_b1 = bind_tensor(g, params.eye_encoder.l1.b, trainable);
  m.eye_w2 = bind_tensor(g, params.eye_encoder.l2.w, trainable);
  m.eye_b2 = bind_tensor(g, params.eye_encoder.l2.b, trainable);
  if (params.config.use_attention) {
    m.eeg_self = bind_attention(g, params.eeg_self, trainable);
    m.eye_self = bind_attention(g, params.eye_self, trainable);
    m.cross = bind_attention(g, params.cross, trainable);
  }
  m.cls_w1 = bind_tensor(g, params.cls1.w, trainable);
  m.cls_b1 = bind_tensor(g, params.cls1.b, trainable);
  m.cls_w2 = bind_tensor(g, params.cls2.w, trainable);
  m.cls_b2 = bind_tensor(g, params.cls2.b, trainable);
  return m;
}

FusedBatch model_forward(Graph& g, const BoundModel& model, Value eeg, Value eye) {
  const ModelConfig& cfg = model.config;
  const Tensor& teeg = g.value(eeg);
  const Tensor& teye = g.value(eye);
  if (teeg.rank() != 2 || teye.rank() != 2) {
    throw ShapeError("model_forward: rank-2 batches required");
  }
  if (teeg.rows() != teye.rows()) {
    throw ContractError("model_forward: eeg batch has " + std::to_string(teeg.rows()) +
                        " rows, eye batch has " + std::to_string(teye.rows()));
  }
  if (teeg.cols() != cfg.eeg_dim || teye.cols() != cfg.eye_dim) {
    throw ShapeError("model_forward: feature widths do not match encoder inputs");
  }

  Value enc_eeg = encode(g, eeg, model.eeg_w1, model.eeg_b1, model.eeg_w2, model.eeg_b2);
  Value enc_eye = encode(g, eye, model.eye_w1, model.eye_b1, model.eye_w2, model.eye_b2);

  Value fused;
  if (!cfg.use_attention) {
    fused = g.concat({enc_eeg, enc_eye});
  } else {
    Value mask = g.constant(block_diagonal_mask(teeg.rows(), cfg.tokens));
    Value h_eeg = attend_batch(g, model.eeg_self, cfg, enc_eeg, enc_eeg, mask);
    Value h_eye = attend_batch(g, model.eye_self, cfg, enc_eye, enc_eye, mask);
    // Unidirectional guidance: EEG queries, eye keys/values.
    Value h_cross = attend_batch(g, model.cross, cfg, h_eeg, h_eye, mask);
    fused = cfg.fusion == ModelConfig::Fusion::kEegEyeCross
                ? g.concat({h_eeg, h_eye, h_cross})
                : g.concat({h_eeg, h_cross});
  }

  Value hidden = g.relu(affine(g, fused, model.cls_w1, model.cls_b1));
  Value probs = g.softmax(affine(g, hidden, model.cls_w2, model.cls_b2));
  return {fused, probs};
}

void collect_gradients(Graph& g, const BoundModel& model,
                       const std::function<void(const std::string&, const Tensor&)>& fn) {
  if (!model.trainable) throw ContractError("collect_gradients: model bound as constant");
  fn("eeg_encoder.l1.w", g.grad(model.eeg_w1));
  fn("eeg_encoder.l1.b", g.grad(model.eeg_b1));
  fn("eeg_encoder.l2.w", g.grad(model.eeg_w2));
  fn("eeg_encoder.l2.b", g.grad(model.eeg_b2));
  fn("eye_encoder.l1.w", g.grad(model.eye_w1));
  fn("eye_encoder.l1.b", g.grad(model.eye_b1));
  fn("eye_encoder.l2.w", g.grad(model.eye_w2));
  fn("eye_encoder.l2.b", g.grad(model.eye_b2));
  if (model.config.use_attention) {
    auto visit = [&](const std::string& prefix, const BoundAttention& a) {
      for (std::size_t h = 0; h < a.heads; ++h) {
        fn(prefix + ".wq" + std::to_string(h), g.grad(a.wq[h]));
        fn(prefix + ".wk" + std::to_string(h), g.grad(a.wk[h]));
        fn(prefix + ".wv" + std::to_string(h), g.grad(a.wv[h]));
      }
      fn(prefix + ".wo", g.grad(a.wo));
    };
    visit("eeg_self", model.eeg_self);
    visit("eye_self", model.eye_self);
    visit("cross", model.cross);
  }
  fn("classifier.l1.w", g.grad(model.cls_w1));
  fn("classifier.l1.b", g.grad(model.cls_b1));
  fn("classifier.l2.w", g.grad(model.cls_w2));
  fn("classifier.l2.b", g.grad(model.cls_b2));
}

namespace {

nlohmann::json tensor_to_json(const Tensor& t) {
  return {{"shape", t.shape()}, {"data", t.data()}};
}

Tensor tensor_from_json(const nlohmann::json& j) {
  return Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                j.at("data").get<std::vector<double>>());
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"eeg_dim", c.eeg_dim},
          {"eye_dim", c.eye_dim},
          {"d_model", c.d_model},
          {"encoder_hidden", c.encoder_hidden},
          {"classifier_hidden", c.classifier_hidden},
          {"heads", c.heads},
          {"tokens", c.tokens},
          {"classes", c.classes},
          {"use_attention", c.use_attention},
          {"fusion", c.fusion == ModelConfig::Fusion::kEegEyeCross ? "eeg_eye_cross"
                                                                   : "eeg_cross"}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.eeg_dim = j.at("eeg_dim").get<std::size_t>();
  c.eye_dim = j.at("eye_dim").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  c.classifier_hidden = j.at("classifier_hidden").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.tokens = j.at("tokens").get<std::size_t>();
  c.classes = j.at("classes").get<int>();
  c.use_attention = j.at("use_attention").get<bool>();
  const std::string fusion = j.at("fusion").get<std::string>();
  if (fusion == "eeg_cross") {
    c.fusion = ModelConfig::Fusion::kEegCross;
  } else if (fusion == "eeg_eye_cross") {
    c.fusion = ModelConfig::Fusion::kEegEyeCross;
  } else {
    throw ConfigError("checkpoint: unknown fusion '" + fusion + "'");
  }
  return c;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["config"] = config_to_json(params.config);
  nlohmann::json tensors;
  params.for_each_tensor(
      [&](const std::string& name, const Tensor& t) { tensors[name] = tensor_to_json(t); });
  j["tensors"] = std::move(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("checkpoint: write to " + path + " failed");
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: parse error in " + path + ": " + e.what());
  }
  if (j.at("format_version").get<int>() != kCheckpointVersion) {
    throw IoError("checkpoint: unsupported format version");
  }
  ModelParams p = ModelParams::init(config_from_json(j.at("config")), 0);
  const nlohmann::json& tensors = j.at("tensors");
  p.for_each_tensor([&](const std::string& name, Tensor& t) {
    if (!tensors.contains(name)) throw IoError("checkpoint: missing tensor '" + name + "'");
    Tensor loaded = tensor_from_json(tensors.at(name));
    if (!loaded.same_shape(t)) {
      throw ShapeError("checkpoint: tensor '" + name + "' has shape " +
                       shape_str(loaded.shape()) + ", expected " + shape_str(t.shape()));
    }
    t = std::move(loaded);
  });
  return p;
}

}  // namespace hadua
