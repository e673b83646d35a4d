// core/src/train.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

Tensor one_hot(const std::vector<int>& labels, int classes) {
  Tensor t({labels.size(), static_cast<std::size_t>(classes)});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

// -mean(log p_true): the true-class probability is gathered first, so only
// strictly selected entries pass through the log.
Value cross_entropy(Graph& g, Value probs, const std::vector<int>& labels, int classes) {
  const std::size_t b = g.value(probs).rows();
  Value picked = g.matmul(g.mul(probs, g.constant(one_hot(labels, classes))),
                          g.constant(Tensor::ones({static_cast<std::size_t>(classes), 1})));
  return g.mul_scalar(g.reduce_sum(g.log(picked)), -1.0 / static_cast<double>(b));
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx) {
  Tensor out({idx.size(), m.cols()});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) = m.at(idx[r], c);
  }
  return out;
}

std::vector<int> gather_labels(const std::vector<int>& ys, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(ys[i]);
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows() + b.rows(), a.cols()});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + a.size());
  return out;
}

double resolve_sigma(const TrainConfig& cfg, const Tensor& fused_s, const Tensor& fused_t) {
  if (cfg.kernel.mode == KernelConfig::Bandwidth::kFixed) return cfg.kernel.sigma;
  try {
    return median_heuristic(concat_rows(fused_s, fused_t));
  } catch (const DegenerateError&) {
    return cfg.kernel.sigma;  // collapsed features; fall back to the fixed width
  }
}

struct RefinedTarget {
  WeightedSoftAssignment assignment;
  double mean_weight = 1.0;
};

RefinedTarget refine_pseudo_labels(const Tensor& probs, const TrainConfig& cfg,
                                   const ConfidenceStats& stats, double alpha_t) {
  const std::size_t b = probs.rows();
  RefinedTarget out;

  // Confidence weights come from the model's own (pre-alignment) confidence.
  out.assignment.weights.resize(b, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double conf = probs.at(i, 0);
    for (std::size_t c = 1; c < probs.cols(); ++c) conf = std::max(conf, probs.at(i, c));
    double w = cfg.lambda_max;
    if (cfg.ablation.hard_threshold) {
      w = conf >= cfg.ablation.threshold ? cfg.lambda_max : 0.0;
    } else if (cfg.ablation.gaussian_weight) {
      w = gaussian_weight_from_confidence(conf, stats, cfg.lambda_max);
    }
    out.assignment.weights[i] = w;
    acc += w;
  }
  out.mean_weight = acc / static_cast<double>(b);

  if (cfg.ablation.ua) {
    const Tensor aligned = ua_align(probs, cfg.ua.tau);
    const Tensor tilde =
        ua_interpolate(aligned, alpha_t, static_cast<int>(probs.cols()));
    out.assignment.probs = cfg.cmmd_uses_interpolated ? tilde : aligned;
  } else {
    out.assignment.probs = probs;
  }
  return out;
}

void ensure_finite(const Graph& g, Value v, const char* component) {
  if (!g.value(v).all_finite()) {
    throw NumericError(std::string("total_loss: component ") + component + " is non-finite");
  }
}

void adam_init(AdamState& adam, ModelParams& params) {
  adam.m.clear();
  adam.v.clear();
  adam.t = 0;
  params.for_each_tensor([&](const std::string&, Tensor& t) {
    adam.m.push_back(Tensor(t.shape()));
    adam.v.push_back(Tensor(t.shape()));
  });
}

void adam_update(AdamState& adam, ModelParams& params, const std::vector<Tensor>& grads,
                 const TrainConfig& cfg) {
  adam.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
  std::size_t k = 0;
  params.for_each_tensor([&](const std::string&, Tensor& theta) {
    const Tensor& g = grads[k];
    Tensor& m = adam.m[k];
    Tensor& v = adam.v[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      // decoupled weight decay: applied to the weights, not the moments
      theta[i] -= cfg.lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                            cfg.weight_decay * theta[i]);
    }
    ++k;
  });
}

struct SplitIndices {
  std::vector<std::size_t> train, val;
};

// Stratified split; every class keeps at least one training row.
SplitIndices stratified_split(const std::vector<int>& labels, int classes, double val_fraction,
                              std::uint64_t seed) {
  SplitIndices out;
  std::mt19937_64 gen(seed ^ 0x5DEECE66DULL);
  for (int c = 0; c < classes; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), gen);
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(val_fraction * static_cast<double>(idx.size())));
    if (n_val >= idx.size() && !idx.empty()) n_val = idx.size() - 1;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_val ? out.val : out.train).push_back(idx[i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("train: lr must be >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (early_stop_patience < 0) throw ConfigError("train: patience must be >= 0");
  if (!(gamma_mmd >= 0.0 && gamma_cmmd >= 0.0)) throw ConfigError("train: gammas must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 0.5)) {
    throw ConfigError("train: val_fraction must lie in (0, 0.5)");
  }
  if (!(lambda_max > 0.0)) throw ConfigError("train: lambda_max must be > 0");
  if (!(stats_momentum > 0.0 && stats_momentum < 1.0)) {
    throw ConfigError("train: stats momentum must lie in (0, 1)");
  }
  if (!(kernel.sigma > 0.0)) throw ConfigError("train: kernel sigma must be > 0");
  ua.validate();
}

TotalLoss total_loss(Graph& g, const FusedBatch& source, const std::vector<int>& source_labels,
                     const FusedBatch& target, const WeightedSoftAssignment& assignment,
                     const TrainConfig& cfg, double sigma, int classes) {
  TotalLoss out;
  out.cls = cross_entropy(g, source.probs, source_labels, classes);
  ensure_finite(g, out.cls, "L_cls");
  out.total = out.cls;

  const bool want_mmd = cfg.ablation.mmd && cfg.gamma_mmd > 0.0;
  const bool want_cmmd = cfg.ablation.cmmd && cfg.gamma_cmmd > 0.0;

  if (want_mmd) {
    out.mmd = mmd2_loss(g, source.features, target.features, sigma);
    ensure_finite(g, out.mmd, "L_MMD");
    out.has_mmd = true;
    out.total = g.add(out.total, g.mul_scalar(out.mmd, cfg.gamma_mmd));
  } else {
    out.mmd = g.constant_scalar(0.0);
  }
  if (want_cmmd) {
    out.cmmd = cmmd2_loss(g, source.features, source_labels, target.features, assignment,
                          sigma, classes);
    ensure_finite(g, out.cmmd, "L_CMMD");
    out.has_cmmd = true;
    out.total = g.add(out.total, g.mul_scalar(out.cmmd, cfg.gamma_cmmd));
  } else {
    out.cmmd = g.constant_scalar(0.0);
  }
  ensure_finite(g, out.total, "L");
  return out;
}

StepResult train_step(TrainState& state, const TrainConfig& cfg, const Tensor& eeg_s,
                      const Tensor& eye_s, const std::vector<int>& ys, const Tensor& eeg_t,
                      const Tensor& eye_t, double alpha_t) {
  if (eeg_s.rows() == 0 || eeg_t.rows() < 2) {
    throw ContractError("train_step: need a source batch and a target batch of >= 2");
  }
  const int classes = state.params.config.classes;

  Graph g;
  BoundModel model = bind_model(g, state.params, true);
  FusedBatch source = model_forward(g, model, g.constant(eeg_s), g.constant(eye_s));
  FusedBatch target = model_forward(g, model, g.constant(eeg_t), g.constant(eye_t));

  const Tensor probs_t = g.value(target.probs);  // pre-refinement pseudo-labels
  RefinedTarget refined = refine_pseudo_labels(probs_t, cfg, state.stats, alpha_t);

  const double sigma = resolve_sigma(cfg, g.value(source.features), g.value(target.features));

  // CMMD needs every class in the source batch and at least one target class
  // with usable mass; a batch that misses either just drops the term.
  TrainConfig step_cfg = cfg;
  StepResult result;
  if (cfg.ablation.cmmd && cfg.gamma_cmmd > 0.0) {
    std::vector<bool> present(classes, false);
    for (int y : ys) present[static_cast<std::size_t>(y)] = true;
    bool all_present = std::all_of(present.begin(), present.end(), [](bool b) { return b; });
    bool any_mass = false;
    for (int c = 0; c < classes && !any_mass; ++c) {
      double mass = 0.0;
      for (std::size_t j = 0; j < probs_t.rows(); ++j) {
        mass += refined.assignment.weights[j] *
                refined.assignment.probs.at(j, static_cast<std::size_t>(c));
      }
      any_mass = mass >= kCmmdClassEps;
    }
    if (!all_present || !any_mass) {
      step_cfg.ablation.cmmd = false;
      result.cmmd_skipped = true;
    }
  }

  TotalLoss loss =
      total_loss(g, source, ys, target, refined.assignment, step_cfg, sigma, classes);
  g.backward(loss.total);

  std::vector<Tensor> grads;
  collect_gradients(g, model, [&](const std::string&, const Tensor& grad) {
    grads.push_back(grad);
  });
  adam_update(state.adam, state.params, grads, cfg);
  state.stats = update_confidence_stats(state.stats, probs_t);

  result.loss = g.value(loss.total)[0];
  result.cls = g.value(loss.cls)[0];
  result.mmd = g.value(loss.mmd)[0];
  result.cmmd = g.value(loss.cmmd)[0];
  result.mean_weight = refined.mean_weight;
  return result;
}

Tensor predict_probs(const ModelParams& params, const Tensor& eeg, const Tensor& eye) {
  const std::size_t n = eeg.rows();
  const int classes = params.config.classes;
  Tensor out({n, static_cast<std::size_t>(classes)});
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t end = std::min(n, begin + kChunk);
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    Graph g;
    BoundModel model = bind_model(g, params, false);
    FusedBatch fb = model_forward(g, model, g.constant(gather_rows(eeg, idx)),
                                  g.constant(gather_rows(eye, idx)));
    const Tensor& probs = g.value(fb.probs);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (int c = 0; c < classes; ++c) {
        out.at(begin + r, static_cast<std::size_t>(c)) =
            probs.at(r, static_cast<std::size_t>(c));
      }
    }
  }
  return out;
}

FitResult fit(const TrainConfig& cfg, const ModelConfig& mcfg, const LabeledSet& source,
              const UnlabeledSet& target, const std::vector<int>* target_eval_labels) {
  cfg.validate();
  ModelConfig model_cfg = mcfg;
  model_cfg.use_attention = cfg.ablation.attention;
  model_cfg.validate();
  const int classes = model_cfg.classes;
  if (source.labels.empty()) throw ContractError("fit: empty source");
  for (int c = 0; c < classes; ++c) {
    if (std::find(source.labels.begin(), source.labels.end(), c) == source.labels.end()) {
      throw ContractError("fit: class " + std::to_string(c) + " missing from the source set");
    }
  }
  if (target.eeg.rows() < 2) throw ContractError("fit: target needs at least 2 samples");

  FitResult result;
  TrainState& state = result.state;
  state.params = ModelParams::init(model_cfg, cfg.seed);
  state.best_params = state.params;
  adam_init(state.adam, state.params);
  state.stats = ConfidenceStats::init(classes, cfg.stats_momentum);

  const SplitIndices split =
      stratified_split(source.labels, classes, cfg.val_fraction, cfg.seed);
  const Tensor train_eeg = gather_rows(source.eeg, split.train);
  const Tensor train_eye = gather_rows(source.eye, split.train);
  const std::vector<int> train_labels = gather_labels(source.labels, split.train);
  const Tensor val_eeg = gather_rows(source.eeg, split.val);
  const Tensor val_eye = gather_rows(source.eye, split.val);
  const std::vector<int> val_labels = gather_labels(source.labels, split.val);

  std::mt19937_64 shuffle_gen(cfg.seed * 0x9e3779b97f4a7c15ULL + 1);
  std::vector<std::size_t> train_order(train_labels.size());
  std::iota(train_order.begin(), train_order.end(), 0);
  std::vector<std::size_t> target_order(target.eeg.rows());
  std::iota(target_order.begin(), target_order.end(), 0);

  long since_improvement = 0;
  for (long epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    state.epoch = epoch;
    const double alpha_t = cfg.ablation.ua ? alpha_schedule(epoch, cfg.ua) : 0.0;
    std::shuffle(train_order.begin(), train_order.end(), shuffle_gen);
    std::shuffle(target_order.begin(), target_order.end(), shuffle_gen);

    EpochRow row;
    row.epoch = epoch;
    row.alpha = alpha_t;
    std::size_t steps = 0;
    std::size_t target_cursor = 0;
    for (std::size_t begin = 0; begin < train_order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(train_order.size(), begin + cfg.batch_size);
      if (end - begin < 2) break;  // a trailing singleton cannot update the stats
      std::vector<std::size_t> sidx(train_order.begin() + begin, train_order.begin() + end);

      std::vector<std::size_t> tidx;
      const std::size_t t_batch = std::min<std::size_t>(cfg.batch_size, target_order.size());
      for (std::size_t k = 0; k < t_batch; ++k) {
        tidx.push_back(target_order[(target_cursor + k) % target_order.size()]);
      }
      target_cursor = (target_cursor + t_batch) % target_order.size();

      const StepResult step = train_step(
          state, cfg, gather_rows(train_eeg, sidx), gather_rows(train_eye, sidx),
          gather_labels(train_labels, sidx), gather_rows(target.eeg, tidx),
          gather_rows(target.eye, tidx), alpha_t);
      row.loss += step.loss;
      row.l_cls += step.cls;
      row.l_mmd += step.mmd;
      row.l_cmmd += step.cmmd;
      row.mean_weight += step.mean_weight;
      ++steps;
    }
    if (steps == 0) throw ContractError("fit: batch size exceeds the training split");
    row.loss /= static_cast<double>(steps);
    row.l_cls /= static_cast<double>(steps);
    row.l_mmd /= static_cast<double>(steps);
    row.l_cmmd /= static_cast<double>(steps);
    row.mean_weight /= static_cast<double>(steps);
    row.mu = state.stats.mu;
    row.sigma2 = state.stats.sigma2;

    row.val_acc =
        compute_metrics(predict_probs(state.params, val_eeg, val_eye), val_labels).accuracy;
    if (target_eval_labels != nullptr) {
      row.target_acc =
          compute_metrics(predict_probs(state.params, target.eeg, target.eye),
                          *target_eval_labels)
              .accuracy;
    }
    state.history.push_back(row);

    if (row.val_acc > state.best_val_acc) {
      state.best_val_acc = row.val_acc;
      state.best_epoch = epoch;
      state.best_params = state.params;
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    if (since_improvement >= cfg.early_stop_patience) break;
  }

  state.warning_no_improvement = state.best_epoch <= 0 && state.history.size() > 1;
  if (target_eval_labels != nullptr) {
    result.target_metrics = compute_metrics(
        predict_probs(state.best_params, target.eeg, target.eye), *target_eval_labels);
    result.has_target_metrics = true;
  }
  return result;
}

}  // namespace hadua
