// core/include/hadua/train.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_TRAIN_HPP_
#define HADUA_TRAIN_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include "hadua/alignment.hpp"
#include "hadua/eval.hpp"
#include "hadua/graph.hpp"
#include "hadua/model.hpp"
#include "hadua/pseudo.hpp"
#include "hadua/synthdata.hpp"

namespace hadua {

/// Runtime switches for the ablation study. Switching a component off
/// removes its loss term or replaces its refinement step.
struct AblationSwitches {
  bool attention = true;
  bool mmd = true;
  bool cmmd = true;
  bool gaussian_weight = true;
  bool ua = true;
  bool hard_threshold = false;  // indicator weight 1{max p >= threshold} instead
  double threshold = 0.95;
};

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 5e-5;
  std::size_t batch_size = 64;
  long max_epochs = 100;
  long early_stop_patience = 15;
  double gamma_mmd = 0.5;
  double gamma_cmmd = 0.5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;  // stratified source validation split
  double lambda_max = 1.0;
  double stats_momentum = 0.9;  // EMA momentum of the confidence statistics
  // CMMD consumes the interpolated soft labels (tilde-p); switch off to feed
  // the aligned-only distribution instead.
  bool cmmd_uses_interpolated = true;
  AblationSwitches ablation;
  UAConfig ua;
  KernelConfig kernel{1.0, KernelConfig::Bandwidth::kMedian};

  void validate() const;
};

struct EpochRow {
  long epoch = 0;
  double loss = 0.0, l_cls = 0.0, l_mmd = 0.0, l_cmmd = 0.0;
  double mu = 0.0, sigma2 = 0.0, alpha = 0.0, mean_weight = 0.0;
  double val_acc = 0.0;
  double target_acc = std::numeric_limits<double>::quiet_NaN();
};

struct AdamState {
  std::vector<Tensor> m, v;  // aligned with ModelParams::for_each_tensor order
  long t = 0;
};

struct TrainState {
  ModelParams params;
  ModelParams best_params;
  AdamState adam;
  ConfidenceStats stats;
  long epoch = 0;
  long best_epoch = -1;
  double best_val_acc = -1.0;
  bool warning_no_improvement = false;
  std::vector<EpochRow> history;
};

struct TotalLoss {
  Value total, cls, mmd, cmmd;
  bool has_mmd = false, has_cmmd = false;
};

/// L = L_cls + gamma_mmd * L_MMD + gamma_cmmd * L_CMMD over already-built
/// forward passes; disabled terms contribute exactly nothing (gamma 0 or
/// switch off leaves total == L_cls node for node). Throws NumericError
/// naming the first non-finite component.
TotalLoss total_loss(Graph& g, const FusedBatch& source, const std::vector<int>& source_labels,
                     const FusedBatch& target, const WeightedSoftAssignment& assignment,
                     const TrainConfig& cfg, double sigma, int classes);

struct StepResult {
  double loss = 0.0, cls = 0.0, mmd = 0.0, cmmd = 0.0;
  double mean_weight = 0.0;
  bool cmmd_skipped = false;
};

/// One optimization step: forward both domains, refine target pseudo-labels
/// (UA with the epoch-level alpha, Gaussian confidence weights on the
/// pre-alignment probabilities), minimize the total loss with AdamW, then
/// update the confidence statistics from the pre-alignment probabilities.
StepResult train_step(TrainState& state, const TrainConfig& cfg, const Tensor& eeg_s,
                      const Tensor& eye_s, const std::vector<int>& ys, const Tensor& eeg_t,
                      const Tensor& eye_t, double alpha_t);

/// Batched inference with frozen parameters.
Tensor predict_probs(const ModelParams& params, const Tensor& eeg, const Tensor& eye);

struct FitResult {
  TrainState state;
  MetricsReport target_metrics;  // from the best checkpoint, when labels given
  bool has_target_metrics = false;
};

/// Full training run with seeded shuffling, a stratified source validation
/// split, and early stopping on validation accuracy. Target labels, when
/// provided, are used for per-epoch reporting and the final report only.
FitResult fit(const TrainConfig& cfg, const ModelConfig& mcfg, const LabeledSet& source,
              const UnlabeledSet& target,
              const std::vector<int>* target_eval_labels = nullptr);

}  // namespace hadua

#endif  // HADUA_TRAIN_HPP_
