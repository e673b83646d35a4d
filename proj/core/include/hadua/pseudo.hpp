// core/include/hadua/pseudo.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_PSEUDO_HPP_
#define HADUA_PSEUDO_HPP_

#include <span>
#include <utility>

#include "hadua/tensor.hpp"

namespace hadua {

/// EMA statistics of the max-probability confidence of target predictions.
/// Initialized at mu = 1/C, sigma2 = 1.
struct ConfidenceStats {
  double mu = 0.0;
  double sigma2 = 1.0;
  double momentum = 0.9;
  long step = 0;
  int classes = 0;

  static ConfidenceStats init(int classes, double momentum);
};

/// Uniform-alignment schedule and strength.
struct UAConfig {
  enum class Schedule { kSigmoid, kLinear };
  double tau = 1.0;        // temperature of the class rescaling, >= 0
  double alpha0 = 0.5;     // initial alignment strength in [0, 1]
  double t0 = 50.0;        // sigmoid inflection epoch
  double k_decay = 10.0;   // sigmoid slope, > 0
  Schedule schedule = Schedule::kSigmoid;
  long linear_ramp_epochs = 100;  // linear mode: 0 -> alpha0 across this many epochs

  void validate() const;
};

/// Truncated-Gaussian confidence weight: lambda_max when max(p) >= mu_t,
/// otherwise lambda_max * exp(-(max(p) - mu_t)^2 / (2 sigma2_t)).
/// With sigma2_t == 0 this degrades to a hard threshold at mu_t (weight 0
/// below, lambda_max at or above) rather than raising.
double gaussian_weight(std::span<const double> p, const ConfidenceStats& stats,
                       double lambda_max);

double gaussian_weight_from_confidence(double max_p, const ConfidenceStats& stats,
                                       double lambda_max);

/// One EMA update from a batch of B_U >= 2 probability rows:
///   mu <- m mu + (1-m) mean(max p), sigma2 <- m sigma2 + (1-m) B/(B-1) var(max p).
ConfidenceStats update_confidence_stats(const ConfidenceStats& stats,
                                        const Tensor& batch_probs);

/// (lower, upper) bounds on the expected sample weight:
/// lower = lambda_max/2 * (1 + exp(-(1/C - mu_t)^2 / (2 sigma2_t))), upper = lambda_max.
std::pair<double, double> expected_weight_bounds(const ConfidenceStats& stats, int classes,
                                                 double lambda_max);

/// Class-rebalancing rescale toward a uniform batch marginal: each row is
/// multiplied elementwise by (u_c / p_hat_c)^tau and renormalized, where
/// p_hat is the batch-mean class distribution (clamped at 1e-8 per class).
Tensor ua_align(const Tensor& batch_probs, double tau);

/// alpha_t = alpha0 / (1 + exp((t - T0)/k)) for the sigmoid schedule; the
/// linear alternative ramps 0 -> alpha0 over linear_ramp_epochs.
double alpha_schedule(long epoch, const UAConfig& cfg);

/// Row-wise interpolation toward the uniform prior:
/// alpha * (1/C) + (1 - alpha) * p.
Tensor ua_interpolate(const Tensor& probs, double alpha, int classes);

}  // namespace hadua

#endif  // HADUA_PSEUDO_HPP_
