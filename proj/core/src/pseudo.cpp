// core/src/pseudo.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/pseudo.hpp"

#include <algorithm>
#include <cmath>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

double max_prob(std::span<const double> p) {
  double mx = p[0];
  for (double v : p) mx = std::max(mx, v);
  return mx;
}

void check_prob_row(std::span<const double> p, const char* what) {
  if (p.empty()) throw ContractError(std::string(what) + ": empty probability vector");
  double sum = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw ContractError(std::string(what) + ": negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw ContractError(std::string(what) + ": probabilities sum to " + std::to_string(sum));
  }
}

}  // namespace

ConfidenceStats ConfidenceStats::init(int classes, double momentum) {
  if (classes < 2) throw ConfigError("confidence stats: need at least 2 classes");
  if (!(momentum > 0.0 && momentum < 1.0)) {
    throw ConfigError("confidence stats: momentum must lie in (0, 1)");
  }
  ConfidenceStats s;
  s.mu = 1.0 / static_cast<double>(classes);
  s.sigma2 = 1.0;
  s.momentum = momentum;
  s.step = 0;
  s.classes = classes;
  return s;
}

void UAConfig::validate() const {
  if (!(tau >= 0.0)) throw ConfigError("ua: tau must be >= 0");
  if (!(alpha0 >= 0.0 && alpha0 <= 1.0)) throw ConfigError("ua: alpha0 must lie in [0, 1]");
  if (!(k_decay > 0.0)) throw ConfigError("ua: k_decay must be > 0");
  if (schedule == Schedule::kLinear && linear_ramp_epochs < 1) {
    throw ConfigError("ua: linear_ramp_epochs must be >= 1");
  }
}

double gaussian_weight_from_confidence(double max_p, const ConfidenceStats& stats,
                                       double lambda_max) {
  if (!(lambda_max > 0.0)) throw ContractError("gaussian_weight: lambda_max must be > 0");
  if (stats.sigma2 < 0.0) throw ContractError("gaussian_weight: negative variance");
  if (max_p >= stats.mu) return lambda_max;
  if (stats.sigma2 == 0.0) return 0.0;  // hard threshold fallback at mu
  const double d = max_p - stats.mu;
  return lambda_max * std::exp(-(d * d) / (2.0 * stats.sigma2));
}

double gaussian_weight(std::span<const double> p, const ConfidenceStats& stats,
                       double lambda_max) {
  check_prob_row(p, "gaussian_weight");
  return gaussian_weight_from_confidence(max_prob(p), stats, lambda_max);
}

ConfidenceStats update_confidence_stats(const ConfidenceStats& stats,
                                        const Tensor& batch_probs) {
  if (batch_probs.rank() != 2) throw ShapeError("update_confidence_stats: rank-2 batch required");
  const std::size_t b = batch_probs.rows();
  if (b < 2) {
    throw ContractError("update_confidence_stats: batch size must be >= 2 (Bessel factor)");
  }
  std::vector<double> conf(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::span<const double> row(batch_probs.data().data() + i * batch_probs.cols(),
                                batch_probs.cols());
    check_prob_row(row, "update_confidence_stats");
    conf[i] = max_prob(row);
  }
  double mu_b = 0.0;
  for (double c : conf) mu_b += c;
  mu_b /= static_cast<double>(b);
  double var_b = 0.0;
  for (double c : conf) var_b += (c - mu_b) * (c - mu_b);
  var_b /= static_cast<double>(b);

  const double m = stats.momentum;
  ConfidenceStats next = stats;
  next.mu = m * stats.mu + (1.0 - m) * mu_b;
  next.sigma2 = m * stats.sigma2 +
                (1.0 - m) * (static_cast<double>(b) / static_cast<double>(b - 1)) * var_b;
  next.step = stats.step + 1;
  return next;
}

std::pair<double, double> expected_weight_bounds(const ConfidenceStats& stats, int classes,
                                                 double lambda_max) {
  if (classes < 2) throw ContractError("expected_weight_bounds: need at least 2 classes");
  const double d = 1.0 / static_cast<double>(classes) - stats.mu;
  double lower;
  if (stats.sigma2 == 0.0) {
    lower = d == 0.0 ? lambda_max : lambda_max / 2.0;
  } else {
    lower = 0.5 * lambda_max * (1.0 + std::exp(-(d * d) / (2.0 * stats.sigma2)));
  }
  return {lower, lambda_max};
}

Tensor ua_align(const Tensor& batch_probs, double tau) {
  if (batch_probs.rank() != 2) throw ShapeError("ua_align: rank-2 batch required");
  if (!(tau >= 0.0)) throw ContractError("ua_align: tau must be >= 0");
  const std::size_t b = batch_probs.rows(), c = batch_probs.cols();
  if (b == 0 || c == 0) throw ContractError("ua_align: empty batch");
  if (tau == 0.0) return batch_probs;

  std::vector<double> p_hat(c, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    std::span<const double> row(batch_probs.data().data() + i * c, c);
    check_prob_row(row, "ua_align");
    for (std::size_t j = 0; j < c; ++j) p_hat[j] += row[j];
  }
  const double u = 1.0 / static_cast<double>(c);
  std::vector<double> scale(c);
  for (std::size_t j = 0; j < c; ++j) {
    const double pj = std::max(p_hat[j] / static_cast<double>(b), 1e-8);
    scale[j] = std::pow(u / pj, tau);
  }

  Tensor out({b, c});
  for (std::size_t i = 0; i < b; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out.at(i, j) = batch_probs.at(i, j) * scale[j];
      z += out.at(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= z;
  }
  return out;
}

double alpha_schedule(long epoch, const UAConfig& cfg) {
  cfg.validate();
  if (cfg.schedule == UAConfig::Schedule::kLinear) {
    const double frac = std::min(1.0, static_cast<double>(epoch) /
                                          static_cast<double>(cfg.linear_ramp_epochs));
    return cfg.alpha0 * frac;
  }
  return cfg.alpha0 / (1.0 + std::exp((static_cast<double>(epoch) - cfg.t0) / cfg.k_decay));
}

Tensor ua_interpolate(const Tensor& probs, double alpha, int classes) {
  if (probs.rank() != 2 || probs.cols() != static_cast<std::size_t>(classes)) {
    throw ShapeError("ua_interpolate: batch shape does not match class count");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("ua_interpolate: alpha out of [0,1]");
  const double u = 1.0 / static_cast<double>(classes);
  Tensor out(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = alpha * u + (1.0 - alpha) * probs[i];
  }
  return out;
}

}  // namespace hadua
