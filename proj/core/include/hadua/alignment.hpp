// core/include/hadua/alignment.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_ALIGNMENT_HPP_
#define HADUA_ALIGNMENT_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "hadua/graph.hpp"
#include "hadua/tensor.hpp"

namespace hadua {

/// Gaussian kernel configuration. The kernel is k(x,y) = exp(-||x-y||^2 / sigma)
/// (no factor 2 in the denominator; this differs from the common
/// exp(-||x-y||^2 / (2 sigma^2)) convention).
struct KernelConfig {
  enum class Bandwidth { kFixed, kMedian };
  double sigma = 1.0;
  Bandwidth mode = Bandwidth::kFixed;
};

/// Soft labels with per-sample confidence weights for the target domain.
struct WeightedSoftAssignment {
  Tensor probs;                 // n_t x C, rows on the simplex
  std::vector<double> weights;  // n_t, in [0, lambda_max]

  void validate(double lambda_max = 1.0) const;
};

/// exp(-||x-y||^2 / sigma); 1 at x == y.
double gaussian_kernel(std::span<const double> x, std::span<const double> y,
                       const KernelConfig& cfg);

/// Squared MMD between two sample sets, biased V-statistic:
/// mean(K_ss) + mean(K_tt) - 2 mean(K_st).
double mmd2(const Tensor& xs, const Tensor& xt, const KernelConfig& cfg);

/// Class-conditional squared MMD with soft target assignments. Source class
/// means are uniform over each class's samples; target sample j contributes
/// to class c with mass weights[j] * probs(j,c), normalized per class.
/// Classes whose total target mass falls below kCmmdClassEps are skipped and
/// the average runs over the contributing classes.
double cmmd2(const Tensor& xs, const std::vector<int>& ys, const Tensor& xt,
             const WeightedSoftAssignment& assignment, const KernelConfig& cfg,
             int classes);

inline constexpr double kCmmdClassEps = 1e-6;

/// Median of pairwise squared distances over a seeded subsample of at most
/// 1024 pairs (all pairs when fewer exist). Strictly positive.
double median_heuristic(const Tensor& x, std::uint64_t seed = 0x9e3779b97f4a7c15ULL);

// Differentiable counterparts built on the computation graph. The kernel
// bandwidth enters as a constant (no gradient through sigma).

/// n_x x n_y Gaussian kernel matrix between the rows of x and y.
Value kernel_matrix(Graph& g, Value x, Value y, double sigma);

Value mmd2_loss(Graph& g, Value xs, Value xt, double sigma);

Value cmmd2_loss(Graph& g, Value xs, const std::vector<int>& ys, Value xt,
                 const WeightedSoftAssignment& assignment, double sigma, int classes);

}  // namespace hadua

#endif  // HADUA_ALIGNMENT_HPP_
