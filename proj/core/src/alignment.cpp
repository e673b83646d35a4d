// core/src/alignment.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

double sq_dist(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

std::span<const double> row_span(const Tensor& m, std::size_t r) {
  return {m.data().data() + r * m.cols(), m.cols()};
}

void check_feature_pair(const Tensor& xs, const Tensor& xt, const char* what) {
  if (xs.rank() != 2 || xt.rank() != 2) {
    throw ShapeError(std::string(what) + ": rank-2 feature matrices required");
  }
  if (xs.rows() == 0 || xt.rows() == 0) {
    throw ContractError(std::string(what) + ": empty sample set");
  }
  if (xs.cols() != xt.cols()) {
    throw ShapeError(std::string(what) + ": feature dimensions differ (" +
                     std::to_string(xs.cols()) + " vs " + std::to_string(xt.cols()) + ")");
  }
}

// Mean kernel value weighted by a on rows of x and b on rows of y:
// sum_ij a_i b_j k(x_i, y_j).
double weighted_kernel_sum(const Tensor& x, const Tensor& y, std::span<const double> a,
                           std::span<const double> b, double sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (a[i] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < y.rows(); ++j) {
      if (b[j] == 0.0) continue;
      inner += b[j] * std::exp(-sq_dist(row_span(x, i), row_span(y, j)) / sigma);
    }
    acc += a[i] * inner;
  }
  return acc;
}

}  // namespace

void WeightedSoftAssignment::validate(double lambda_max) const {
  if (probs.rank() != 2) throw ShapeError("assignment: probs must be rank-2");
  if (weights.size() != probs.rows()) {
    throw ShapeError("assignment: weight count != row count");
  }
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      if (probs.at(r, c) < -1e-12) throw ContractError("assignment: negative probability");
      sum += probs.at(r, c);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ContractError("assignment: row " + std::to_string(r) + " sums to " +
                          std::to_string(sum));
    }
  }
  for (double w : weights) {
    if (!(w >= 0.0 && w <= lambda_max + 1e-12)) {
      throw ContractError("assignment: weight outside [0, lambda_max]");
    }
  }
}

double gaussian_kernel(std::span<const double> x, std::span<const double> y,
                       const KernelConfig& cfg) {
  if (x.size() != y.size()) {
    throw ShapeError("gaussian_kernel: dimension mismatch (" + std::to_string(x.size()) +
                     " vs " + std::to_string(y.size()) + ")");
  }
  if (!(cfg.sigma > 0.0)) throw ConfigError("gaussian_kernel: sigma must be > 0");
  return std::exp(-sq_dist(x, y) / cfg.sigma);
}

double mmd2(const Tensor& xs, const Tensor& xt, const KernelConfig& cfg) {
  check_feature_pair(xs, xt, "mmd2");
  if (!(cfg.sigma > 0.0)) throw ConfigError("mmd2: sigma must be > 0");
  const std::size_t ns = xs.rows(), nt = xt.rows();
  const std::vector<double> us(ns, 1.0 / static_cast<double>(ns));
  const std::vector<double> ut(nt, 1.0 / static_cast<double>(nt));
  return weighted_kernel_sum(xs, xs, us, us, cfg.sigma) +
         weighted_kernel_sum(xt, xt, ut, ut, cfg.sigma) -
         2.0 * weighted_kernel_sum(xs, xt, us, ut, cfg.sigma);
}

double cmmd2(const Tensor& xs, const std::vector<int>& ys, const Tensor& xt,
             const WeightedSoftAssignment& assignment, const KernelConfig& cfg,
             int classes) {
  check_feature_pair(xs, xt, "cmmd2");
  if (!(cfg.sigma > 0.0)) throw ConfigError("cmmd2: sigma must be > 0");
  if (ys.size() != xs.rows()) throw ShapeError("cmmd2: label count != source rows");
  if (classes < 1) throw ContractError("cmmd2: need at least one class");
  if (assignment.probs.rows() != xt.rows() ||
      assignment.probs.cols() != static_cast<std::size_t>(classes)) {
    throw ShapeError("cmmd2: assignment shape mismatch");
  }
  assignment.validate(*std::max_element(assignment.weights.begin(), assignment.weights.end()) +
                      1.0);

  const std::size_t ns = xs.rows(), nt = xt.rows();
  double total = 0.0;
  int contributing = 0;
  for (int c = 0; c < classes; ++c) {
    std::vector<double> a(ns, 0.0);
    std::size_t nc = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (ys[i] == c) {
        a[i] = 1.0;
        ++nc;
      }
    }
    if (nc == 0) {
      throw ContractError("cmmd2: class " + std::to_string(c) + " missing from source labels");
    }
    for (double& v : a) v /= static_cast<double>(nc);

    std::vector<double> w(nt, 0.0);
    double mass = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
      w[j] = assignment.weights[j] * assignment.probs.at(j, static_cast<std::size_t>(c));
      mass += w[j];
    }
    if (mass < kCmmdClassEps) continue;  // skip empty soft class
    for (double& v : w) v /= mass;

    total += weighted_kernel_sum(xs, xs, a, a, cfg.sigma) +
             weighted_kernel_sum(xt, xt, w, w, cfg.sigma) -
             2.0 * weighted_kernel_sum(xs, xt, a, w, cfg.sigma);
    ++contributing;
  }
  if (contributing == 0) {
    throw DegenerateError("cmmd2: every class fell below the mass threshold");
  }
  return total / static_cast<double>(contributing);
}

double median_heuristic(const Tensor& x, std::uint64_t seed) {
  if (x.rank() != 2 || x.rows() < 2) {
    throw ContractError("median_heuristic: need at least 2 rows");
  }
  const std::size_t n = x.rows();
  const std::size_t total_pairs = n * (n - 1) / 2;
  constexpr std::size_t kMaxPairs = 1024;

  std::vector<double> dists;
  if (total_pairs <= kMaxPairs) {
    dists.reserve(total_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        dists.push_back(sq_dist(row_span(x, i), row_span(x, j)));
      }
    }
  } else {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    dists.reserve(kMaxPairs);
    while (dists.size() < kMaxPairs) {
      const std::size_t i = pick(gen);
      const std::size_t j = pick(gen);
      if (i == j) continue;
      dists.push_back(sq_dist(row_span(x, i), row_span(x, j)));
    }
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  const double median = dists[dists.size() / 2];
  if (!(median > 0.0)) {
    throw DegenerateError("median_heuristic: median pairwise distance is zero");
  }
  return median;
}

Value kernel_matrix(Graph& g, Value x, Value y, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("kernel_matrix: sigma must be > 0");
  const Tensor& tx = g.value(x);
  const Tensor& ty = g.value(y);
  check_feature_pair(tx, ty, "kernel_matrix");
  const std::size_t nx = tx.rows(), ny = ty.rows(), d = tx.cols();

  Value ones_d = g.constant(Tensor::ones({d, 1}));
  Value xx = g.matmul(g.mul(x, x), ones_d);  // nx x 1 row norms
  Value yy = g.matmul(g.mul(y, y), ones_d);  // ny x 1
  Value cross = g.matmul(x, g.transpose(y));

  Value xx_full = g.matmul(xx, g.constant(Tensor::ones({1, ny})));
  Value yy_full = g.matmul(g.constant(Tensor::ones({nx, 1})), g.transpose(yy));
  Value dist = g.add(g.add(xx_full, yy_full), g.mul_scalar(cross, -2.0));
  return g.exp(g.mul_scalar(dist, -1.0 / sigma));
}

Value mmd2_loss(Graph& g, Value xs, Value xt, double sigma) {
  Value kss = kernel_matrix(g, xs, xs, sigma);
  Value ktt = kernel_matrix(g, xt, xt, sigma);
  Value kst = kernel_matrix(g, xs, xt, sigma);
  return g.add(g.add(g.reduce_mean(kss), g.reduce_mean(ktt)),
               g.mul_scalar(g.reduce_mean(kst), -2.0));
}

Value cmmd2_loss(Graph& g, Value xs, const std::vector<int>& ys, Value xt,
                 const WeightedSoftAssignment& assignment, double sigma, int classes) {
  const Tensor& txs = g.value(xs);
  const Tensor& txt = g.value(xt);
  check_feature_pair(txs, txt, "cmmd2_loss");
  if (ys.size() != txs.rows()) throw ShapeError("cmmd2_loss: label count != source rows");
  if (assignment.probs.rows() != txt.rows() ||
      assignment.probs.cols() != static_cast<std::size_t>(classes)) {
    throw ShapeError("cmmd2_loss: assignment shape mismatch");
  }

  const std::size_t ns = txs.rows(), nt = txt.rows();
  Value kss = kernel_matrix(g, xs, xs, sigma);
  Value ktt = kernel_matrix(g, xt, xt, sigma);
  Value kst = kernel_matrix(g, xs, xt, sigma);

  Value total;
  int contributing = 0;
  for (int c = 0; c < classes; ++c) {
    Tensor a({1, ns});
    std::size_t nc = 0;
    for (std::size_t i = 0; i < ns; ++i) {
      if (ys[i] == c) {
        a.at(0, i) = 1.0;
        ++nc;
      }
    }
    if (nc == 0) {
      throw ContractError("cmmd2_loss: class " + std::to_string(c) +
                          " missing from source labels");
    }
    for (std::size_t i = 0; i < ns; ++i) a.at(0, i) /= static_cast<double>(nc);

    Tensor w({nt, 1});
    double mass = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
      w.at(j, 0) = assignment.weights[j] * assignment.probs.at(j, static_cast<std::size_t>(c));
      mass += w.at(j, 0);
    }
    if (mass < kCmmdClassEps) continue;
    for (std::size_t j = 0; j < nt; ++j) w.at(j, 0) /= mass;

    Value av = g.constant(a);
    Value avt = g.transpose(av);  // ns x 1
    Value wv = g.constant(w);     // nt x 1
    Value wvt = g.transpose(wv);  // 1 x nt

    Value ss = g.matmul(g.matmul(av, kss), avt);
    Value tt = g.matmul(g.matmul(wvt, ktt), wv);
    Value st = g.matmul(g.matmul(av, kst), wv);
    Value term = g.add(g.add(ss, tt), g.mul_scalar(st, -2.0));
    total = contributing == 0 ? term : g.add(total, term);
    ++contributing;
  }
  if (contributing == 0) {
    throw DegenerateError("cmmd2_loss: every class fell below the mass threshold");
  }
  return g.reshape(g.mul_scalar(total, 1.0 / static_cast<double>(contributing)), {1});
}

}  // namespace hadua
