// core/src/eval.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

int argmax_row(const Tensor& probs, std::size_t row) {
  int best = 0;
  double best_v = probs.at(row, 0);
  for (std::size_t c = 1; c < probs.cols(); ++c) {
    if (probs.at(row, c) > best_v) {  // strict: ties keep the lowest index
      best_v = probs.at(row, c);
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Trapezoidal ROC AUC with tied scores collapsed into single sweep steps.
// Returns -1 when the class lacks positives or negatives.
double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  double p = 0, q = 0;
  for (bool b : positive) (b ? p : q) += 1;
  if (p == 0 || q == 0) return -1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double auc = 0.0;
  double tp = 0, fp = 0;
  double prev_tp = 0, prev_fp = 0;
  std::size_t i = 0;
  while (i < n) {
    const double s = scores[order[i]];
    while (i < n && scores[order[i]] == s) {
      if (positive[order[i]]) tp += 1;
      else fp += 1;
      ++i;
    }
    auc += (fp - prev_fp) / q * (tp + prev_tp) / (2.0 * p);  // trapezoid
    prev_tp = tp;
    prev_fp = fp;
  }
  return auc;
}

}  // namespace

MetricsReport compute_metrics(const Tensor& probs, const std::vector<int>& labels) {
  if (probs.rank() != 2) throw ShapeError("compute_metrics: rank-2 probs required");
  const std::size_t n = probs.rows();
  const int classes = static_cast<int>(probs.cols());
  if (n == 0) throw ContractError("compute_metrics: empty batch");
  if (labels.size() != n) throw ShapeError("compute_metrics: label count mismatch");
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ContractError("compute_metrics: label out of range");
  }

  MetricsReport r;
  r.confusion.assign(classes, std::vector<long>(classes, 0));
  std::vector<int> preds(n);
  long correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = argmax_row(probs, i);
    r.confusion[labels[i]][preds[i]]++;
    if (preds[i] == labels[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  // per-class accuracy (recall) and macro F1
  double f1_sum = 0.0;
  std::vector<double> acc_present;
  for (int c = 0; c < classes; ++c) {
    long support = 0, tp = r.confusion[c][c], fp = 0;
    for (int k = 0; k < classes; ++k) {
      support += r.confusion[c][k];
      if (k != c) fp += r.confusion[k][c];
    }
    const long fn = support - tp;
    const double denom = static_cast<double>(2 * tp + fp + fn);
    f1_sum += denom > 0 ? 2.0 * tp / denom : 0.0;
    if (support > 0) {
      r.per_class_acc.push_back(static_cast<double>(tp) / static_cast<double>(support));
      acc_present.push_back(r.per_class_acc.back());
    } else {
      r.per_class_acc.push_back(0.0);
    }
  }
  r.macro_f1 = f1_sum / classes;

  double mu = 0.0;
  for (double a : acc_present) mu += a;
  mu /= static_cast<double>(acc_present.size());
  double var = 0.0;
  for (double a : acc_present) var += (a - mu) * (a - mu);
  r.per_class_std = std::sqrt(var / static_cast<double>(acc_present.size()));

  // macro one-vs-rest AUC
  double auc_sum = 0.0;
  int auc_classes = 0;
  for (int c = 0; c < classes; ++c) {
    std::vector<double> scores(n);
    std::vector<bool> positive(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = probs.at(i, c);
      positive[i] = labels[i] == c;
    }
    const double a = roc_auc(scores, positive);
    if (a < 0) {
      r.auc_partial = true;
      continue;
    }
    auc_sum += a;
    ++auc_classes;
  }
  r.auc = auc_classes > 0 ? auc_sum / auc_classes : 0.0;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = accuracy;
  j["macro_f1"] = macro_f1;
  j["auc"] = auc;
  j["auc_partial"] = auc_partial;
  j["confusion"] = confusion;
  j["per_class_acc"] = per_class_acc;
  j["per_class_std"] = per_class_std;
  return j.dump(2);
}

std::string MetricsReport::confusion_csv() const {
  std::ostringstream os;
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    for (std::size_t c = 0; c < confusion[r].size(); ++c) {
      if (c) os << ",";
      os << confusion[r][c];
    }
    os << "\n";
  }
  return os.str();
}

FeatureImportance mi_feature_importance(const Tensor& features, const Tensor& probs,
                                        int bins) {
  if (features.rank() != 2 || probs.rank() != 2) {
    throw ShapeError("mi_feature_importance: rank-2 inputs required");
  }
  if (features.rows() != probs.rows()) {
    throw ShapeError("mi_feature_importance: row count mismatch");
  }
  if (bins < 4) throw ContractError("mi_feature_importance: bins must be >= 4");
  const std::size_t n = features.rows();
  if (n < 10 * static_cast<std::size_t>(bins)) {
    throw ContractError("mi_feature_importance: need at least 10*bins rows");
  }
  const int classes = static_cast<int>(probs.cols());

  std::vector<int> preds(n);
  std::vector<double> class_p(classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = argmax_row(probs, i);
    class_p[preds[i]] += 1.0;
  }
  for (double& p : class_p) p /= static_cast<double>(n);

  FeatureImportance out;
  const std::size_t d = features.cols();
  out.mi.resize(d, 0.0);
  out.degenerate.resize(d, false);

  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = features.at(i, j);
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
      out.degenerate[j] = true;
      continue;  // MI 0
    }
    // Equal-frequency edges; duplicates may merge bins, which is fine.
    std::vector<double> edges;
    for (int b = 1; b < bins; ++b) {
      edges.push_back(sorted[static_cast<std::size_t>(
          static_cast<double>(n) * b / bins)]);
    }
    // joint histogram over (bin, predicted class)
    std::vector<std::vector<double>> joint(bins, std::vector<double>(classes, 0.0));
    std::vector<double> bin_p(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      // count of edges strictly below the value, so duplicated edge values
      // (integer-valued features) still separate into distinct bins
      const int b = static_cast<int>(
          std::lower_bound(edges.begin(), edges.end(), column[i]) - edges.begin());
      joint[b][preds[i]] += 1.0;
      bin_p[b] += 1.0;
    }
    double mi = 0.0;
    for (int b = 0; b < bins; ++b) {
      if (bin_p[b] == 0.0) continue;
      for (int c = 0; c < classes; ++c) {
        if (joint[b][c] == 0.0 || class_p[c] == 0.0) continue;
        const double pbc = joint[b][c] / static_cast<double>(n);
        const double pb = bin_p[b] / static_cast<double>(n);
        mi += pbc * std::log(pbc / (pb * class_p[c]));
      }
    }
    out.mi[j] = mi;
  }
  return out;
}

}  // namespace hadua
