// core/include/hadua/eval.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_EVAL_HPP_
#define HADUA_EVAL_HPP_

#include <string>
#include <vector>

#include "hadua/tensor.hpp"

namespace hadua {

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double auc = 0.0;  // macro one-vs-rest
  std::vector<std::vector<long>> confusion;  // rows = true class
  std::vector<double> per_class_acc;
  double per_class_std = 0.0;  // population std of per-class accuracies
  bool auc_partial = false;    // some class lacked positives or negatives

  std::string to_json() const;
  std::string confusion_csv() const;
};

/// Argmax metrics (ties -> lowest class index) plus macro one-vs-rest AUC
/// from trapezoidal ROC with tied scores grouped.
MetricsReport compute_metrics(const Tensor& probs, const std::vector<int>& labels);

struct FeatureImportance {
  std::vector<double> mi;          // nats
  std::vector<bool> degenerate;    // constant feature flags
};

/// Mutual information between each feature (equal-frequency binned) and the
/// argmax predicted class, via the histogram plug-in estimator.
/// Requires rows >= 10 * bins and bins >= 4.
FeatureImportance mi_feature_importance(const Tensor& features, const Tensor& probs,
                                        int bins);

}  // namespace hadua

#endif  // HADUA_EVAL_HPP_
