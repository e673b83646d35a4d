// core/include/hadua/config.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_CONFIG_HPP_
#define HADUA_CONFIG_HPP_

#include <optional>
#include <string>
#include <vector>

#include "hadua/model.hpp"
#include "hadua/synthdata.hpp"
#include "hadua/train.hpp"

namespace hadua {

struct SweepSpec {
  enum class Kind { kTauAlpha, kBatchEpoch };
  Kind kind = Kind::kTauAlpha;
  std::vector<double> tau;
  std::vector<double> alpha;
  std::vector<int> batch_size;
  std::vector<long> epochs;
  std::vector<std::uint64_t> seeds;
  int held_out = 0;   // ignored when loso is true
  bool loso = false;  // average each cell over all leave-one-subject-out folds
};

/// One config file fully determines a run. The schema is strict: every
/// section and key below is required (sweep is optional) and unknown keys
/// are rejected with a diagnostic naming the offender.
struct ExperimentConfig {
  std::string run_id = "default";
  std::uint64_t seed = 1;
  DataSpec data;
  bool zscore = true;  // per-subject column standardization before model input
  ModelConfig model;   // eeg_dim/eye_dim/classes are derived from `data`
  TrainConfig train;
  std::optional<SweepSpec> sweep;

  static ExperimentConfig defaults();
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);

  std::string to_json_text() const;

  /// FNV-1a hash of the canonical serialization; stamped into manifests and
  /// reports so outputs can be traced to an exact configuration.
  std::string spec_hash() const;

  /// Named single-switch presets: full, no-ua, no-gaussian-weight, no-cmmd,
  /// no-mmd, no-attention, hard-threshold, source-only, dfn-baseline.
  void apply_ablation_preset(const std::string& name);
};

}  // namespace hadua

#endif  // HADUA_CONFIG_HPP_
