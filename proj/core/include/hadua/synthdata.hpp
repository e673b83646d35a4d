// core/include/hadua/synthdata.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_SYNTHDATA_HPP_
#define HADUA_SYNTHDATA_HPP_

#include <cstdint>
#include <vector>

#include "hadua/tensor.hpp"

namespace hadua {

/// Generator settings for the multi-subject bimodal benchmark. A shared
/// class-mean skeleton lives in latent space; every subject observes it
/// through its own random affine perturbation (rotation + translation,
/// scaled by eta) before the shared modality maps project to feature space.
struct DataSpec {
  int n_subjects = 6;
  int samples_per_subject = 300;
  int classes = 3;
  int d_latent = 8;
  int eeg_dim = 40;
  int eye_dim = 12;
  double eta = 1.0;          // subject shift magnitude
  double class_sep = 2.0;    // scale of the class-mean skeleton
  double latent_noise = 1.0; // within-class latent spread
  double eeg_noise = 0.4;    // additive noise after the eeg modality map
  double eye_noise = 0.8;    // additive noise after the eye modality map
  // Fraction of samples whose eye row is measurement noise with no class
  // signal (blink/illumination artifacts); gives modality gating something
  // real to suppress.
  double eye_dropout = 0.0;
  // Latent dims visible to each modality map: eeg reads the first
  // eeg_latent_dims, eye reads the last eye_latent_dims (0 = all). Partial
  // spans make the modalities complementary instead of redundant.
  int eeg_latent_dims = 0;
  int eye_latent_dims = 0;
  std::vector<double> class_priors;  // empty -> uniform

  void validate() const;
  std::vector<double> effective_priors() const;
};

/// One subject's resolved generation parameters.
struct SubjectSpec {
  int subject = 0;
  Tensor class_means;              // C x d_latent, after the subject shift
  Tensor rotation;                 // d_latent x d_latent orthogonal
  std::vector<double> translation; // d_latent
  Tensor eeg_map;                  // d_latent x eeg_dim (shared across subjects)
  Tensor eye_map;                  // d_latent x eye_dim
  double latent_noise = 1.0;
  double eeg_noise = 0.0;
  double eye_noise = 0.0;
  double eye_dropout = 0.0;
  std::vector<double> priors;
  std::vector<int> samples_per_class;
};

struct SubjectDataset {
  int subject = 0;
  Tensor eeg;  // n x eeg_dim
  Tensor eye;  // n x eye_dim
  std::vector<int> labels;
};

/// Deterministic per seed; per-subject streams use derived seeds, so
/// subjects may also be generated independently.
std::vector<SubjectDataset> generate_subjects(const DataSpec& spec, std::uint64_t seed);

SubjectSpec make_subject_spec(const DataSpec& spec, int subject, std::uint64_t seed);
SubjectDataset sample_subject(const SubjectSpec& spec, std::uint64_t seed);

/// Labeled source domain; row provenance kept for leakage checks.
struct LabeledSet {
  Tensor eeg;
  Tensor eye;
  std::vector<int> labels;
  std::vector<int> subjects;
};

/// Unlabeled target domain. There is no label member by construction.
struct UnlabeledSet {
  Tensor eeg;
  Tensor eye;
  int subject = -1;
};

struct LosoSplit {
  LabeledSet source;
  UnlabeledSet target;
  std::vector<int> target_labels;  // sequestered, evaluation only
};

/// Leave-one-subject-out split: source is the in-order union of all other
/// subjects; the held-out subject's labels are returned separately and
/// never enter the source structure.
LosoSplit leave_one_subject_out(const std::vector<SubjectDataset>& datasets, int held_out);

}  // namespace hadua

#endif  // HADUA_SYNTHDATA_HPP_
