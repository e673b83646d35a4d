// tests/test_synthdata.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hadua/alignment.hpp"
#include "hadua/errors.hpp"
#include "hadua/synthdata.hpp"

using namespace hadua;

namespace {

DataSpec small_spec() {
  DataSpec s;
  s.n_subjects = 3;
  s.samples_per_subject = 60;
  s.classes = 3;
  s.d_latent = 4;
  s.eeg_dim = 8;
  s.eye_dim = 5;
  s.eta = 1.0;
  s.class_sep = 2.0;
  s.latent_noise = 1.0;
  s.eeg_noise = 0.3;
  s.eye_noise = 0.3;
  return s;
}

std::vector<double> class_mean(const SubjectDataset& d, int cls, bool eeg) {
  const Tensor& m = eeg ? d.eeg : d.eye;
  std::vector<double> mean(m.cols(), 0.0);
  int count = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (d.labels[r] != cls) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m.at(r, c);
    ++count;
  }
  for (double& v : mean) v /= count;
  return mean;
}

}  // namespace

TEST_CASE("eta=0 with zero noise gives identical class-conditional means") {
  DataSpec s = small_spec();
  s.eta = 0.0;
  s.latent_noise = 0.0;
  s.eeg_noise = 0.0;
  s.eye_noise = 0.0;
  const auto data = generate_subjects(s, 11);
  for (int c = 0; c < s.classes; ++c) {
    const auto ref_eeg = class_mean(data[0], c, true);
    const auto ref_eye = class_mean(data[0], c, false);
    for (int subj = 1; subj < s.n_subjects; ++subj) {
      const auto m_eeg = class_mean(data[subj], c, true);
      const auto m_eye = class_mean(data[subj], c, false);
      for (std::size_t j = 0; j < ref_eeg.size(); ++j) {
        CHECK(std::abs(m_eeg[j] - ref_eeg[j]) < 1e-12);
      }
      for (std::size_t j = 0; j < ref_eye.size(); ++j) {
        CHECK(std::abs(m_eye[j] - ref_eye[j]) < 1e-12);
      }
    }
  }
}

TEST_CASE("same seed reproduces identical datasets") {
  const auto a = generate_subjects(small_spec(), 5);
  const auto b = generate_subjects(small_spec(), 5);
  for (int s = 0; s < 3; ++s) {
    CHECK(a[s].eeg.data() == b[s].eeg.data());
    CHECK(a[s].eye.data() == b[s].eye.data());
    CHECK(a[s].labels == b[s].labels);
  }
}

TEST_CASE("cross-subject MMD grows with the shift magnitude") {
  std::vector<double> mmds;
  double sigma = 0.0;
  for (double eta : {0.0, 0.5, 1.0, 2.0}) {
    DataSpec s = small_spec();
    s.samples_per_subject = 120;
    s.eta = eta;
    const auto data = generate_subjects(s, 21);
    if (sigma == 0.0) sigma = median_heuristic(data[0].eeg);
    mmds.push_back(mmd2(data[0].eeg, data[1].eeg,
                        {sigma, KernelConfig::Bandwidth::kFixed}));
  }
  for (std::size_t i = 1; i < mmds.size(); ++i) {
    CHECK(mmds[i] >= mmds[i - 1]);
  }
  CHECK(mmds.back() > mmds.front());
}

TEST_CASE("class priors are matched by the deterministic allocation") {
  DataSpec s = small_spec();
  s.samples_per_subject = 10000;
  s.class_priors = {0.6, 0.3, 0.1};
  const auto data = generate_subjects(s, 2);
  std::vector<int> counts(3, 0);
  for (int y : data[0].labels) counts[y]++;
  // chi^2 against the prior multinomial; deterministic counts are near-exact
  double chi2 = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double expected = s.class_priors[c] * s.samples_per_subject;
    chi2 += (counts[c] - expected) * (counts[c] - expected) / expected;
  }
  CHECK(chi2 < 9.21);  // chi^2 critical value, 2 dof, alpha = 0.01
}

TEST_CASE("leave-one-subject-out splits cleanly") {
  const auto data = generate_subjects(small_spec(), 7);
  const LosoSplit split = leave_one_subject_out(data, 1);
  CHECK(split.source.eeg.rows() == 2 * 60);
  CHECK(split.source.labels.size() == 120);
  CHECK(split.target.eeg.rows() == 60);
  CHECK(split.target.subject == 1);
  CHECK(split.target_labels.size() == 60);
  for (int s : split.source.subjects) {
    CHECK(s != 1);  // held-out rows never reach the source
  }

  // order-stable for fixed input order
  const LosoSplit again = leave_one_subject_out(data, 1);
  CHECK(split.source.eeg.data() == again.source.eeg.data());
  CHECK(split.source.subjects == again.source.subjects);

  CHECK_THROWS_AS(leave_one_subject_out(data, 99), ContractError);
}

TEST_CASE("degenerate spec is rejected") {
  DataSpec s = small_spec();
  s.samples_per_subject = 0;
  CHECK_THROWS_AS(generate_subjects(s, 1), ConfigError);
  DataSpec s2 = small_spec();
  s2.class_priors = {0.5, 0.5};  // wrong length
  CHECK_THROWS_AS(generate_subjects(s2, 1), ConfigError);
}
