// core/src/synthdata.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

// Random orthogonal perturbation of the identity: a product of Givens
// rotations in random planes with angles scaled by eta. eta = 0 gives the
// identity exactly.
Tensor givens_rotation(std::size_t dim, double eta, std::mt19937_64& gen) {
  Tensor r = identity(dim);
  std::uniform_int_distribution<std::size_t> axis(0, dim - 1);
  std::uniform_real_distribution<double> angle(-0.5, 0.5);
  for (std::size_t k = 0; k < dim; ++k) {
    std::size_t i = axis(gen), j = axis(gen);
    const double theta = eta * angle(gen);
    if (i == j) continue;
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t col = 0; col < dim; ++col) {
      const double ri = r.at(i, col), rj = r.at(j, col);
      r.at(i, col) = c * ri - s * rj;
      r.at(j, col) = s * ri + c * rj;
    }
  }
  return r;
}

// Shared global skeleton: class means, modality maps. Derived purely from
// the base seed so every subject sees the same skeleton.
struct Skeleton {
  Tensor class_means;  // C x d_latent
  Tensor eeg_map, eye_map;
};

Skeleton make_skeleton(const DataSpec& spec, std::uint64_t seed) {
  std::mt19937_64 gen(mix_seed(seed, 0xABCDEF));
  Skeleton s;
  std::normal_distribution<double> unit(0.0, 1.0);
  s.class_means = Tensor({static_cast<std::size_t>(spec.classes),
                          static_cast<std::size_t>(spec.d_latent)});
  for (std::size_t i = 0; i < s.class_means.size(); ++i) {
    s.class_means[i] = spec.class_sep * unit(gen);
  }
  const int d = spec.d_latent;
  const int eeg_span = spec.eeg_latent_dims == 0 ? d : spec.eeg_latent_dims;
  const int eye_span = spec.eye_latent_dims == 0 ? d : spec.eye_latent_dims;
  // eeg reads latent dims [0, eeg_span), eye reads [d - eye_span, d).
  const double eeg_scale = 1.0 / std::sqrt(static_cast<double>(eeg_span));
  s.eeg_map = Tensor({static_cast<std::size_t>(d), static_cast<std::size_t>(spec.eeg_dim)});
  for (int i = 0; i < eeg_span; ++i) {
    for (int j = 0; j < spec.eeg_dim; ++j) {
      s.eeg_map.at(i, j) = eeg_scale * unit(gen);
    }
  }
  const double eye_scale = 1.0 / std::sqrt(static_cast<double>(eye_span));
  s.eye_map = Tensor({static_cast<std::size_t>(d), static_cast<std::size_t>(spec.eye_dim)});
  for (int i = d - eye_span; i < d; ++i) {
    for (int j = 0; j < spec.eye_dim; ++j) {
      s.eye_map.at(i, j) = eye_scale * unit(gen);
    }
  }
  return s;
}

// Largest-remainder allocation of n samples to the priors; deterministic.
std::vector<int> allocate_counts(int n, const std::vector<double>& priors) {
  const int c = static_cast<int>(priors.size());
  std::vector<int> counts(c, 0);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int i = 0; i < c; ++i) {
    const double exact = priors[i] * n;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int k = 0; k < n - assigned; ++k) counts[remainders[k % c].second]++;
  return counts;
}

}  // namespace

void DataSpec::validate() const {
  if (classes < 2) throw ConfigError("data: need at least 2 classes");
  if (d_latent < 1) throw ConfigError("data: d_latent must be >= 1");
  if (n_subjects < 2) throw ConfigError("data: need at least 2 subjects");
  if (samples_per_subject < classes) {
    throw ConfigError("data: samples_per_subject must cover every class");
  }
  if (eeg_dim < 1 || eye_dim < 1) throw ConfigError("data: modality dims must be >= 1");
  if (eta < 0.0) throw ConfigError("data: eta must be >= 0");
  if (!(eye_dropout >= 0.0 && eye_dropout < 1.0)) {
    throw ConfigError("data: eye_dropout must lie in [0, 1)");
  }
  if (eeg_latent_dims < 0 || eeg_latent_dims > d_latent || eye_latent_dims < 0 ||
      eye_latent_dims > d_latent) {
    throw ConfigError("data: modality latent spans must lie in [0, d_latent]");
  }
  if (!class_priors.empty()) {
    if (static_cast<int>(class_priors.size()) != classes) {
      throw ConfigError("data: class_priors size != classes");
    }
    double sum = 0.0;
    for (double p : class_priors) {
      if (!(p > 0.0)) throw ConfigError("data: class priors must be > 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("data: class priors must sum to 1");
  }
}

std::vector<double> DataSpec::effective_priors() const {
  if (!class_priors.empty()) return class_priors;
  return std::vector<double>(classes, 1.0 / static_cast<double>(classes));
}

SubjectSpec make_subject_spec(const DataSpec& spec, int subject, std::uint64_t seed) {
  spec.validate();
  const Skeleton skel = make_skeleton(spec, seed);
  std::mt19937_64 gen(mix_seed(seed, 1000 + static_cast<std::uint64_t>(subject)));
  std::normal_distribution<double> unit(0.0, 1.0);

  SubjectSpec s;
  s.subject = subject;
  s.rotation = givens_rotation(static_cast<std::size_t>(spec.d_latent), spec.eta, gen);
  // The translation carries most of the shift: it is the component marginal
  // alignment can remove, while the rotation keeps class-conditional
  // structure misaligned enough that conditional alignment still matters.
  s.translation.resize(spec.d_latent);
  for (double& t : s.translation) t = 2.0 * spec.eta * unit(gen);

  // class means after the subject's affine shift
  s.class_means = Tensor({static_cast<std::size_t>(spec.classes),
                          static_cast<std::size_t>(spec.d_latent)});
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.d_latent; ++i) {
      double acc = 0.0;
      for (int j = 0; j < spec.d_latent; ++j) {
        acc += s.rotation.at(i, j) * skel.class_means.at(c, j);
      }
      s.class_means.at(c, i) = acc + s.translation[i];
    }
  }
  s.eeg_map = skel.eeg_map;
  s.eye_map = skel.eye_map;
  s.latent_noise = spec.latent_noise;
  s.eeg_noise = spec.eeg_noise;
  s.eye_noise = spec.eye_noise;
  s.eye_dropout = spec.eye_dropout;
  s.priors = spec.effective_priors();
  s.samples_per_class = allocate_counts(spec.samples_per_subject, s.priors);
  return s;
}

SubjectDataset sample_subject(const SubjectSpec& spec, std::uint64_t seed) {
  std::mt19937_64 gen(mix_seed(seed, 5000 + static_cast<std::uint64_t>(spec.subject)));
  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> drop(0.0, 1.0);

  const int classes = static_cast<int>(spec.samples_per_class.size());
  const int total = std::accumulate(spec.samples_per_class.begin(),
                                    spec.samples_per_class.end(), 0);
  if (total <= 0) throw ConfigError("sample_subject: zero samples requested");
  const std::size_t d_latent = spec.class_means.cols();
  const std::size_t eeg_dim = spec.eeg_map.cols();
  const std::size_t eye_dim = spec.eye_map.cols();

  SubjectDataset out;
  out.subject = spec.subject;
  out.eeg = Tensor({static_cast<std::size_t>(total), eeg_dim});
  out.eye = Tensor({static_cast<std::size_t>(total), eye_dim});
  out.labels.reserve(total);

  std::vector<double> z(d_latent);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int k = 0; k < spec.samples_per_class[c]; ++k) {
      for (std::size_t i = 0; i < d_latent; ++i) {
        z[i] = spec.class_means.at(c, i) + spec.latent_noise * unit(gen);
      }
      for (std::size_t j = 0; j < eeg_dim; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d_latent; ++i) acc += z[i] * spec.eeg_map.at(i, j);
        out.eeg.at(row, j) = acc + spec.eeg_noise * unit(gen);
      }
      const bool eye_dropped = drop(gen) < spec.eye_dropout;
      for (std::size_t j = 0; j < eye_dim; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d_latent; ++i) acc += z[i] * spec.eye_map.at(i, j);
        // A dropped row keeps only the measurement-noise floor.
        out.eye.at(row, j) = (eye_dropped ? 0.0 : acc) + spec.eye_noise * unit(gen);
      }
      out.labels.push_back(c);
      ++row;
    }
  }
  return out;
}

std::vector<SubjectDataset> generate_subjects(const DataSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<SubjectDataset> out;
  out.reserve(spec.n_subjects);
  for (int s = 0; s < spec.n_subjects; ++s) {
    out.push_back(sample_subject(make_subject_spec(spec, s, seed), seed));
  }
  return out;
}

LosoSplit leave_one_subject_out(const std::vector<SubjectDataset>& datasets, int held_out) {
  const auto it = std::find_if(datasets.begin(), datasets.end(),
                               [&](const SubjectDataset& d) { return d.subject == held_out; });
  if (it == datasets.end()) {
    throw ContractError("leave_one_subject_out: unknown subject " + std::to_string(held_out));
  }

  std::size_t rows = 0;
  for (const SubjectDataset& d : datasets) {
    if (d.subject != held_out) rows += d.eeg.rows();
  }
  const std::size_t eeg_dim = it->eeg.cols();
  const std::size_t eye_dim = it->eye.cols();

  LosoSplit split;
  split.source.eeg = Tensor({rows, eeg_dim});
  split.source.eye = Tensor({rows, eye_dim});
  std::size_t row = 0;
  for (const SubjectDataset& d : datasets) {
    if (d.subject == held_out) continue;
    for (std::size_t r = 0; r < d.eeg.rows(); ++r) {
      for (std::size_t c = 0; c < eeg_dim; ++c) split.source.eeg.at(row, c) = d.eeg.at(r, c);
      for (std::size_t c = 0; c < eye_dim; ++c) split.source.eye.at(row, c) = d.eye.at(r, c);
      split.source.labels.push_back(d.labels[r]);
      split.source.subjects.push_back(d.subject);
      ++row;
    }
  }
  split.target.eeg = it->eeg;
  split.target.eye = it->eye;
  split.target.subject = held_out;
  split.target_labels = it->labels;
  return split;
}

}  // namespace hadua
