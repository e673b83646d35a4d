// tests/test_features.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "hadua/errors.hpp"
#include "hadua/features.hpp"
#include "testutil.hpp"

using namespace hadua;
namespace tu = hadua::testutil;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

MultichannelSegment sinusoid_segment(std::size_t channels, double fs, double seconds,
                                     const std::vector<double>& freqs,
                                     const std::vector<double>& amps, double noise_sd,
                                     std::uint64_t seed) {
  MultichannelSegment seg;
  seg.channels = channels;
  seg.sample_rate = fs;
  seg.samples = static_cast<std::size_t>(seconds * fs);
  seg.data.resize(channels * seg.samples);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t t = 0; t < seg.samples; ++t) {
      double v = 0.0;
      for (std::size_t k = 0; k < freqs.size(); ++k) {
        v += amps[k] * std::sin(kTwoPi * freqs[k] * static_cast<double>(t) / fs);
      }
      seg.data[ch * seg.samples + t] = v + (noise_sd > 0 ? noise(gen) : 0.0);
    }
  }
  return seg;
}

double energy(const std::vector<double>& xs) {
  double e = 0.0;
  for (double x : xs) e += x * x;
  return e;
}

// Independent oracle: direct O(n^2) DFT band energy of the raw signal.
// No shared code with the production STFT path.
std::vector<double> dft_band_energy(const std::vector<double>& x, double fs,
                                    const std::vector<BandSpec>& bands) {
  const std::size_t n = x.size();
  std::vector<double> out(bands.size(), 0.0);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -kTwoPi * static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    const double freq = static_cast<double>(k) * fs / static_cast<double>(n);
    double weight = (k == 0 || k == n - k) ? 1.0 : 2.0;  // conjugate pair
    for (std::size_t b = 0; b < bands.size(); ++b) {
      if (freq >= bands[b].low_hz && freq < bands[b].high_hz) {
        out[b] += weight * std::norm(acc) / static_cast<double>(n);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("pure 10 Hz sinusoid lands in the alpha band") {
  auto seg = sinusoid_segment(1, 200.0, 4.0, {10.0}, {1.0}, 0.0, 1);
  const auto bands = default_eeg_bands();
  const auto series = band_decompose(seg, bands);
  double total = 0.0;
  std::vector<double> per_band(bands.size());
  for (std::size_t b = 0; b < bands.size(); ++b) {
    per_band[b] = energy(series[0][b]);
    total += per_band[b];
  }
  CHECK(total > 0.0);
  CHECK(per_band[2] / total > 0.95);  // alpha = 8-14 Hz

  // Independent oracle agrees on where the energy lives.
  std::vector<double> raw(seg.data.begin(), seg.data.begin() + seg.samples);
  const auto oracle = dft_band_energy(raw, seg.sample_rate, bands);
  double oracle_total = 0.0;
  for (double e : oracle) oracle_total += e;
  CHECK(oracle[2] / oracle_total > 0.99);
}

TEST_CASE("zero signal decomposes to all-zero bands") {
  MultichannelSegment seg;
  seg.channels = 1;
  seg.sample_rate = 128.0;
  seg.samples = 512;
  seg.data.assign(512, 0.0);
  const auto series = band_decompose(seg, default_eeg_bands());
  for (const auto& band : series[0]) {
    for (double v : band) CHECK(v == 0.0);
  }
}

TEST_CASE("2 Hz sinusoid is dominated by delta") {
  auto seg = sinusoid_segment(1, 200.0, 4.0, {2.0}, {1.0}, 0.0, 2);
  const auto series = band_decompose(seg, default_eeg_bands());
  std::vector<double> per_band;
  for (const auto& band : series[0]) per_band.push_back(energy(band));
  const std::size_t best =
      std::max_element(per_band.begin(), per_band.end()) - per_band.begin();
  CHECK(best == 0);  // delta = 1-4 Hz
}

TEST_CASE("band energy matches direct FFT masking within 2% on mixtures") {
  // fs = 256 puts the 1 s STFT bins on integer frequencies; integer-Hz
  // mid-band tones keep each Hann main lobe inside its band.
  auto seg = sinusoid_segment(1, 256.0, 6.0, {2.0, 6.0, 11.0, 22.0, 40.0},
                              {1.0, 0.8, 1.2, 0.6, 0.9}, 0.0, 3);
  const auto bands = default_eeg_bands();
  const auto series = band_decompose(seg, bands);
  std::vector<double> raw(seg.data.begin(), seg.data.begin() + seg.samples);
  const auto oracle = dft_band_energy(raw, seg.sample_rate, bands);

  // Ignore the window-starved edges (first/last full window).
  const std::size_t margin = 256;
  for (std::size_t b = 0; b < bands.size(); ++b) {
    double got = 0.0;
    for (std::size_t t = margin; t + margin < seg.samples; ++t) {
      got += series[0][b][t] * series[0][b][t];
    }
    const double scale = static_cast<double>(seg.samples) /
                         static_cast<double>(seg.samples - 2 * margin);
    got *= scale;
    CHECK(got == doctest::Approx(oracle[b]).epsilon(0.02));
  }
}

TEST_CASE("band outside Nyquist is a config error") {
  auto seg = sinusoid_segment(1, 60.0, 4.0, {5.0}, {1.0}, 0.0, 4);
  CHECK_THROWS_AS(band_decompose(seg, {{"hot", 10.0, 40.0}}), ConfigError);
}

TEST_CASE("differential entropy of a standard Gaussian") {
  auto gen = tu::rng(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> xs(100000);
  for (double& x : xs) x = dist(gen);
  const double expected = 0.5 * std::log(kTwoPi * std::numbers::e);  // 1.41894
  CHECK(differential_entropy(xs) == doctest::Approx(expected).epsilon(0.02 / expected));
  CHECK(differential_entropy_histogram(xs) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("differential entropy of Uniform(0,1) is 0 (histogram estimator)") {
  auto gen = tu::rng(43);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::vector<double> xs(100000);
  for (double& x : xs) x = dist(gen);
  CHECK(std::abs(differential_entropy_histogram(xs)) < 0.02);
}

TEST_CASE("scaling x -> 2x adds ln 2 to the entropy") {
  auto gen = tu::rng(44);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> xs(100000), ys(100000);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xs[i] = dist(gen);
    ys[i] = 2.0 * xs[i];
  }
  CHECK(differential_entropy(ys) - differential_entropy(xs) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(differential_entropy_histogram(ys) - differential_entropy_histogram(xs) ==
        doctest::Approx(std::log(2.0)).epsilon(0.03));
}

TEST_CASE("constant sequence is a degenerate distribution") {
  std::vector<double> xs(64, 3.0);
  CHECK_THROWS_AS(differential_entropy(xs), DegenerateError);
  CHECK_THROWS_AS(differential_entropy_histogram(xs), DegenerateError);
}

TEST_CASE("histogram DE converges with sample count") {
  const double expected = 0.5 * std::log(kTwoPi * std::numbers::e);
  auto run = [&](std::size_t n) {
    auto gen = tu::rng(45);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> xs(n);
    for (double& x : xs) x = dist(gen);
    return std::abs(differential_entropy_histogram(xs) - expected);
  };
  CHECK(run(100000) < run(1000));
}

TEST_CASE("eeg_feature_vector has length channels x bands") {
  auto seg = sinusoid_segment(2, 200.0, 3.0, {3.0, 10.0, 20.0}, {1.0, 1.0, 0.5}, 0.05, 5);
  const auto row = eeg_feature_vector(seg, default_eeg_bands());
  CHECK(row.size() == 2 * 5);
  // 62 channels x 5 bands = 310, without running 62 decompositions.
  CHECK(62 * default_eeg_bands().size() == 310);
}

TEST_CASE("identical channels give identical per-band DE blocks") {
  auto seg = sinusoid_segment(2, 200.0, 3.0, {7.0, 12.0}, {1.0, 0.7}, 0.05, 6);
  // Copy channel 0 into channel 1.
  for (std::size_t t = 0; t < seg.samples; ++t) {
    seg.data[seg.samples + t] = seg.data[t];
  }
  const auto row = eeg_feature_vector(seg, default_eeg_bands());
  for (std::size_t b = 0; b < 5; ++b) {
    CHECK(row[b] == doctest::Approx(row[5 + b]).epsilon(1e-9));
  }
}

TEST_CASE("channel permutation permutes 5-blocks identically") {
  auto seg = sinusoid_segment(3, 200.0, 3.0, {5.0}, {1.0}, 0.2, 7);
  auto swapped = seg;
  for (std::size_t t = 0; t < seg.samples; ++t) {
    std::swap(swapped.data[0 * seg.samples + t], swapped.data[2 * seg.samples + t]);
  }
  const auto a = eeg_feature_vector(seg, default_eeg_bands());
  const auto b = eeg_feature_vector(swapped, default_eeg_bands());
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(a[k] == doctest::Approx(b[10 + k]).epsilon(1e-12));
    CHECK(a[10 + k] == doctest::Approx(b[k]).epsilon(1e-12));
    CHECK(a[5 + k] == doctest::Approx(b[5 + k]).epsilon(1e-12));
  }
}

namespace {

EyeEventStream make_stream(std::uint64_t seed) {
  EyeEventStream s;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  s.recording_s = 60.0;
  s.pupil_rate = 30.0;
  const std::size_t n = static_cast<std::size_t>(s.recording_s * s.pupil_rate);
  for (std::size_t t = 0; t < n; ++t) {
    const double sec = static_cast<double>(t) / s.pupil_rate;
    s.pupil_h.push_back(3.0 + 0.3 * std::sin(kTwoPi * 0.1 * sec) + noise(gen));
    s.pupil_v.push_back(2.8 + 0.2 * std::sin(kTwoPi * 0.5 * sec) + noise(gen));
  }
  std::uniform_real_distribution<double> dur(80.0, 400.0);
  for (int i = 0; i < 40; ++i) {
    s.fixations.push_back({dur(gen), std::abs(noise(gen)) * 10, std::abs(noise(gen)) * 10});
  }
  for (int i = 0; i < 30; ++i) {
    s.saccades.push_back({dur(gen) / 8, std::abs(noise(gen)) * 100, dur(gen)});
  }
  s.blinks = 6;
  return s;
}

}  // namespace

TEST_CASE("em_features returns 31 values for a valid stream") {
  const auto row = em_features(make_stream(8), default_pupil_bands());
  CHECK(row.size() == kEmFeatureCount);
  for (double v : row) CHECK(std::isfinite(v));
}

TEST_CASE("single fixation has mean 200 and std 0") {
  auto s = make_stream(9);
  s.fixations = {{200.0, 1.0, 2.0}};
  const auto row = em_features(s, default_pupil_bands());
  CHECK(row[16] == doctest::Approx(200.0));
  CHECK(row[17] == 0.0);
}

TEST_CASE("6 blinks over 60 s is 0.1 per second") {
  auto s = make_stream(10);
  s.blinks = 6;
  s.recording_s = 60.0;
  const auto row = em_features(s, default_pupil_bands());
  CHECK(row[22] == doctest::Approx(0.1));
}

TEST_CASE("empty fixations or saccades are rejected") {
  auto s = make_stream(11);
  s.fixations.clear();
  CHECK_THROWS_AS(em_features(s, default_pupil_bands()), ContractError);
  auto s2 = make_stream(12);
  s2.saccades.clear();
  CHECK_THROWS_AS(em_features(s2, default_pupil_bands()), ContractError);
}

TEST_CASE("zscore_columns standardizes each feature") {
  auto gen = tu::rng(13);
  Tensor x = tu::gaussian_tensor({50, 4}, gen, 3.0, 2.0);
  Tensor z = zscore_columns(x);
  for (std::size_t j = 0; j < 4; ++j) {
    double mu = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 50; ++i) mu += z.at(i, j);
    mu /= 50;
    for (std::size_t i = 0; i < 50; ++i) var += (z.at(i, j) - mu) * (z.at(i, j) - mu);
    var /= 50;
    CHECK(std::abs(mu) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
}
