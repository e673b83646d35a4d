// core/src/features.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Population variance.
double var_of(std::span<const double> xs, double mu) {
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(xs.size());
}

double pop_std(std::span<const double> xs) {
  return std::sqrt(var_of(xs, mean_of(xs)));
}

void validate_bands(const std::vector<BandSpec>& bands, double sample_rate) {
  const double nyquist = sample_rate / 2.0;
  for (const BandSpec& b : bands) {
    if (!(b.low_hz >= 0.0 && b.low_hz < b.high_hz)) {
      throw ConfigError("band '" + b.name + "': need 0 <= low < high");
    }
    if (b.high_hz > nyquist) {
      throw ConfigError("band '" + b.name + "' exceeds the Nyquist frequency " +
                        std::to_string(nyquist) + " Hz");
    }
  }
}

}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ContractError("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

std::vector<BandSpec> default_eeg_bands() {
  return {{"delta", 1.0, 4.0},
          {"theta", 4.0, 8.0},
          {"alpha", 8.0, 14.0},
          {"beta", 14.0, 31.0},
          {"gamma", 31.0, 50.0}};
}

std::vector<BandSpec> default_pupil_bands() {
  return {{"p1", 0.0, 0.2}, {"p2", 0.2, 0.4}, {"p3", 0.4, 0.6}, {"p4", 0.6, 1.0}};
}

std::vector<std::vector<std::vector<double>>> band_decompose(
    const MultichannelSegment& segment, const std::vector<BandSpec>& bands,
    const StftConfig& stft) {
  if (segment.channels == 0 || segment.samples == 0 || segment.sample_rate <= 0.0) {
    throw ContractError("band_decompose: empty segment");
  }
  if (segment.data.size() != segment.channels * segment.samples) {
    throw ShapeError("band_decompose: data size does not match channels x samples");
  }
  validate_bands(bands, segment.sample_rate);
  if (!(stft.overlap >= 0.0 && stft.overlap < 1.0)) {
    throw ConfigError("band_decompose: overlap must lie in [0, 1)");
  }

  const std::size_t win = static_cast<std::size_t>(std::lround(stft.window_s * segment.sample_rate));
  if (win < 4) throw ConfigError("band_decompose: window too short");
  if (segment.samples < 2 * win) {
    throw ContractError("band_decompose: segment shorter than two windows");
  }
  const std::size_t hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(static_cast<double>(win) * (1.0 - stft.overlap))));
  const std::size_t nfft = next_pow2(win);

  // Periodic Hann; sums to a constant at 50% hop away from the edges.
  std::vector<double> window(win);
  for (std::size_t i = 0; i < win; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(win)));
  }

  // Per band, the set of FFT bins to keep (symmetric, so the inverse is real).
  std::vector<std::vector<char>> keep(bands.size(), std::vector<char>(nfft, 0));
  for (std::size_t b = 0; b < bands.size(); ++b) {
    for (std::size_t k = 0; k < nfft; ++k) {
      const std::size_t kk = std::min(k, nfft - k);
      const double freq = static_cast<double>(kk) * segment.sample_rate / static_cast<double>(nfft);
      if (freq >= bands[b].low_hz && freq < bands[b].high_hz) keep[b][k] = 1;
    }
  }

  const std::size_t T = segment.samples;
  std::vector<std::vector<std::vector<double>>> out(
      segment.channels,
      std::vector<std::vector<double>>(bands.size(), std::vector<double>(T, 0.0)));

  std::vector<double> window_sum(T, 0.0);
  std::vector<std::complex<double>> frame(nfft);
  std::vector<std::complex<double>> masked(nfft);

  for (std::size_t ch = 0; ch < segment.channels; ++ch) {
    std::fill(window_sum.begin(), window_sum.end(), 0.0);
    for (std::size_t start = 0; start + win <= T; start += hop) {
      for (std::size_t i = 0; i < nfft; ++i) {
        frame[i] = i < win ? std::complex<double>(segment.sample(ch, start + i) * window[i], 0.0)
                           : std::complex<double>(0.0, 0.0);
      }
      fft_inplace(frame, false);
      for (std::size_t b = 0; b < bands.size(); ++b) {
        for (std::size_t k = 0; k < nfft; ++k) {
          masked[k] = keep[b][k] ? frame[k] : std::complex<double>(0.0, 0.0);
        }
        fft_inplace(masked, true);
        for (std::size_t i = 0; i < win; ++i) {
          out[ch][b][start + i] += masked[i].real();
        }
      }
      for (std::size_t i = 0; i < win; ++i) window_sum[start + i] += window[i];
    }
    // Samples with weak window coverage (segment edges) are zeroed rather
    // than divided by a vanishing window sum, which would blow up leakage.
    for (std::size_t b = 0; b < bands.size(); ++b) {
      for (std::size_t t = 0; t < T; ++t) {
        out[ch][b][t] = window_sum[t] >= 0.5 ? out[ch][b][t] / window_sum[t] : 0.0;
      }
    }
  }
  return out;
}

double differential_entropy(std::span<const double> samples) {
  if (samples.size() < 32) {
    throw ContractError("differential_entropy: need at least 32 samples");
  }
  const double mu = mean_of(samples);
  double acc = 0.0;
  for (double x : samples) acc += (x - mu) * (x - mu);
  const double var = acc / static_cast<double>(samples.size() - 1);
  if (var == 0.0) {
    throw DegenerateError("differential_entropy: constant sequence");
  }
  return 0.5 * std::log(kTwoPi * std::numbers::e * var);
}

double differential_entropy_histogram(std::span<const double> samples) {
  if (samples.size() < 32) {
    throw ContractError("differential_entropy_histogram: need at least 32 samples");
  }
  const auto [mn_it, mx_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn_it, hi = *mx_it;
  if (lo == hi) throw DegenerateError("differential_entropy_histogram: constant sequence");

  const double n = static_cast<double>(samples.size());
  const double sd = pop_std(samples);
  const double scott = 3.49 * sd / std::cbrt(n);
  std::size_t bins = scott > 0.0
                         ? static_cast<std::size_t>(std::ceil((hi - lo) / scott))
                         : 8;
  bins = std::clamp<std::size_t>(bins, 8, 4096);
  const double width = (hi - lo) / static_cast<double>(bins);

  std::vector<std::size_t> counts(bins, 0);
  for (double x : samples) {
    std::size_t b = static_cast<std::size_t>((x - lo) / width);
    if (b >= bins) b = bins - 1;
    counts[b]++;
  }
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h + std::log(width);
}

std::vector<double> eeg_feature_vector(const MultichannelSegment& segment,
                                       const std::vector<BandSpec>& bands,
                                       const StftConfig& stft) {
  const auto series = band_decompose(segment, bands, stft);
  std::vector<double> row;
  row.reserve(segment.channels * bands.size());
  for (std::size_t ch = 0; ch < segment.channels; ++ch) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      row.push_back(differential_entropy(series[ch][b]));
    }
  }
  return row;
}

std::vector<double> em_features(const EyeEventStream& stream,
                                const std::vector<BandSpec>& pupil_bands) {
  if (stream.fixations.empty() || stream.saccades.empty()) {
    throw ContractError("em_features: need at least one fixation and one saccade");
  }
  if (pupil_bands.size() != 4) {
    throw ConfigError("em_features: expected 4 pupil bands");
  }
  if (stream.pupil_h.size() != stream.pupil_v.size() || stream.pupil_h.empty()) {
    throw ShapeError("em_features: pupil axes must be equal-length and non-empty");
  }
  if (stream.recording_s <= 0.0) throw ContractError("em_features: recording length must be > 0");
  for (const Fixation& f : stream.fixations) {
    if (!(f.duration_ms > 0.0)) throw ContractError("em_features: fixation duration must be > 0");
  }
  for (const Saccade& s : stream.saccades) {
    if (!(s.duration_ms > 0.0)) throw ContractError("em_features: saccade duration must be > 0");
    if (s.amplitude_deg < 0.0) throw ContractError("em_features: saccade amplitude must be >= 0");
  }

  std::vector<double> out;
  out.reserve(kEmFeatureCount);

  // Pupil per axis: mean, std on the full series; DE per band.
  MultichannelSegment pupil;
  pupil.channels = 2;
  pupil.samples = stream.pupil_h.size();
  pupil.sample_rate = stream.pupil_rate;
  pupil.data = stream.pupil_h;
  pupil.data.insert(pupil.data.end(), stream.pupil_v.begin(), stream.pupil_v.end());
  const auto bands =
      band_decompose(pupil, pupil_bands, StftConfig{kPupilWindowSeconds, 0.5});
  for (std::size_t axis = 0; axis < 2; ++axis) {
    const std::vector<double>& series = axis == 0 ? stream.pupil_h : stream.pupil_v;
    out.push_back(mean_of(series));
    out.push_back(pop_std(series));
    for (std::size_t b = 0; b < 4; ++b) {
      out.push_back(differential_entropy(bands[axis][b]));
    }
  }

  std::vector<double> disp_x, disp_y, disp_mag, fix_dur;
  for (const Fixation& f : stream.fixations) {
    disp_x.push_back(f.dispersion_x);
    disp_y.push_back(f.dispersion_y);
    disp_mag.push_back(std::hypot(f.dispersion_x, f.dispersion_y));
    fix_dur.push_back(f.duration_ms);
  }
  out.push_back(mean_of(disp_x));
  out.push_back(pop_std(disp_x));
  out.push_back(mean_of(disp_y));
  out.push_back(pop_std(disp_y));
  out.push_back(mean_of(fix_dur));
  out.push_back(pop_std(fix_dur));

  std::vector<double> sac_dur, sac_amp, sac_lat;
  for (const Saccade& s : stream.saccades) {
    sac_dur.push_back(s.duration_ms);
    sac_amp.push_back(s.amplitude_deg);
    sac_lat.push_back(s.latency_ms);
  }
  out.push_back(mean_of(sac_dur));
  out.push_back(pop_std(sac_dur));
  out.push_back(mean_of(sac_amp));
  out.push_back(pop_std(sac_amp));

  // Aggregates.
  out.push_back(static_cast<double>(stream.blinks) / stream.recording_s);
  out.push_back(static_cast<double>(stream.fixations.size()) / stream.recording_s);
  out.push_back(*std::max_element(fix_dur.begin(), fix_dur.end()));
  out.push_back(std::accumulate(disp_mag.begin(), disp_mag.end(), 0.0));
  out.push_back(*std::max_element(disp_mag.begin(), disp_mag.end()));
  out.push_back(static_cast<double>(stream.saccades.size()) / stream.recording_s);
  out.push_back(mean_of(sac_dur));
  out.push_back(mean_of(sac_amp));
  out.push_back(mean_of(sac_lat));

  return out;
}

Tensor zscore_columns(const Tensor& features) {
  const std::size_t n = features.rows(), d = features.cols();
  Tensor out({n, d});
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += features.at(i, j);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dlt = features.at(i, j) - mu;
      var += dlt * dlt;
    }
    const double sd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-12);
    for (std::size_t i = 0; i < n; ++i) out.at(i, j) = (features.at(i, j) - mu) / sd;
  }
  return out;
}

}  // namespace hadua
