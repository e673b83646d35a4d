// core/include/hadua/features.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef HADUA_FEATURES_HPP_
#define HADUA_FEATURES_HPP_

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "hadua/tensor.hpp"

namespace hadua {

/// Frequency band [low_hz, high_hz).
struct BandSpec {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

/// The five conventional EEG bands. The band edges are not standardized
/// anywhere; these are the common convention used throughout this project:
/// delta 1-4, theta 4-8, alpha 8-14, beta 14-31, gamma 31-50 Hz.
std::vector<BandSpec> default_eeg_bands();

/// Pupil-diameter bands: 0-0.2, 0.2-0.4, 0.4-0.6, 0.6-1 Hz.
std::vector<BandSpec> default_pupil_bands();

/// Multichannel time-domain recording, data row-major c x T.
struct MultichannelSegment {
  std::size_t channels = 0;
  std::size_t samples = 0;
  double sample_rate = 0.0;
  std::vector<double> data;

  double sample(std::size_t ch, std::size_t t) const { return data[ch * samples + t]; }
};

struct StftConfig {
  double window_s = 1.0;   // Hann window length in seconds
  double overlap = 0.5;    // fraction of window shared by consecutive frames
};

/// STFT band decomposition: per channel and band, the time series
/// reconstructed (overlap-add, window-sum normalized) from the STFT bins
/// whose frequency falls inside [low, high). Output is indexed
/// [channel][band][t].
std::vector<std::vector<std::vector<double>>> band_decompose(
    const MultichannelSegment& segment, const std::vector<BandSpec>& bands,
    const StftConfig& stft = {});

/// Differential entropy in nats under a Gaussian model of the samples:
/// 0.5 * ln(2*pi*e*var). Requires >= 32 samples with nonzero variance.
double differential_entropy(std::span<const double> samples);

/// Histogram plug-in DE estimator (equal-width bins, Scott's rule).
/// Distribution-free; used by convergence checks and non-Gaussian cases.
double differential_entropy_histogram(std::span<const double> samples);

/// Per-sample EEG feature row of length channels x bands, channel-major
/// (ch0: all bands, ch1: all bands, ...). Each entry is the DE of that
/// channel's band-limited series.
std::vector<double> eeg_feature_vector(const MultichannelSegment& segment,
                                       const std::vector<BandSpec>& bands,
                                       const StftConfig& stft = {});

struct Fixation {
  double duration_ms = 0.0;
  double dispersion_x = 0.0;
  double dispersion_y = 0.0;
};

struct Saccade {
  double duration_ms = 0.0;
  double amplitude_deg = 0.0;
  double latency_ms = 0.0;
};

/// Event-level eye-movement record plus the two pupil-diameter series
/// (horizontal and vertical) sampled at pupil_rate Hz.
struct EyeEventStream {
  std::vector<Fixation> fixations;
  std::vector<Saccade> saccades;
  std::size_t blinks = 0;
  std::vector<double> pupil_h;
  std::vector<double> pupil_v;
  double pupil_rate = 0.0;
  double recording_s = 0.0;
};

/// Number of seconds of pupil signal per STFT window; 5 s gives the 0.2 Hz
/// resolution the narrow pupil bands need.
inline constexpr double kPupilWindowSeconds = 5.0;

/// 31 eye-movement features, in this fixed order:
///   [0..5]   pupil horizontal: mean, std, DE in each of the 4 bands
///   [6..11]  pupil vertical:   mean, std, DE in each of the 4 bands
///   [12..15] fixation dispersion: x mean, x std, y mean, y std
///   [16..17] fixation duration mean, std
///   [18..21] saccade duration mean, std; amplitude mean, std
///   [22..30] blink freq (1/s), fixation freq, max fixation duration,
///            total fixation dispersion, max fixation dispersion,
///            saccade freq, avg saccade duration, avg saccade amplitude,
///            avg saccade latency
/// Dispersion magnitude of a fixation is sqrt(dx^2 + dy^2); event stds are
/// population stds (a single event has std 0).
std::vector<double> em_features(const EyeEventStream& stream,
                                const std::vector<BandSpec>& pupil_bands);

inline constexpr std::size_t kEmFeatureCount = 31;

/// Column-wise standardization of a feature matrix: per feature,
/// (x - mean) / max(std, 1e-12). Used per subject before model input.
Tensor zscore_columns(const Tensor& features);

/// In-place radix-2 FFT (size must be a power of two); inverse divides by n.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

}  // namespace hadua

#endif  // HADUA_FEATURES_HPP_
