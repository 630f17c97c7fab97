// Copyright 2026 The OHM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// MFCC front end: mel filterbank, 13 static cepstra and regression deltas.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "ohm/audio.hpp"
#include "ohm/error.hpp"

namespace ohm::features {

inline constexpr int kStaticDim = 13;
inline constexpr int kFeatureDim = 39;

struct MfccConfig {
  int sample_rate_hz = 16000;
  double window_ms = 20.0;
  double hop_ms = 10.0;
  int n_mels = 40;
  int n_fft = 512;
  int n_ceps = kStaticDim;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 selects sample_rate / 2
  double log_floor = 1e-10;
  int delta_window = 2;

  double effective_fmax() const {
    return fmax_hz > 0.0 ? fmax_hz : sample_rate_hz / 2.0;
  }
  int window_len() const {
    return audio::samples_for_ms(window_ms, sample_rate_hz);
  }

  /// Canonical textual form; the hash of this string binds models to the
  /// configuration that produced their training features.
  std::string canonical() const {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "sr=%d;win_ms=%.17g;hop_ms=%.17g;n_mels=%d;n_fft=%d;"
                  "n_ceps=%d;fmin=%.17g;fmax=%.17g;floor=%.17g;delta=%d",
                  sample_rate_hz, window_ms, hop_ms, n_mels, n_fft, n_ceps,
                  fmin_hz, effective_fmax(), log_floor, delta_window);
    return buf;
  }

  std::uint32_t hash() const {
    std::uint32_t h = 2166136261u;  // FNV-1a
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 16777619u;
    }
    return h;
  }

  void validate() const {
    if (sample_rate_hz <= 0) throw ConfigError("sample rate must be positive");
    if (n_mels < 1 || n_ceps < 1) throw ConfigError("n_mels and n_ceps must be positive");
    if (n_ceps > n_mels) {
      throw ConfigError("n_ceps (" + std::to_string(n_ceps) +
                        ") exceeds n_mels (" + std::to_string(n_mels) + ")");
    }
    if (n_fft < window_len()) {
      throw ConfigError("n_fft (" + std::to_string(n_fft) +
                        ") is smaller than the window (" +
                        std::to_string(window_len()) + " samples)");
    }
    if (!(fmin_hz >= 0.0) || !(effective_fmax() > fmin_hz) ||
        effective_fmax() > sample_rate_hz / 2.0) {
      throw ConfigError("mel band must satisfy 0 <= fmin < fmax <= Nyquist");
    }
    if (!(log_floor > 0.0)) throw ConfigError("log floor must be positive");
    if (delta_window < 1) throw ConfigError("delta window must be >= 1");
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// One triangular filter, described by its edge and peak frequencies in Hz.
struct Triangle {
  double lo_hz;
  double center_hz;
  double hi_hz;
};

struct MelFilterbank {
  std::vector<Triangle> filters;

  /// Weight matrix, n_filters x (n_fft/2 + 1), sampled at bin frequencies
  /// k * sample_rate / n_fft. Peaks have unit height.
  Eigen::MatrixXd weights(int n_fft, int sample_rate_hz) const {
    const int n_bins = n_fft / 2 + 1;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(filters.size()), n_bins);
    for (std::size_t m = 0; m < filters.size(); ++m) {
      const Triangle& t = filters[m];
      for (int k = 0; k < n_bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
        double v = 0.0;
        if (f > t.lo_hz && f <= t.center_hz) {
          v = (f - t.lo_hz) / (t.center_hz - t.lo_hz);
        } else if (f > t.center_hz && f < t.hi_hz) {
          v = (t.hi_hz - f) / (t.hi_hz - t.center_hz);
        }
        w(static_cast<Eigen::Index>(m), k) = v;
      }
    }
    return w;
  }
};

/// n_mels triangles whose edges are equally spaced on the HTK mel scale.
inline MelFilterbank make_mel_filterbank(const MfccConfig& cfg) {
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.effective_fmax());
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
  }
  MelFilterbank fb;
  fb.filters.reserve(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    fb.filters.push_back({edges[m], edges[m + 1], edges[m + 2]});
  }
  return fb;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline Eigen::MatrixXd dct2_matrix(int n_out, int n_in) {
  Eigen::MatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int n = 0; n < n_in; ++n) {
      d(k, n) = s * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return d;
}

/// Computes static cepstra for every frame, reusing the filterbank and DCT
/// tables across calls.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg)
      : MfccExtractor(cfg, make_mel_filterbank(cfg)) {}

  MfccExtractor(const MfccConfig& cfg, const MelFilterbank& fb) : cfg_(cfg) {
    cfg_.validate();
    if (static_cast<int>(fb.filters.size()) != cfg_.n_mels) {
      throw ConfigError("filterbank has " + std::to_string(fb.filters.size()) +
                        " filters, config expects " + std::to_string(cfg_.n_mels));
    }
    mel_ = fb.weights(cfg_.n_fft, cfg_.sample_rate_hz);
    dct_ = dct2_matrix(cfg_.n_ceps, cfg_.n_mels);
  }

  const MfccConfig& config() const { return cfg_; }

  /// n_frames x n_ceps.
  Eigen::MatrixXd compute(const audio::FrameSet& frames) const {
    if (frames.n_frames() == 0) throw EmptyInputError("no frames to analyse");
    if (frames.window_len > cfg_.n_fft) {
      throw ConfigError("n_fft (" + std::to_string(cfg_.n_fft) +
                        ") is smaller than the window (" +
                        std::to_string(frames.window_len) + " samples)");
    }
    const int n_bins = cfg_.n_fft / 2 + 1;
    Eigen::FFT<double> fft;
    std::vector<double> padded(cfg_.n_fft, 0.0);
    std::vector<std::complex<double>> spectrum;
    Eigen::VectorXd power(n_bins);
    Eigen::MatrixXd out(frames.n_frames(), cfg_.n_ceps);
    for (Eigen::Index i = 0; i < frames.n_frames(); ++i) {
      std::fill(padded.begin(), padded.end(), 0.0);
      for (int k = 0; k < frames.window_len; ++k) padded[k] = frames.frames(i, k);
      fft.fwd(spectrum, padded);
      for (int k = 0; k < n_bins; ++k) power(k) = std::norm(spectrum[k]);
      Eigen::VectorXd log_mel = mel_ * power;
      for (Eigen::Index m = 0; m < log_mel.size(); ++m) {
        log_mel(m) = std::log(std::max(log_mel(m), cfg_.log_floor));
      }
      out.row(i) = (dct_ * log_mel).transpose();
    }
    return out;
  }

 private:
  MfccConfig cfg_;
  Eigen::MatrixXd mel_;
  Eigen::MatrixXd dct_;
};

inline Eigen::MatrixXd compute_mfcc13(const audio::FrameSet& frames,
                                      const MfccConfig& cfg = {}) {
  return MfccExtractor(cfg).compute(frames);
}

/// Regression deltas over +/-window frames with edge replication:
///   d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum_n n^2)
inline Eigen::MatrixXd delta(const Eigen::MatrixXd& c, int window) {
  const Eigen::Index T = c.rows();
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T, c.cols());
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int n = 1; n <= window; ++n) {
      const Eigen::Index ahead = std::min<Eigen::Index>(t + n, T - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - n, 0);
      d.row(t) += n * (c.row(ahead) - c.row(behind));
    }
  }
  return d / denom;
}

/// [static | delta | delta-delta], width 3 * static.cols().
inline Eigen::MatrixXd append_deltas(const Eigen::MatrixXd& statics,
                                     int delta_window = 2) {
  if (statics.rows() < 1) throw EmptyInputError("no frames for delta computation");
  if (delta_window < 1) throw ArgumentError("delta window must be >= 1");
  const Eigen::MatrixXd d1 = delta(statics, delta_window);
  const Eigen::MatrixXd d2 = delta(d1, delta_window);
  Eigen::MatrixXd out(statics.rows(), 3 * statics.cols());
  out << statics, d1, d2;
  return out;
}

struct FeatureSequence {
  Eigen::MatrixXd vectors;            // n_frames x 39
  std::vector<double> frame_times_s;  // frame centres
  MfccConfig config;

  Eigen::Index n_frames() const { return vectors.rows(); }
};

inline std::vector<double> frame_centres(Eigen::Index n_frames, int window_len,
                                         int hop_len, int sample_rate_hz) {
  std::vector<double> t(static_cast<std::size_t>(n_frames));
  for (Eigen::Index i = 0; i < n_frames; ++i) {
    t[i] = (static_cast<double>(i) * hop_len + window_len / 2.0) / sample_rate_hz;
  }
  return t;
}

/// Full front end: resample to the configured rate, frame, MFCC, deltas.
/// A warped filterbank may replace the standard one (VTLP).
inline FeatureSequence extract_features(const audio::AudioBuffer& audio,
                                        const MfccConfig& cfg = {},
                                        const MelFilterbank* filterbank = nullptr) {
  const audio::AudioBuffer at_rate = audio::resample(audio, cfg.sample_rate_hz);
  const audio::FrameSet frames =
      audio::frame_signal(at_rate, cfg.window_ms, cfg.hop_ms);
  const MfccExtractor extractor = filterbank ? MfccExtractor(cfg, *filterbank)
                                             : MfccExtractor(cfg);
  FeatureSequence seq;
  seq.config = cfg;
  seq.vectors = append_deltas(extractor.compute(frames), cfg.delta_window);
  seq.frame_times_s = frame_centres(frames.n_frames(), frames.window_len,
                                    frames.hop_len, frames.sample_rate_hz);
  return seq;
}

}  // namespace ohm::features
