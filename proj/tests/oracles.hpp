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

// Independent reference computations used by the unit and acceptance
// suites. Nothing here calls into the library's numeric code paths.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace ohm::oracle {

inline std::vector<float> sine(double freq_hz, double seconds, int sample_rate_hz, double amplitude = 0.5) {
  std::vector<float> out(static_cast<std::size_t>(std::lround(seconds * sample_rate_hz)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / sample_rate_hz));
  }
  return out;
}

/// Spectral magnitude at an arbitrary frequency by direct correlation with
/// a complex exponential (Hann-weighted).
inline double magnitude_at(const std::vector<float>& x, int sample_rate_hz, double freq_hz) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    const double phase = -2.0 * std::numbers::pi * freq_hz * i / sample_rate_hz;
    acc += w * x[i] * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return std::abs(acc);
}

/// Frequency of the largest spectral magnitude on a grid.
inline double dominant_frequency(const std::vector<float>& x, int sample_rate_hz, double lo_hz, double hi_hz,
                                 double step_hz = 0.5) {
  double best_f = lo_hz, best = -1.0;
  for (double f = lo_hz; f <= hi_hz; f += step_hz) {
    const double m = magnitude_at(x, sample_rate_hz, f);
    if (m > best) {
      best = m;
      best_f = f;
    }
  }
  return best_f;
}

/// Naive-loop MFCC of a single windowed frame: direct DFT, triangular HTK
/// mel filters evaluated from their defining formula, natural log with
/// floor, orthonormal DCT-II.
inline std::vector<double> naive_mfcc(const std::vector<double>& frame, int sample_rate_hz, int n_fft, int n_mels,
                                      int n_ceps, double log_floor) {
  const int n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_bins, 0.0);
  for (int k = 0; k < n_bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      const double a = 2.0 * std::numbers::pi * k * static_cast<double>(n) / n_fft;
      re += frame[n] * std::cos(a);
      im -= frame[n] * std::sin(a);
    }
    power[k] = re * re + im * im;
  }
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double top = mel(sample_rate_hz / 2.0);
  std::vector<double> edge(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edge[i] = hz(top * i / (n_mels + 1));
  std::vector<double> logmel(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    double e = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / n_fft;
      double w = 0.0;
      if (f > edge[m] && f <= edge[m + 1]) w = (f - edge[m]) / (edge[m + 1] - edge[m]);
      if (f > edge[m + 1] && f < edge[m + 2]) w = (edge[m + 2] - f) / (edge[m + 2] - edge[m + 1]);
      e += w * power[k];
    }
    logmel[m] = std::log(e > log_floor ? e : log_floor);
  }
  std::vector<double> c(n_ceps, 0.0);
  for (int k = 0; k < n_ceps; ++k) {
    double s = 0.0;
    for (int n = 0; n < n_mels; ++n) s += logmel[n] * std::cos(std::numbers::pi * k * (n + 0.5) / n_mels);
    c[k] = s * (k == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels));
  }
  return c;
}

inline std::vector<double> hamming_window(int n) {
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / (n - 1));
  return w;
}

// Textbook statistics, written out term by term.

inline double direct_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double num = 0, dx2 = 0, dy2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx2 += (x[i] - mx) * (x[i] - mx);
    dy2 += (y[i] - my) * (y[i] - my);
  }
  return num / (std::sqrt(dx2) * std::sqrt(dy2));
}

struct DirectWelch {
  double t;
  double dof;
};

inline DirectWelch direct_welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mv = [](const std::vector<double>& v, double& m, double& var) {
    m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= static_cast<double>(v.size() - 1);
  };
  double ma, va, mb, vb;
  mv(a, ma, va);
  mv(b, mb, vb);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double t = (ma - mb) / std::sqrt(va / na + vb / nb);
  const double dof = std::pow(va / na + vb / nb, 2) /
                     (std::pow(va / na, 2) / (na - 1) + std::pow(vb / nb, 2) / (nb - 1));
  return {t, dof};
}

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
/// `y` is 1 - x, passed separately so callers can form it without
/// cancellation.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, y, x);
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y)) / a;
  const double tiny = 1e-300;
  double f = 1.0, c = 1.0, d = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    double num;
    if (i == 0) {
      num = 1.0;
    } else if (i % 2 == 0) {
      num = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
    } else {
      num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
    }
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    const double cd = c * d;
    f *= cd;
    if (std::abs(1.0 - cd) < 1e-16) break;
  }
  return front * (f - 1.0);
}

/// Two-sided Student t tail probability P(|T| > |t|).
inline double t_two_sided(double t, double dof) {
  return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t), t * t / (dof + t * t));
}

/// Relative/absolute closeness used for 1e-12 statistics checks: values of
/// magnitude above 1 are compared relatively.
inline bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace ohm::oracle
