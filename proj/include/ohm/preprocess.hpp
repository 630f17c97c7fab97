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

// Time-scale and pitch modification. Speaking rate is changed by
// waveform-similarity overlap-add (WSOLA); pitch by WSOLA followed by
// resampling, which shifts every frequency by the resampling ratio.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ohm/audio.hpp"
#include "ohm/error.hpp"

namespace ohm::preprocess {

struct WsolaConfig {
  double window_ms = 25.0;
  double overlap = 0.5;
  double tolerance_ms = 5.0;
};

/// Plays `in` `rate` times faster without changing its pitch; the output has
/// round(n / rate) samples.
inline audio::AudioBuffer time_stretch(const audio::AudioBuffer& in, double rate,
                                       const WsolaConfig& cfg = {}) {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw ArgumentError("stretch rate must be positive");
  if (rate == 1.0) return in;
  const int sr = in.sample_rate_hz;
  const int win = std::max(4, audio::samples_for_ms(cfg.window_ms, sr));
  const int hop = std::max(1, static_cast<int>(std::lround(win * (1.0 - cfg.overlap))));
  const int tol = audio::samples_for_ms(cfg.tolerance_ms, sr);
  const auto n_in = static_cast<long>(in.samples.size());
  const auto n_out = static_cast<long>(std::lround(n_in / rate));

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);

  auto sample = [&](long i) -> double {
    return (i >= 0 && i < n_in) ? static_cast<double>(in.samples[static_cast<std::size_t>(i)]) : 0.0;
  };

  std::vector<double> acc(static_cast<std::size_t>(n_out + win), 0.0);
  std::vector<double> wsum(acc.size(), 0.0);
  auto overlap_add = [&](long out_pos, long in_pos) {
    for (int i = 0; i < win; ++i) {
      acc[out_pos + i] += window[i] * sample(in_pos + i);
      wsum[out_pos + i] += window[i];
    }
  };

  overlap_add(0, 0);
  long prev = 0;
  std::vector<double> target(win);
  for (long k = 1; static_cast<long>(k) * hop < n_out; ++k) {
    const long out_pos = k * hop;
    const long ideal = std::lround(out_pos * rate);
    // The segment that would continue the previous one seamlessly.
    const long natural = prev + hop;
    double target_energy = 0.0;
    for (int i = 0; i < win; ++i) {
      target[i] = sample(natural + i);
      target_energy += target[i] * target[i];
    }
    long best = ideal;
    if (target_energy > 0.0) {
      double best_score = -std::numeric_limits<double>::infinity();
      for (int d = 0; d <= 2 * tol; ++d) {
        // Visit offsets 0, -1, +1, -2, +2, ... so ties keep the smallest shift.
        const long delta = (d % 2 == 0) ? d / 2 : -(d + 1) / 2;
        const long cand = ideal + delta;
        if (cand < 0) continue;
        double dot = 0.0, energy = 0.0;
        for (int i = 0; i < win; ++i) {
          const double v = sample(cand + i);
          dot += v * target[i];
          energy += v * v;
        }
        const double score = energy > 0.0 ? dot / std::sqrt(energy) : -std::numeric_limits<double>::infinity();
        if (score > best_score) {
          best_score = score;
          best = cand;
        }
      }
    }
    overlap_add(out_pos, best);
    prev = best;
  }

  audio::AudioBuffer out;
  out.sample_rate_hz = sr;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long i = 0; i < n_out; ++i) {
    out.samples[static_cast<std::size_t>(i)] =
        wsum[i] > 1e-6 ? static_cast<float>(acc[i] / wsum[i]) : 0.0f;
  }
  return out;
}

struct PreprocessConfig {
  bool enabled = true;
  double pitch_factor = 0.8;  // output F0 = factor * input F0
  double tempo_factor = 0.9;  // output speaking rate = factor * input rate

  void validate() const {
    auto check = [](double f, const char* what) {
      if (!(f >= 0.25 && f <= 4.0)) {
        throw ArgumentError(std::string(what) + " " + std::to_string(f) + " outside [0.25, 4]");
      }
    };
    check(pitch_factor, "pitch factor");
    check(tempo_factor, "tempo factor");
  }
};

/// Independent pitch and tempo scaling: stretch by tempo/pitch, then
/// resample by 1/pitch and keep the original nominal rate. Duration becomes
/// n / tempo and every frequency is multiplied by pitch.
inline audio::AudioBuffer modify_pitch_tempo(const audio::AudioBuffer& in, const PreprocessConfig& cfg) {
  if (!cfg.enabled) return in;
  cfg.validate();
  audio::AudioBuffer stretched = time_stretch(in, cfg.tempo_factor / cfg.pitch_factor);
  const int shifted_rate = static_cast<int>(std::lround(in.sample_rate_hz / cfg.pitch_factor));
  audio::AudioBuffer out = audio::resample(stretched, shifted_rate);
  out.sample_rate_hz = in.sample_rate_hz;
  return out;
}

}  // namespace ohm::preprocess
