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

// Training-data augmentation for the supervised regressor: additive noise at
// a target SNR, speaking-rate change, and vocal tract length perturbation
// (VTLP) of the mel filterbank.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ohm/audio.hpp"
#include "ohm/csv.hpp"
#include "ohm/error.hpp"
#include "ohm/features.hpp"
#include "ohm/manifest.hpp"
#include "ohm/preprocess.hpp"

namespace ohm::augment {

inline double mean_power(const std::vector<float>& x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

/// SNR in dB of a signal against a noise track of equal length.
inline double snr_db(const std::vector<float>& signal, const std::vector<float>& noise) {
  return 10.0 * std::log10(mean_power(signal) / mean_power(noise));
}

struct NoisyMix {
  audio::AudioBuffer mixed;
  audio::AudioBuffer noise;  // the scaled noise actually added
};

/// Mixes `noise` (white Gaussian when null) into `clean` at `snr_db`.
/// Recorded noise is resampled to the clean rate and read from a seeded
/// random offset, wrapping around when shorter than the clean signal.
inline NoisyMix add_noise_at_snr(const audio::AudioBuffer& clean, const audio::AudioBuffer* noise,
                                 double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw ArgumentError("SNR must be finite");
  const double p_clean = mean_power(clean.samples);
  if (!(p_clean > 0.0)) throw ArgumentError("clean signal has zero power");

  const std::size_t n = clean.samples.size();
  std::vector<float> segment(n);
  std::mt19937_64 rng(seed);
  if (noise == nullptr) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& v : segment) v = static_cast<float>(gauss(rng));
  } else {
    const audio::AudioBuffer src = audio::resample(*noise, clean.sample_rate_hz);
    if (src.samples.empty()) throw ArgumentError("noise recording is empty");
    std::uniform_int_distribution<std::size_t> pick(0, src.samples.size() - 1);
    std::size_t pos = pick(rng);
    for (auto& v : segment) {
      v = src.samples[pos];
      if (++pos == src.samples.size()) pos = 0;
    }
  }
  const double p_noise = mean_power(segment);
  if (!(p_noise > 0.0)) throw ArgumentError("noise has zero power");
  const double gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));

  NoisyMix mix;
  mix.noise.sample_rate_hz = mix.mixed.sample_rate_hz = clean.sample_rate_hz;
  mix.noise.samples.resize(n);
  mix.mixed.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mix.noise.samples[i] = static_cast<float>(gain * segment[i]);
    mix.mixed.samples[i] = clean.samples[i] + mix.noise.samples[i];
  }
  return mix;
}

/// Pitch-preserving speaking-rate change; duration scales by 1 / factor.
inline audio::AudioBuffer change_rate(const audio::AudioBuffer& in, double factor) {
  if (!(factor >= 0.5 && factor <= 2.0)) {
    throw ArgumentError("rate factor " + std::to_string(factor) + " outside [0.5, 2]");
  }
  return preprocess::time_stretch(in, factor);
}

/// Piecewise-linear VTLP map: f -> alpha f up to the breakpoint
/// f_hi * min(alpha, 1) / alpha, then linear so that Nyquist stays fixed.
inline double vtlp_warp_frequency(double f, double alpha, double nyquist_hz, double f_hi_hz = 4800.0) {
  const double breakpoint = f_hi_hz * std::min(alpha, 1.0) / alpha;
  if (f <= breakpoint) return alpha * f;
  const double at_break = alpha * breakpoint;
  return at_break + (f - breakpoint) * (nyquist_hz - at_break) / (nyquist_hz - breakpoint);
}

inline features::MelFilterbank vtlp_warp(const features::MelFilterbank& fb, double alpha,
                                         int sample_rate_hz, double f_hi_hz = 4800.0) {
  if (!(alpha >= 0.8 && alpha <= 1.25)) {
    throw ArgumentError("VTLP alpha " + std::to_string(alpha) + " outside [0.8, 1.25]");
  }
  const double nyquist = sample_rate_hz / 2.0;
  if (!(f_hi_hz > 0.0 && f_hi_hz < nyquist)) throw ArgumentError("VTLP boundary must lie below Nyquist");
  features::MelFilterbank out;
  for (const auto& t : fb.filters) {
    out.filters.push_back({vtlp_warp_frequency(t.lo_hz, alpha, nyquist, f_hi_hz),
                           vtlp_warp_frequency(t.center_hz, alpha, nyquist, f_hi_hz),
                           vtlp_warp_frequency(t.hi_hz, alpha, nyquist, f_hi_hz)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variant planning.

struct NoiseSource {
  std::string name;
  std::shared_ptr<const audio::AudioBuffer> recording;  // null: white noise
};

struct AugmentSpec {
  std::vector<NoiseSource> noise_sources{{"white", nullptr}};
  std::vector<double> snr_db_values{5, 10, 15, 20};
  std::vector<double> rate_factors{0.8, 0.9, 1.1, 1.2};
  std::vector<double> vtlp_alphas{0.9, 0.95, 1.05, 1.1};
  bool include_original = true;
  bool noise = true;
  bool rate = true;
  bool vtlp = true;
  std::uint64_t seed = 42;

  void validate() const {
    for (double s : snr_db_values) {
      if (!std::isfinite(s)) throw ArgumentError("SNR values must be finite");
    }
    for (double f : rate_factors) {
      if (!(f > 0.0)) throw ArgumentError("rate factors must be positive");
    }
    for (double a : vtlp_alphas) {
      if (!(a > 0.0)) throw ArgumentError("VTLP alphas must be positive");
    }
  }

  /// Rows produced per original utterance.
  std::size_t variants_per_original() const {
    return (include_original ? 1 : 0) + (noise ? noise_sources.size() * snr_db_values.size() : 0) +
           (rate ? rate_factors.size() : 0) + (vtlp ? vtlp_alphas.size() : 0);
  }
};

/// Adds recorded noise types; names whose file is missing are skipped with a
/// warning so augmentation falls back to the remaining (white) sources.
inline void add_noise_files(AugmentSpec& spec,
                            const std::vector<std::pair<std::string, std::filesystem::path>>& files) {
  for (const auto& [name, path] : files) {
    if (!std::filesystem::exists(path)) {
      warn("noise file for '" + name + "' not found at " + path.string() + "; skipping this noise type");
      continue;
    }
    spec.noise_sources.push_back({name, std::make_shared<audio::AudioBuffer>(audio::load_wav(path))});
  }
}

enum class VariantKind { kOriginal, kNoise, kRate, kVtlp };

struct Variant {
  VariantKind kind = VariantKind::kOriginal;
  std::size_t noise_index = 0;
  double value = 0.0;  // SNR, rate factor or alpha
  std::uint64_t seed = 0;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t string_seed(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// The variants of one original utterance, in a fixed order. Seeds depend
/// only on the augmentation seed, the utterance id and the variant position.
inline std::vector<Variant> plan_variants(const AugmentSpec& spec, const std::string& utterance_id) {
  spec.validate();
  std::vector<Variant> out;
  const std::uint64_t base = mix_seed(spec.seed, string_seed(utterance_id));
  auto push = [&](VariantKind k, std::size_t noise_index, double v) {
    out.push_back({k, noise_index, v, mix_seed(base, out.size())});
  };
  if (spec.include_original) push(VariantKind::kOriginal, 0, 0.0);
  if (spec.noise) {
    for (std::size_t n = 0; n < spec.noise_sources.size(); ++n) {
      for (double s : spec.snr_db_values) push(VariantKind::kNoise, n, s);
    }
  }
  if (spec.rate) {
    for (double f : spec.rate_factors) push(VariantKind::kRate, 0, f);
  }
  if (spec.vtlp) {
    for (double a : spec.vtlp_alphas) push(VariantKind::kVtlp, 0, a);
  }
  return out;
}

inline std::string variant_type(VariantKind k) {
  switch (k) {
    case VariantKind::kOriginal: return "original";
    case VariantKind::kNoise: return "noise";
    case VariantKind::kRate: return "rate";
    case VariantKind::kVtlp: return "vtlp";
  }
  return "?";
}

inline std::string variant_param(const AugmentSpec& spec, const Variant& v) {
  switch (v.kind) {
    case VariantKind::kOriginal: return "";
    case VariantKind::kNoise: return spec.noise_sources[v.noise_index].name + "@" + csv::format_double(v.value);
    default: return csv::format_double(v.value);
  }
}

/// Manifest rows for every planned variant of every original row. Noise and
/// rate variants point at `<out_dir>/<utterance>__<type>_<param>.wav`; VTLP
/// variants reuse the source audio (the warp happens at feature time).
inline manifest::Manifest expand_manifest(const manifest::Manifest& in, const AugmentSpec& spec,
                                          const std::filesystem::path& out_dir) {
  manifest::Manifest out;
  for (const auto& row : in.rows) {
    if (!row.is_original()) continue;
    for (const auto& v : plan_variants(spec, row.utterance_id)) {
      manifest::ManifestRow r = row;
      r.aug_type = variant_type(v.kind);
      r.aug_param = variant_param(spec, v);
      r.aug_seed = v.seed;
      r.source_utterance = row.utterance_id;
      if (v.kind != VariantKind::kOriginal) {
        std::string tag = r.aug_type + "_" + r.aug_param;
        for (auto& c : tag) {
          if (c == '@') c = '_';
        }
        r.utterance_id = row.utterance_id + "__" + tag;
        if (v.kind != VariantKind::kVtlp) r.audio_path = out_dir / (r.utterance_id + ".wav");
      }
      out.rows.push_back(std::move(r));
    }
  }
  manifest::check_unique(out);
  return out;
}

/// Renders the audio for one planned variant (VTLP and originals return the
/// source unchanged).
inline audio::AudioBuffer render_variant(const audio::AudioBuffer& clean, const AugmentSpec& spec,
                                         const Variant& v) {
  switch (v.kind) {
    case VariantKind::kNoise:
      return add_noise_at_snr(clean, spec.noise_sources[v.noise_index].recording.get(), v.value, v.seed).mixed;
    case VariantKind::kRate:
      return change_rate(clean, v.value);
    default:
      return clean;
  }
}

}  // namespace ohm::augment
