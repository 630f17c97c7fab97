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

// Audio containers, RIFF/WAVE I/O, band-limited resampling and framing.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohm/error.hpp"

namespace ohm::audio {

/// Mono signal with nominal amplitude range [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate_hz = 16000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

inline void validate(const AudioBuffer& buf) {
  if (buf.sample_rate_hz <= 0) {
    throw ArgumentError("sample rate must be positive, got " +
                        std::to_string(buf.sample_rate_hz));
  }
  for (std::size_t i = 0; i < buf.samples.size(); ++i) {
    if (!std::isfinite(buf.samples[i])) {
      throw ArgumentError("non-finite sample at index " + std::to_string(i));
    }
  }
}

namespace detail {

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }
}

constexpr std::uint16_t kWavePcm = 1;
constexpr std::uint16_t kWaveFloat = 3;
constexpr std::uint16_t kWaveExtensible = 0xfffe;

}  // namespace detail

/// Decodes an in-memory RIFF/WAVE image (PCM16 or float32, any channel
/// count). Channels are averaged down to mono.
inline AudioBuffer decode_wav(const std::vector<unsigned char>& bytes,
                              const std::string& name = "<memory>") {
  using detail::read_u16;
  using detail::read_u32;
  if (bytes.size() < 12) throw ParseError(name + ": truncated RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(name + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t chunk_size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body + chunk_size > bytes.size()) {
        throw ParseError(name + ": truncated fmt chunk");
      }
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      if (format == detail::kWaveExtensible) {
        if (chunk_size < 26) throw ParseError(name + ": truncated fmt chunk");
        format = read_u16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(name + ": data chunk before fmt chunk");
      if (channels == 0 || rate == 0) {
        throw FormatError(name + ": zero channels or sample rate");
      }
      const bool pcm16 = format == detail::kWavePcm && bits == 16;
      const bool f32 = format == detail::kWaveFloat && bits == 32;
      if (!pcm16 && !f32) {
        throw FormatError(name + ": unsupported codec (format " +
                          std::to_string(format) + ", " +
                          std::to_string(bits) + " bits)");
      }
      if (body + chunk_size > bytes.size()) {
        throw ParseError(name + ": data chunk shorter than declared (" +
                         std::to_string(bytes.size() - body) + " of " +
                         std::to_string(chunk_size) + " bytes)");
      }
      const std::size_t bytes_per_sample = bits / 8;
      const std::size_t frame_bytes = bytes_per_sample * channels;
      const std::size_t n_frames = chunk_size / frame_bytes;
      AudioBuffer out;
      out.sample_rate_hz = static_cast<int>(rate);
      out.samples.resize(n_frames);
      const unsigned char* data = bytes.data() + body;
      for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
          if (pcm16) {
            acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
          } else {
            const std::uint32_t raw = read_u32(p);
            float v;
            std::memcpy(&v, &raw, sizeof v);
            acc += v;
          }
        }
        out.samples[i] = static_cast<float>(acc / channels);
      }
      return out;
    }
    pos = body + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt) throw ParseError(name + ": missing fmt chunk");
  throw ParseError(name + ": missing data chunk");
}

inline AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

enum class WavEncoding { kPcm16, kFloat32 };

inline std::vector<unsigned char> encode_wav(
    const AudioBuffer& buf, WavEncoding enc = WavEncoding::kFloat32) {
  using detail::put_u16;
  using detail::put_u32;
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(buf.samples.size() * (bits / 8));
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, enc == WavEncoding::kPcm16 ? detail::kWavePcm
                                           : detail::kWaveFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : buf.samples) {
    if (enc == WavEncoding::kPcm16) {
      const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    } else {
      std::uint32_t raw;
      std::memcpy(&raw, &s, sizeof raw);
      put_u32(out, raw);
    }
  }
  return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      WavEncoding enc = WavEncoding::kFloat32) {
  const auto bytes = encode_wav(buf, enc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Resampling: Kaiser-windowed sinc, polyphase over the reduced ratio up/down.

struct ResamplerConfig {
  double kaiser_beta = 8.0;
  int taps_per_phase = 32;  // at the lower of the two rates
  double rolloff = 0.9;     // cutoff as a fraction of the lower Nyquist
};

namespace detail {

/// Modified Bessel function I0 by its power series; exact to rounding for
/// the arguments a Kaiser window needs.
inline double bessel_i0(double x) {
  const double y = x * x / 4.0;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 200 && term > 1e-17 * sum; ++k) {
    term *= y / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

inline double kaiser(double x, double beta, double i0_beta) {
  if (std::abs(x) >= 1.0) return 0.0;
  return bessel_i0(beta * std::sqrt(1.0 - x * x)) / i0_beta;
}

inline double kaiser(double x, double beta) { return kaiser(x, beta, bessel_i0(beta)); }

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

/// Band-limited conversion to target_hz. The output length is
/// round(n * target / source).
inline AudioBuffer resample(const AudioBuffer& buf, int target_hz,
                            const ResamplerConfig& cfg = {}) {
  if (target_hz <= 0) {
    throw ArgumentError("resample target rate must be positive, got " +
                        std::to_string(target_hz));
  }
  if (buf.sample_rate_hz <= 0) throw ArgumentError("source rate must be positive");
  if (target_hz == buf.sample_rate_hz) return buf;

  const std::int64_t g = std::gcd(target_hz, buf.sample_rate_hz);
  const std::int64_t up = target_hz / g;
  const std::int64_t down = buf.sample_rate_hz / g;
  const double scale = std::min(1.0, static_cast<double>(up) / down);
  const double cutoff = scale * cfg.rolloff;
  const int half = static_cast<int>(std::ceil(cfg.taps_per_phase / 2.0 / scale));
  const int taps = 2 * half;
  const double window_half = static_cast<double>(half);

  const double i0_beta = detail::bessel_i0(cfg.kaiser_beta);
  auto kernel = [&](double t) {
    return cutoff * detail::sinc(cutoff * t) *
           detail::kaiser(t / window_half, cfg.kaiser_beta, i0_beta);
  };

  // Offsets j = 0..taps-1 address input sample n0 - half + 1 + j, where
  // n0 = floor(m * down / up) and the fractional position is phase / up.
  constexpr std::int64_t kMaxTablePhases = 8192;
  const bool tabulate = up <= kMaxTablePhases;
  std::vector<double> table;
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      for (int j = 0; j < taps; ++j) {
        table[p * taps + j] = kernel(frac - (j - half + 1));
      }
    }
  }

  const auto n_in = static_cast<std::int64_t>(buf.samples.size());
  const std::int64_t n_out = (n_in * up + down / 2) / down;
  AudioBuffer out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(static_cast<std::size_t>(n_out));
  std::vector<double> on_the_fly(tabulate ? 0 : taps);
  for (std::int64_t m = 0; m < n_out; ++m) {
    const std::int64_t num = m * down;
    const std::int64_t n0 = num / up;
    const std::int64_t phase = num % up;
    const double* w;
    if (tabulate) {
      w = table.data() + phase * taps;
    } else {
      const double frac = static_cast<double>(phase) / up;
      for (int j = 0; j < taps; ++j) on_the_fly[j] = kernel(frac - (j - half + 1));
      w = on_the_fly.data();
    }
    double acc = 0.0;
    const std::int64_t first = n0 - half + 1;
    const int j_lo = static_cast<int>(std::max<std::int64_t>(0, -first));
    const int j_hi = static_cast<int>(std::min<std::int64_t>(taps, n_in - first));
    for (int j = j_lo; j < j_hi; ++j) acc += w[j] * buf.samples[first + j];
    out.samples[m] = static_cast<float>(acc);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Framing.

/// Hamming-windowed frames, one per row, left-aligned at sample 0.
struct FrameSet {
  Eigen::MatrixXd frames;  // n_frames x window_len
  double window_ms = 20.0;
  double hop_ms = 10.0;
  int sample_rate_hz = 16000;
  int window_len = 0;
  int hop_len = 0;

  Eigen::Index n_frames() const { return frames.rows(); }
};

inline int samples_for_ms(double ms, int sample_rate_hz) {
  return static_cast<int>(std::lround(ms / 1000.0 * sample_rate_hz));
}

/// floor((n - window) / hop) + 1, or 0 when the signal is shorter than one
/// window.
inline Eigen::Index frame_count(std::size_t n_samples, int window_len,
                                int hop_len) {
  if (n_samples < static_cast<std::size_t>(window_len)) return 0;
  return static_cast<Eigen::Index>((n_samples - window_len) / hop_len) + 1;
}

inline Eigen::VectorXd hamming(int length) {
  Eigen::VectorXd w(length);
  if (length == 1) {
    w(0) = 1.0;
    return w;
  }
  for (int k = 0; k < length; ++k) {
    w(k) = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * k / (length - 1));
  }
  return w;
}

inline FrameSet frame_signal(const AudioBuffer& buf, double window_ms = 20.0,
                             double hop_ms = 10.0) {
  if (buf.sample_rate_hz <= 0) throw ArgumentError("sample rate must be positive");
  FrameSet fs;
  fs.window_ms = window_ms;
  fs.hop_ms = hop_ms;
  fs.sample_rate_hz = buf.sample_rate_hz;
  fs.window_len = samples_for_ms(window_ms, buf.sample_rate_hz);
  fs.hop_len = samples_for_ms(hop_ms, buf.sample_rate_hz);
  if (fs.window_len < 1 || fs.hop_len < 1) {
    throw ArgumentError("window and hop must each span at least one sample");
  }
  const Eigen::Index n = frame_count(buf.size(), fs.window_len, fs.hop_len);
  if (n == 0) {
    throw EmptyInputError("signal of " + std::to_string(buf.size()) +
                          " samples is shorter than one " +
                          std::to_string(fs.window_len) + "-sample window");
  }
  const Eigen::VectorXd w = hamming(fs.window_len);
  fs.frames.resize(n, fs.window_len);
  for (Eigen::Index i = 0; i < n; ++i) {
    const float* src = buf.samples.data() + i * fs.hop_len;
    for (int k = 0; k < fs.window_len; ++k) fs.frames(i, k) = src[k] * w(k);
  }
  return fs;
}

}  // namespace ohm::audio
