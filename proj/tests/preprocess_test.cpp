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

#include <gtest/gtest.h>

#include <cmath>

#include "ohm/preprocess.hpp"
#include "oracles.hpp"

using namespace ohm;
using namespace ohm::preprocess;

namespace {

constexpr int kSr = 16000;
constexpr double kFrame = 0.020 * kSr;  // one analysis frame in samples

PreprocessConfig factors(double pitch, double tempo) {
  PreprocessConfig c;
  c.pitch_factor = pitch;
  c.tempo_factor = tempo;
  return c;
}

audio::AudioBuffer tone(double hz, double seconds = 1.0) { return {oracle::sine(hz, seconds, kSr), kSr}; }

}  // namespace

TEST(ModifyPitchTempo, UnitFactorsAreIdentity) {
  const auto in = tone(440.0);
  const auto out = modify_pitch_tempo(in, factors(1.0, 1.0));
  ASSERT_EQ(out.samples.size(), in.samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < in.samples.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(out.samples[i]) - in.samples[i]));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(ModifyPitchTempo, DisabledIsIdentity) {
  const auto in = tone(300.0);
  PreprocessConfig c;
  c.enabled = false;
  EXPECT_EQ(modify_pitch_tempo(in, c).samples, in.samples);
}

TEST(ModifyPitchTempo, HalfPitch) {
  const auto in = tone(440.0);
  const auto out = modify_pitch_tempo(in, factors(0.5, 1.0));
  EXPECT_EQ(out.sample_rate_hz, kSr);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), in.samples.size(), kFrame);
  EXPECT_NEAR(oracle::dominant_frequency(out.samples, kSr, 100.0, 600.0), 220.0, 220.0 * 0.02);
}

TEST(ModifyPitchTempo, HalfTempo) {
  const auto in = tone(440.0);
  const auto out = modify_pitch_tempo(in, factors(1.0, 0.5));
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 2.0 * in.samples.size(), kFrame);
  EXPECT_NEAR(oracle::dominant_frequency(out.samples, kSr, 300.0, 600.0), 440.0, 440.0 * 0.02);
}

TEST(ModifyPitchTempo, DefaultFactorsOnToneSweep) {
  for (double f = 200.0; f <= 600.0; f += 50.0) {
    const auto in = tone(f, 0.6);
    const auto out = modify_pitch_tempo(in, PreprocessConfig{});
    const double expected = 0.8 * f;
    EXPECT_NEAR(oracle::dominant_frequency(out.samples, kSr, expected * 0.8, expected * 1.2, 0.5), expected,
                expected * 0.02)
        << "input " << f << " Hz";
    EXPECT_NEAR(static_cast<double>(out.samples.size()), in.samples.size() / 0.9, kFrame);
  }
}

TEST(ModifyPitchTempo, DurationLawAcrossFactors) {
  const auto in = tone(250.0, 0.5);
  for (double pitch : {0.25, 0.7, 1.3, 4.0}) {
    for (double tempo : {0.25, 0.8, 1.5, 4.0}) {
      const auto out = modify_pitch_tempo(in, factors(pitch, tempo));
      EXPECT_NEAR(static_cast<double>(out.samples.size()), in.samples.size() / tempo, kFrame)
          << pitch << " " << tempo;
    }
  }
}

TEST(ModifyPitchTempo, OutOfRangeFactors) {
  const auto in = tone(250.0, 0.1);
  EXPECT_THROW(modify_pitch_tempo(in, factors(0.2, 1.0)), ArgumentError);
  EXPECT_THROW(modify_pitch_tempo(in, factors(1.0, 4.5)), ArgumentError);
  EXPECT_THROW(modify_pitch_tempo(in, factors(std::nan(""), 1.0)), ArgumentError);
}

TEST(TimeStretch, KeepsPitchAndScalesLength) {
  const auto in = tone(330.0);
  for (double rate : {0.6, 1.25, 1.8}) {
    const auto out = time_stretch(in, rate);
    EXPECT_EQ(out.samples.size(), static_cast<std::size_t>(std::lround(in.samples.size() / rate)));
    EXPECT_NEAR(oracle::dominant_frequency(out.samples, kSr, 250.0, 450.0), 330.0, 330.0 * 0.02);
  }
}

TEST(TimeStretch, SilenceStaysSilent) {
  audio::AudioBuffer in;
  in.samples.assign(8000, 0.0f);
  for (float v : time_stretch(in, 0.7).samples) EXPECT_EQ(v, 0.0f);
}

TEST(TimeStretch, SteadyToneKeepsAmplitude) {
  const auto out = time_stretch(tone(200.0), 0.75);
  double energy = 0.0;
  const std::size_t lo = 800, hi = out.samples.size() - 800;
  for (std::size_t i = lo; i < hi; ++i) energy += out.samples[i] * out.samples[i];
  EXPECT_NEAR(std::sqrt(energy / (hi - lo)), 0.5 / std::sqrt(2.0), 0.03);
}
