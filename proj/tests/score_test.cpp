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

#include <algorithm>
#include <cmath>
#include <random>

#include "ohm/score.hpp"
#include "oracles.hpp"

using namespace ohm;
using namespace ohm::scoring;
using nn::PosteriorFrame;

namespace {

audio::AudioBuffer noise_burst(double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 0.1f);
  audio::AudioBuffer b;
  b.samples.resize(static_cast<std::size_t>(seconds * 16000));
  for (auto& v : b.samples) v = d(rng);
  return b;
}

preprocess::PreprocessConfig no_preprocess() {
  preprocess::PreprocessConfig p;
  p.enabled = false;
  return p;
}

}  // namespace

TEST(FrameOhm, UniformIsZero) { EXPECT_DOUBLE_EQ(frame_ohm({0.25, 0.25, 0.25, 0.25}), 0.0); }

TEST(FrameOhm, ConsonantRatioDominates) {
  EXPECT_NEAR(frame_ohm({0.7, 0.1, 0.1, 0.1}), std::log(7.0), 1e-12);
  EXPECT_NEAR(frame_ohm({0.7, 0.1, 0.1, 0.1}), 1.945910, 1e-6);
}

TEST(FrameOhm, VowelRatioDominates) { EXPECT_NEAR(frame_ohm({0.2, 0.2, 0.4, 0.2}), 0.693147, 1e-6); }

TEST(FrameOhm, ClampingKeepsScoresFinite) {
  EXPECT_NEAR(frame_ohm({1.0, 0.0, 0.0, 0.0}), std::log(1e8), 1e-9);
  EXPECT_NEAR(frame_ohm({0.0, 0.5, 0.0, 0.5}), std::log(1e-8 / 0.5), 1e-9);
  EXPECT_DOUBLE_EQ(frame_ohm({0.0, 0.0, 0.0, 0.0}), 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(std::isfinite(frame_ohm({u(rng), u(rng) < 0.1 ? 0.0 : u(rng), u(rng), u(rng)})));
  }
}

TEST(FrameOhm, SwappingPairsNegatesTheMinimum) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 200; ++i) {
    const PosteriorFrame p{u(rng), u(rng), u(rng), u(rng)};
    const double t1 = std::log(p.p_nc / p.p_oc);
    const double t2 = std::log(p.p_nv / p.p_ov);
    EXPECT_NEAR(frame_ohm({p.p_oc, p.p_nc, p.p_ov, p.p_nv}), -std::min(t1, t2), 1e-12);
  }
}

TEST(FrameOhm, InvariantToCommonScale) {
  const PosteriorFrame p{0.3, 0.2, 0.1, 0.4};
  for (double k : {0.5, 2.0, 10.0}) {
    EXPECT_NEAR(frame_ohm({k * p.p_nc, k * p.p_oc, k * p.p_nv, k * p.p_ov}), frame_ohm(p), 1e-12);
  }
}

TEST(AggregateMean, Basics) {
  const std::vector<double> one{3.5};
  EXPECT_DOUBLE_EQ(aggregate_mean(one), 3.5);
  const std::vector<double> two{0.0, 2.0};
  EXPECT_DOUBLE_EQ(aggregate_mean(two), 1.0);
  EXPECT_THROW(aggregate_mean(std::vector<double>{}), ArgumentError);
}

TEST(SpeakerScores, MeanOfSentencesAndOrderInvariant) {
  std::vector<OhmReport> reports;
  const double values[] = {0.1, 1e10, -1e10, 0.3, 0.7};
  for (double v : values) {
    OhmReport r;
    r.speaker_id = "s1";
    r.sentence_score = v;
    reports.push_back(r);
  }
  OhmReport other;
  other.speaker_id = "s2";
  other.sentence_score = -1.0;
  reports.push_back(other);
  const auto a = speaker_scores(reports);
  std::reverse(reports.begin(), reports.end());
  std::swap(reports[1], reports[3]);
  const auto b = speaker_scores(reports);
  EXPECT_EQ(a.at("s1"), b.at("s1"));
  EXPECT_DOUBLE_EQ(a.at("s2"), -1.0);
  EXPECT_EQ(a.size(), 2u);
}

TEST(ScoreUtterance, ZeroModelScoresZero) {
  features::MfccConfig cfg;
  const auto model = nn::make_zero_model<float>(nn::nasality_spec(cfg.hash(), 16, 2));
  const auto r = score_utterance(noise_burst(0.5, 1), model, no_preprocess(), cfg);
  EXPECT_EQ(r.frame_scores.size(), 49u);
  for (double s : r.frame_scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(r.sentence_score, 0.0);
}

TEST(ScoreUtterance, DeterministicAndMeanOfFrames) {
  features::MfccConfig cfg;
  const auto model = nn::he_init<float>(nn::nasality_spec(cfg.hash(), 32, 2), 3);
  const auto audio = noise_burst(0.7, 2);
  const auto a = score_utterance(audio, model, {}, cfg);
  const auto b = score_utterance(audio, model, {}, cfg);
  EXPECT_EQ(a.frame_scores, b.frame_scores);
  EXPECT_EQ(a.sentence_score, b.sentence_score);
  double sum = 0.0;
  for (double s : a.frame_scores) sum += s;
  EXPECT_NEAR(a.sentence_score, sum / a.frame_scores.size(), 1e-12);
  EXPECT_DOUBLE_EQ(a.preprocess.pitch_factor, 0.8);
}

TEST(ScoreUtterance, PreprocessingLengthensSpeech) {
  features::MfccConfig cfg;
  const auto model = nn::make_zero_model<float>(nn::nasality_spec(cfg.hash(), 8, 1));
  const auto audio = noise_burst(0.9, 3);
  const auto plain = score_utterance(audio, model, no_preprocess(), cfg);
  const auto shifted = score_utterance(audio, model, {}, cfg);  // tempo 0.9
  EXPECT_NEAR(static_cast<double>(shifted.frame_scores.size()), plain.frame_scores.size() / 0.9, 2.0);
}

TEST(ScoreUtterance, CompatibilityChecks) {
  features::MfccConfig cfg;
  const auto audio = noise_burst(0.3, 4);
  auto model = nn::make_zero_model<float>(nn::nasality_spec(cfg.hash() + 1, 8, 1));
  EXPECT_THROW(score_utterance(audio, model, no_preprocess(), cfg), CompatibilityError);
  const auto regressor = nn::make_zero_model<float>(nn::regressor_spec(cfg.hash(), 8, 1));
  EXPECT_THROW(score_utterance(audio, regressor, no_preprocess(), cfg), CompatibilityError);
}

TEST(ScoreUtterance, TooShortIsEmptyInput) {
  features::MfccConfig cfg;
  const auto model = nn::make_zero_model<float>(nn::nasality_spec(cfg.hash(), 8, 1));
  EXPECT_THROW(score_utterance(noise_burst(0.01, 5), model, no_preprocess(), cfg), EmptyInputError);
}
