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

// Objective Hypernasality Measure: per-frame log posterior ratios and their
// utterance and speaker averages.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ohm/audio.hpp"
#include "ohm/error.hpp"
#include "ohm/features.hpp"
#include "ohm/nn.hpp"
#include "ohm/preprocess.hpp"

namespace ohm::scoring {

inline constexpr double kDefaultEps = 1e-8;

/// max(ln(P(NC)/P(OC)), ln(P(NV)/P(OV))), each posterior clamped below at eps.
inline double frame_ohm(const nn::PosteriorFrame& p, double eps = kDefaultEps) {
  const double consonant = std::log(std::max(p.p_nc, eps) / std::max(p.p_oc, eps));
  const double vowel = std::log(std::max(p.p_nv, eps) / std::max(p.p_ov, eps));
  return std::max(consonant, vowel);
}

inline double aggregate_mean(std::span<const double> scores) {
  if (scores.empty()) throw ArgumentError("cannot average an empty score list");
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

struct OhmReport {
  std::string speaker_id;
  std::string utterance_id;
  std::vector<double> frame_scores;
  double sentence_score = 0.0;
  preprocess::PreprocessConfig preprocess;
};

/// 16 kHz -> optional pitch/tempo modification -> 20 ms frames -> MFCC39 ->
/// posteriors -> frame OHM -> mean.
inline OhmReport score_utterance(const audio::AudioBuffer& audio, const nn::MlpModel& model,
                                 const preprocess::PreprocessConfig& pre,
                                 const features::MfccConfig& cfg = {}, double eps = kDefaultEps) {
  if (model.feature_config_hash != cfg.hash()) {
    throw CompatibilityError("model was trained on feature config hash " +
                             std::to_string(model.feature_config_hash) + ", extraction uses " +
                             std::to_string(cfg.hash()));
  }
  if (model.output_activation != nn::OutputActivation::kSoftmax ||
      model.output_dim() != alignment::kNumClasses) {
    throw CompatibilityError("scoring requires a 4-class softmax nasality model");
  }
  const audio::AudioBuffer modified =
      preprocess::modify_pitch_tempo(audio::resample(audio, cfg.sample_rate_hz), pre);
  const features::FeatureSequence feats = features::extract_features(modified, cfg);
  OhmReport report;
  report.preprocess = pre;
  for (const auto& p : nn::posteriors(model, feats.vectors)) report.frame_scores.push_back(frame_ohm(p, eps));
  report.sentence_score = aggregate_mean(report.frame_scores);
  return report;
}

/// Speaker score = mean of that speaker's sentence scores. Values are
/// summed in sorted order so the result does not depend on input order.
inline std::map<std::string, double> speaker_scores(const std::vector<OhmReport>& reports) {
  std::map<std::string, std::vector<double>> by_speaker;
  for (const auto& r : reports) by_speaker[r.speaker_id].push_back(r.sentence_score);
  std::map<std::string, double> out;
  for (auto& [speaker, scores] : by_speaker) {
    std::sort(scores.begin(), scores.end());
    out[speaker] = aggregate_mean(scores);
  }
  return out;
}

}  // namespace ohm::scoring
