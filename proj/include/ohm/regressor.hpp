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

// Supervised baseline: a frame-level MSE regressor onto speaker ratings,
// evaluated with leave-one-speaker-out (LOSO) cross-validation.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "ohm/augment.hpp"
#include "ohm/csv.hpp"
#include "ohm/error.hpp"
#include "ohm/features.hpp"
#include "ohm/manifest.hpp"
#include "ohm/nn.hpp"
#include "ohm/parallel.hpp"
#include "ohm/stats.hpp"

namespace ohm::regressor {

struct LosoFold {
  std::string test_speaker;
  std::vector<std::size_t> train_rows;  // manifest row indices
  std::vector<std::size_t> test_rows;
};

struct FoldOptions {
  /// Restrict training and testing to rows with is_oral set.
  bool oral_only = false;
};

/// One fold per speaker. Training rows: every row (original or augmented) of
/// the other speakers. Test rows: the speaker's original rows only. Rows are
/// kept in a canonical order so results do not depend on manifest order.
inline std::vector<LosoFold> build_loso_folds(const manifest::Manifest& m,
                                              const std::map<std::string, double>& ratings,
                                              const FoldOptions& opt = {}) {
  const auto speakers = m.speakers();
  if (speakers.size() < 2) throw ManifestError("LOSO needs at least 2 speakers, got " + std::to_string(speakers.size()));
  for (const auto& s : speakers) {
    if (!ratings.count(s)) throw ManifestError("speaker " + s + " has no rating");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (!opt.oral_only || m.rows[i].is_oral) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = m.rows[a];
    const auto& y = m.rows[b];
    return std::tie(x.speaker_id, x.source_utterance, x.utterance_id) <
           std::tie(y.speaker_id, y.source_utterance, y.utterance_id);
  });
  std::vector<LosoFold> folds;
  for (const auto& s : speakers) {
    LosoFold f;
    f.test_speaker = s;
    for (std::size_t i : order) {
      const auto& r = m.rows[i];
      if (r.speaker_id != s) f.train_rows.push_back(i);
      else if (r.is_original()) f.test_rows.push_back(i);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

/// Counts training rows that trace back to the fold's test speaker, either
/// directly or through their source utterance. A clean fold returns 0.
inline std::size_t audit_fold(const manifest::Manifest& m, const LosoFold& fold) {
  std::set<std::string> test_utterances;
  for (const auto& r : m.rows) {
    if (r.speaker_id == fold.test_speaker) test_utterances.insert(r.source_utterance);
  }
  std::size_t violations = 0;
  for (std::size_t i : fold.train_rows) {
    const auto& r = m.rows[i];
    if (r.speaker_id == fold.test_speaker || test_utterances.count(r.source_utterance) ||
        test_utterances.count(r.utterance_id)) {
      ++violations;
    }
  }
  for (std::size_t i : fold.test_rows) {
    if (m.rows[i].speaker_id != fold.test_speaker || !m.rows[i].is_original()) ++violations;
  }
  return violations;
}

/// Maps a manifest row to its frame features (n_frames x 39).
using FeatureProvider = std::function<Eigen::MatrixXd(const manifest::ManifestRow&)>;

/// Loads the row's audio and extracts features; VTLP rows use the warped
/// filterbank named by their aug_param.
inline FeatureProvider audio_feature_provider(const features::MfccConfig& cfg = {}) {
  return [cfg](const manifest::ManifestRow& row) {
    const auto audio = audio::load_wav(row.audio_path);
    if (row.aug_type == "vtlp") {
      const double alpha = csv::parse_double(row.aug_param, "aug_param of " + row.utterance_id);
      const auto fb = augment::vtlp_warp(features::make_mel_filterbank(cfg), alpha, cfg.sample_rate_hz);
      return features::extract_features(audio, cfg, &fb).vectors;
    }
    return features::extract_features(audio, cfg).vectors;
  };
}

struct FoldResult {
  std::string speaker_id;
  double true_rating = 0.0;
  double predicted = 0.0;
  std::string status = "ok";  // "ok" or "failed: <reason>"

  bool ok() const { return status == "ok"; }
};

/// Trains on every frame of the fold's training rows, each labelled with its
/// speaker's rating, and predicts the mean network output over all frames of
/// the test speaker's utterances.
inline FoldResult train_and_predict_fold(const manifest::Manifest& m, const LosoFold& fold,
                                         const std::map<std::string, double>& ratings,
                                         const FeatureProvider& provider, const nn::TrainConfig& cfg,
                                         const nn::ModelSpec& spec) {
  FoldResult res;
  res.speaker_id = fold.test_speaker;
  res.true_rating = ratings.at(fold.test_speaker);
  if (cfg.loss != nn::Loss::kMse || spec.output_activation != nn::OutputActivation::kLinear) {
    throw ArgumentError("the regressor trains a linear head with MSE loss");
  }
  try {
    std::vector<float> values;
    std::vector<float> targets;
    Eigen::Index dim = spec.layer_sizes.front();
    for (std::size_t i : fold.train_rows) {
      const Eigen::MatrixXd f = provider(m.rows[i]);
      if (f.cols() != dim) throw ShapeError("feature width mismatch for " + m.rows[i].utterance_id);
      const auto rating = static_cast<float>(ratings.at(m.rows[i].speaker_id));
      for (Eigen::Index t = 0; t < f.rows(); ++t) {
        for (Eigen::Index k = 0; k < dim; ++k) values.push_back(static_cast<float>(f(t, k)));
        targets.push_back(rating);
      }
    }
    nn::Dataset data;
    data.features = Eigen::Map<const Eigen::MatrixXf>(values.data(), dim, static_cast<Eigen::Index>(targets.size()));
    data.targets.values = std::move(targets);
    const nn::TrainResult trained = nn::train(data, spec, cfg);

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i : fold.test_rows) {
      const Eigen::MatrixXd f = provider(m.rows[i]);
      const Eigen::MatrixXf out = nn::predict(trained.model, Eigen::MatrixXf(f.transpose().cast<float>()));
      for (Eigen::Index j = 0; j < out.cols(); ++j) sum += out(0, j);
      count += static_cast<std::size_t>(out.cols());
    }
    if (count == 0) throw EmptyInputError("test speaker has no frames");
    res.predicted = sum / static_cast<double>(count);
  } catch (const Error& e) {
    res.status = std::string("failed: ") + e.what();
  }
  return res;
}

struct LosoResult {
  std::vector<FoldResult> folds;
  std::optional<stats::Correlation> correlation;  // over completed folds
};

/// Runs every fold (in parallel when workers > 1). Failed folds are reported
/// and left out of the correlation.
inline LosoResult run_loso(const manifest::Manifest& m, const std::map<std::string, double>& ratings,
                           const FeatureProvider& provider, const nn::TrainConfig& cfg, const nn::ModelSpec& spec,
                           const FoldOptions& opt = {}, int workers = worker_count()) {
  const auto folds = build_loso_folds(m, ratings, opt);
  LosoResult res;
  res.folds.resize(folds.size());
  parallel_for(
      folds.size(), [&](std::size_t i) { res.folds[i] = train_and_predict_fold(m, folds[i], ratings, provider, cfg, spec); },
      workers);
  std::vector<double> truth, pred;
  for (const auto& f : res.folds) {
    if (f.ok()) {
      truth.push_back(f.true_rating);
      pred.push_back(f.predicted);
    } else {
      warn("fold " + f.speaker_id + " " + f.status);
    }
  }
  if (truth.size() < res.folds.size()) {
    warn("correlation uses " + std::to_string(truth.size()) + " of " + std::to_string(res.folds.size()) + " folds");
  }
  try {
    if (truth.size() >= 3) res.correlation = stats::pearson_r(truth, pred);
  } catch (const Error& e) {
    warn(std::string("LOSO correlation unavailable: ") + e.what());
  }
  return res;
}

}  // namespace ohm::regressor
