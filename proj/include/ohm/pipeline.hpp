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

// Corpus-level steps shared by the command-line tool and the acceptance
// runner: labelled-frame extraction, batch scoring, frame classification
// metrics and the evaluation report tables.

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohm/alignment.hpp"
#include "ohm/audio.hpp"
#include "ohm/features.hpp"
#include "ohm/manifest.hpp"
#include "ohm/nn.hpp"
#include "ohm/parallel.hpp"
#include "ohm/preprocess.hpp"
#include "ohm/score.hpp"
#include "ohm/stats.hpp"

namespace ohm::pipeline {

inline std::vector<alignment::AlignmentSegment> load_alignment(const std::filesystem::path& path,
                                                               const alignment::PhoneInventory& inv = {}) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".textgrid") return alignment::parse_textgrid(path, "phones", inv);
  return alignment::parse_alignment(path, inv);
}

struct LabelledUtterance {
  Eigen::MatrixXd features;  // n_frames x 39
  std::vector<alignment::PhoneClass> labels;
};

struct LabelOptions {
  alignment::ClassifyOptions classify;
  alignment::PhoneInventory inventory;
  features::MfccConfig mfcc;
};

/// Features and frame classes for every row (in manifest order). The NV
/// sample is drawn over the whole set of rows at once.
inline std::vector<LabelledUtterance> label_corpus(const manifest::Manifest& m, const LabelOptions& opt = {},
                                                   int workers = worker_count()) {
  manifest::check_files_exist(m, true);
  std::vector<std::vector<alignment::AlignmentSegment>> segs(m.rows.size());
  parallel_for(m.rows.size(), [&](std::size_t i) { segs[i] = load_alignment(*m.rows[i].alignment_path, opt.inventory); },
               workers);
  std::size_t unknown = 0;
  for (const auto& u : segs) {
    for (const auto& s : u) unknown += s.unknown_phone;
  }
  if (unknown > 0) warn(std::to_string(unknown) + " segments carry phones outside the inventory; they are excluded");
  const auto classified = alignment::classify_corpus(segs, opt.classify, opt.inventory);

  std::vector<LabelledUtterance> out(m.rows.size());
  parallel_for(
      m.rows.size(),
      [&](std::size_t i) {
        const auto feats = features::extract_features(audio::load_wav(m.rows[i].audio_path), opt.mfcc);
        out[i].features = feats.vectors;
        out[i].labels = alignment::label_frames(classified[i], feats.frame_times_s);
      },
      workers);
  return out;
}

inline nn::Dataset to_dataset(const std::vector<LabelledUtterance>& utts) {
  nn::NasalityDatasetBuilder b;
  for (const auto& u : utts) b.add(u.features, u.labels);
  return b.finish();
}

// ---------------------------------------------------------------------------
// Frame classification metrics.

struct Confusion {
  std::array<std::array<std::size_t, 4>, 4> counts{};  // [true][predicted]

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& row : counts) {
      for (std::size_t c : row) n += c;
    }
    return n;
  }

  double accuracy() const {
    std::size_t hit = 0;
    for (int k = 0; k < 4; ++k) hit += counts[k][k];
    return total() ? static_cast<double>(hit) / static_cast<double>(total()) : 0.0;
  }

  /// F1 of one class; 0 when the class is never predicted nor present.
  double f1(int k) const {
    std::size_t predicted = 0, actual = 0;
    for (int j = 0; j < 4; ++j) {
      predicted += counts[j][k];
      actual += counts[k][j];
    }
    if (predicted + actual == 0) return 0.0;
    return 2.0 * static_cast<double>(counts[k][k]) / static_cast<double>(predicted + actual);
  }

  double macro_f1() const {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += f1(k);
    return s / 4.0;
  }
};

/// Argmax classification of every non-excluded frame.
inline Confusion classify_frames(const nn::MlpModel& model, const std::vector<LabelledUtterance>& utts) {
  Confusion c;
  for (const auto& u : utts) {
    if (u.features.rows() == 0) continue;
    const Eigen::MatrixXf p = nn::predict(model, Eigen::MatrixXf(u.features.transpose().cast<float>()));
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const auto truth = u.labels[static_cast<std::size_t>(j)];
      if (truth == alignment::PhoneClass::kExcluded) continue;
      Eigen::Index arg = 0;
      p.col(j).maxCoeff(&arg);
      ++c.counts[static_cast<int>(truth)][arg];
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Scoring.

/// One report per manifest row, in manifest order.
inline std::vector<scoring::OhmReport> score_manifest(const manifest::Manifest& m, const nn::MlpModel& model,
                                                      const preprocess::PreprocessConfig& pre,
                                                      const features::MfccConfig& cfg = {},
                                                      int workers = worker_count()) {
  manifest::check_files_exist(m, false);
  std::vector<scoring::OhmReport> out(m.rows.size());
  parallel_for(
      m.rows.size(),
      [&](std::size_t i) {
        try {
          out[i] = scoring::score_utterance(audio::load_wav(m.rows[i].audio_path), model, pre, cfg);
        } catch (const EmptyInputError& e) {
          throw EmptyInputError(m.rows[i].utterance_id + ": " + e.what());
        }
        out[i].speaker_id = m.rows[i].speaker_id;
        out[i].utterance_id = m.rows[i].utterance_id;
      },
      workers);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation tables over scored sentences and speaker ratings.

struct ScoredSentence {
  std::string speaker_id;
  std::string utterance_id;
  std::string sentence_id;
  std::string category;
  bool is_oral = true;
  std::size_t n_frames = 0;
  double score = 0.0;
};

/// Speaker score over the sentences accepted by `keep`; speakers with no
/// such sentence are left out.
template <typename Pred>
std::map<std::string, double> speaker_means(const std::vector<ScoredSentence>& s, Pred keep) {
  std::map<std::string, std::vector<double>> by;
  for (const auto& x : s) {
    if (keep(x)) by[x.speaker_id].push_back(x.score);
  }
  std::map<std::string, double> out;
  for (auto& [spk, v] : by) {
    std::sort(v.begin(), v.end());
    out[spk] = scoring::aggregate_mean(v);
  }
  return out;
}

/// Speaker scores over the first and second halves of each speaker's oral
/// sentences, ordered by sentence id.
inline std::pair<std::map<std::string, double>, std::map<std::string, double>> split_half_sets(
    const std::vector<ScoredSentence>& s) {
  std::map<std::string, std::vector<std::pair<std::string, double>>> by;
  for (const auto& x : s) {
    if (x.is_oral) by[x.speaker_id].emplace_back(x.sentence_id, x.score);
  }
  std::map<std::string, double> a, b;
  for (auto& [spk, v] : by) {
    if (v.size() < 2) continue;
    std::sort(v.begin(), v.end());
    const std::size_t half = v.size() / 2;
    std::vector<double> first, second;
    for (std::size_t i = 0; i < v.size(); ++i) (i < half ? first : second).push_back(v[i].second);
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    a[spk] = scoring::aggregate_mean(first);
    b[spk] = scoring::aggregate_mean(second);
  }
  return {a, b};
}

}  // namespace ohm::pipeline
