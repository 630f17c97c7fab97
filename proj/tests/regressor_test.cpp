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

#include <random>

#include "ohm/regressor.hpp"

using namespace ohm;
using namespace ohm::regressor;

namespace {

manifest::Manifest synthetic_manifest(int speakers, int utterances, bool with_augmented) {
  manifest::Manifest m;
  for (int s = 0; s < speakers; ++s) {
    for (int u = 0; u < utterances; ++u) {
      manifest::ManifestRow r;
      r.speaker_id = "spk" + std::to_string(s);
      r.utterance_id = r.speaker_id + "_u" + std::to_string(u);
      r.source_utterance = r.utterance_id;
      r.audio_path = r.utterance_id + ".wav";
      r.is_oral = u % 3 != 2;
      m.rows.push_back(r);
    }
  }
  if (with_augmented) {
    augment::AugmentSpec spec;
    m = augment::expand_manifest(m, spec, "aug");
  }
  return m;
}

std::map<std::string, double> ratings_for(const manifest::Manifest& m, auto&& fn) {
  std::map<std::string, double> out;
  for (const auto& s : m.speakers()) out[s] = fn(s);
  return out;
}

int speaker_index(const std::string& id) { return std::stoi(id.substr(3)); }

// Frames drawn from a Gaussian whose mean depends on the speaker's group.
FeatureProvider gaussian_provider(std::function<double(const std::string&)> group_mean) {
  return [group_mean](const manifest::ManifestRow& row) {
    std::mt19937_64 rng(augment::string_seed(row.utterance_id));
    std::normal_distribution<double> d(group_mean(row.speaker_id), 1.0);
    Eigen::MatrixXd f(40, 39);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = d(rng);
    }
    return f;
  };
}

nn::TrainConfig mse_config(int epochs = 25) {
  nn::TrainConfig cfg;
  cfg.loss = nn::Loss::kMse;
  cfg.epochs = epochs;
  cfg.batch_size = 64;
  return cfg;
}

}  // namespace

TEST(LosoFolds, OneFoldPerSpeaker) {
  const auto m = synthetic_manifest(3, 4, false);
  const auto folds = build_loso_folds(m, ratings_for(m, [](auto&) { return 1.0; }));
  ASSERT_EQ(folds.size(), 3u);
  for (const auto& f : folds) {
    EXPECT_EQ(f.train_rows.size(), 8u);
    EXPECT_EQ(f.test_rows.size(), 4u);
    for (std::size_t i : f.train_rows) EXPECT_NE(m.rows[i].speaker_id, f.test_speaker);
    EXPECT_EQ(audit_fold(m, f), 0u);
  }
}

TEST(LosoFolds, AugmentedRowsNeverLeak) {
  const auto m = synthetic_manifest(4, 3, true);
  const auto folds = build_loso_folds(m, ratings_for(m, [](auto&) { return 1.0; }));
  const std::size_t per = augment::AugmentSpec{}.variants_per_original();
  for (const auto& f : folds) {
    EXPECT_EQ(audit_fold(m, f), 0u);
    EXPECT_EQ(f.test_rows.size(), 3u);  // originals only
    EXPECT_EQ(f.train_rows.size(), 3u * 3u * per);
    for (std::size_t i : f.test_rows) EXPECT_TRUE(m.rows[i].is_original());
  }
}

TEST(LosoFolds, AuditDetectsInjectedLeak) {
  auto m = synthetic_manifest(3, 2, true);
  auto folds = build_loso_folds(m, ratings_for(m, [](auto&) { return 1.0; }));
  // Relabel one augmented copy of spk0 as if it belonged to spk1.
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    if (m.rows[i].speaker_id == "spk0" && !m.rows[i].is_original()) {
      folds[0].train_rows.push_back(i);
      break;
    }
  }
  EXPECT_EQ(audit_fold(m, folds[0]), 1u);
}

TEST(LosoFolds, OralOnlyFilter) {
  const auto m = synthetic_manifest(2, 6, false);
  FoldOptions opt;
  opt.oral_only = true;
  const auto folds = build_loso_folds(m, ratings_for(m, [](auto&) { return 1.0; }), opt);
  for (const auto& f : folds) {
    EXPECT_EQ(f.test_rows.size(), 4u);
    for (std::size_t i : f.train_rows) EXPECT_TRUE(m.rows[i].is_oral);
  }
}

TEST(LosoFolds, Errors) {
  const auto one = synthetic_manifest(1, 3, false);
  EXPECT_THROW(build_loso_folds(one, {{"spk0", 1.0}}), ManifestError);
  const auto m = synthetic_manifest(3, 1, false);
  EXPECT_THROW(build_loso_folds(m, {{"spk0", 1.0}, {"spk1", 2.0}}), ManifestError);
}

TEST(LosoFolds, IndependentOfManifestOrder) {
  auto m = synthetic_manifest(3, 3, true);
  const auto ratings = ratings_for(m, [](auto&) { return 1.0; });
  const auto a = build_loso_folds(m, ratings);
  auto shuffled = m;
  std::mt19937_64 rng(1);
  std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
  const auto b = build_loso_folds(shuffled, ratings);
  for (std::size_t f = 0; f < a.size(); ++f) {
    ASSERT_EQ(a[f].train_rows.size(), b[f].train_rows.size());
    for (std::size_t k = 0; k < a[f].train_rows.size(); ++k) {
      EXPECT_EQ(m.rows[a[f].train_rows[k]].utterance_id, shuffled.rows[b[f].train_rows[k]].utterance_id);
    }
  }
}

TEST(TrainAndPredict, ConstantRating) {
  const auto m = synthetic_manifest(4, 3, false);
  const auto ratings = ratings_for(m, [](auto&) { return 2.0; });
  const auto folds = build_loso_folds(m, ratings);
  const auto provider = gaussian_provider([](auto&) { return 0.0; });
  const auto r = train_and_predict_fold(m, folds[0], ratings, provider, mse_config(), nn::regressor_spec(0, 32, 3));
  ASSERT_TRUE(r.ok()) << r.status;
  EXPECT_NEAR(r.predicted, 2.0, 0.1);
  const auto again = train_and_predict_fold(m, folds[0], ratings, provider, mse_config(), nn::regressor_spec(0, 32, 3));
  EXPECT_EQ(r.predicted, again.predicted);
}

TEST(TrainAndPredict, TwoGroupsRankOrdered) {
  const auto m = synthetic_manifest(8, 3, false);
  auto group = [](const std::string& s) { return speaker_index(s) % 2; };
  const auto ratings = ratings_for(m, [&](const std::string& s) { return group(s) == 0 ? 0.0 : 3.0; });
  const auto provider = gaussian_provider([&](const std::string& s) { return group(s) == 0 ? -1.0 : 1.0; });
  const auto res = run_loso(m, ratings, provider, mse_config(10), nn::regressor_spec(0, 32, 3), {}, 2);
  ASSERT_EQ(res.folds.size(), 8u);
  double mean0 = 0.0, mean1 = 0.0;
  for (const auto& f : res.folds) {
    ASSERT_TRUE(f.ok()) << f.status;
    (f.true_rating == 0.0 ? mean0 : mean1) += f.predicted / 4.0;
  }
  EXPECT_LT(mean0, mean1);
  ASSERT_TRUE(res.correlation.has_value());
  EXPECT_GT(res.correlation->r, 0.9);
}

TEST(TrainAndPredict, FailedFoldIsReportedNotThrown) {
  const auto m = synthetic_manifest(3, 2, false);
  const auto ratings = ratings_for(m, [](auto&) { return 1.0; });
  FeatureProvider broken = [](const manifest::ManifestRow&) -> Eigen::MatrixXd {
    throw ParseError("cannot decode audio");
  };
  std::vector<std::string> warnings;
  auto previous = set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
  const auto res = run_loso(m, ratings, broken, mse_config(1), nn::regressor_spec(0, 8, 1), {}, 1);
  set_warning_handler(previous);
  for (const auto& f : res.folds) {
    EXPECT_FALSE(f.ok());
    EXPECT_NE(f.status.find("cannot decode"), std::string::npos);
  }
  EXPECT_FALSE(res.correlation.has_value());
  EXPECT_FALSE(warnings.empty());
}

TEST(TrainAndPredict, RequiresMseLinearHead) {
  const auto m = synthetic_manifest(2, 1, false);
  const auto ratings = ratings_for(m, [](auto&) { return 1.0; });
  const auto folds = build_loso_folds(m, ratings);
  nn::TrainConfig ce;
  EXPECT_THROW(train_and_predict_fold(m, folds[0], ratings, gaussian_provider([](auto&) { return 0.0; }), ce,
                                      nn::regressor_spec(0, 8, 1)),
               ArgumentError);
}
