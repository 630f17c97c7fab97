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

// Evaluation statistics: Pearson correlation, Welch's t-test, rater
// agreement and split-half reliability.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ohm/csv.hpp"
#include "ohm/error.hpp"

namespace ohm::stats {

/// Two-sided p-value of a Student t statistic.
inline double t_two_sided_p(double t, double dof) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(dof);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased (n - 1) sample variance.
inline double sample_variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

struct Correlation {
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

inline Correlation pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("pearson_r needs equal-length inputs");
  if (x.size() < 3) throw ArgumentError("pearson_r needs at least 3 pairs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("pearson_r: zero variance input");
  Correlation c;
  c.n = x.size();
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(c.n) - 2.0;
  if (std::abs(c.r) >= 1.0) {
    c.p = 0.0;
  } else {
    c.p = t_two_sided_p(c.r * std::sqrt(dof / (1.0 - c.r * c.r)), dof);
  }
  return c;
}

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double dof = 0.0;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom; t is positive when mean(a) > mean(b).
inline TTest welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ArgumentError("welch_t needs at least 2 values per group");
  const double va = sample_variance(a) / static_cast<double>(a.size());
  const double vb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  const double diff = mean(a) - mean(b);
  if (se2 == 0.0) {
    if (diff == 0.0) return {0.0, 1.0, static_cast<double>(a.size() + b.size() - 2)};
    throw DegenerateInputError("welch_t: both groups have zero variance");
  }
  TTest res;
  res.t = diff / std::sqrt(se2);
  res.dof = se2 * se2 /
            (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  res.p = t_two_sided_p(res.t, res.dof);
  return res;
}

// ---------------------------------------------------------------------------
// Ratings.

enum class Cohort { kControl, kCleft };

struct RatingRecord {
  std::string speaker_id;
  std::vector<std::optional<double>> rater_scores;
  double ground_truth = 0.0;  // mean of the available rater scores
  Cohort cohort = Cohort::kCleft;
  std::optional<double> pct_active_errors;
  std::optional<double> pct_passive_errors;
};

inline double ground_truth(const std::vector<std::optional<double>>& scores) {
  double s = 0.0;
  int n = 0;
  for (const auto& v : scores) {
    if (v) {
      s += *v;
      ++n;
    }
  }
  if (n == 0) throw ManifestError("speaker has no rater scores");
  return s / n;
}

/// Ratings CSV: speaker_id, cohort, rater_1..rater_K, and optionally
/// pct_active_errors, pct_passive_errors. Empty cells are missing ratings.
inline std::vector<RatingRecord> read_ratings(const std::filesystem::path& path) {
  const csv::Table t = csv::read_table(path, ',');
  const int c_speaker = t.column("speaker_id");
  const int c_cohort = t.column("cohort");
  if (c_speaker < 0 || c_cohort < 0) throw ManifestError(path.string() + ": needs speaker_id and cohort columns");
  std::vector<int> rater_cols;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind("rater", 0) == 0) rater_cols.push_back(static_cast<int>(i));
  }
  if (rater_cols.empty()) throw ManifestError(path.string() + ": no rater_* columns");
  const int c_active = t.column("pct_active_errors");
  const int c_passive = t.column("pct_passive_errors");
  std::vector<RatingRecord> out;
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    RatingRecord r;
    r.speaker_id = f[c_speaker];
    if (seen[r.speaker_id]++) throw ManifestError(where + ": duplicate speaker " + r.speaker_id);
    const std::string& cohort = f[c_cohort];
    if (cohort == "control") r.cohort = Cohort::kControl;
    else if (cohort == "cp") r.cohort = Cohort::kCleft;
    else throw ManifestError(where + ": cohort must be 'control' or 'cp', got '" + cohort + "'");
    for (int c : rater_cols) {
      r.rater_scores.push_back(f[c].empty() ? std::nullopt : std::optional<double>(csv::parse_double(f[c], where)));
    }
    r.ground_truth = ground_truth(r.rater_scores);
    if (c_active >= 0 && !f[c_active].empty()) r.pct_active_errors = csv::parse_double(f[c_active], where);
    if (c_passive >= 0 && !f[c_passive].empty()) r.pct_passive_errors = csv::parse_double(f[c_passive], where);
    out.push_back(std::move(r));
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> x) {
  MeanStd m;
  m.count = x.size();
  if (x.empty()) return m;
  m.mean = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(s / static_cast<double>(x.size()));
  return m;
}

struct RaterStats {
  MeanStd inter_rater;  // over rater pairs
  MeanStd ohm_rater;    // over raters
  std::size_t skipped_pairs = 0;
};

/// Pairwise inter-rater Pearson r, and each rater's Pearson r against
/// `ohm_scores` (aligned with `records`). Missing cells are dropped pairwise;
/// pairs that are constant or too short are skipped with a warning.
inline RaterStats rater_stats(const std::vector<RatingRecord>& records, std::span<const double> ohm_scores) {
  if (records.size() < 3) throw ArgumentError("rater_stats needs at least 3 speakers");
  if (ohm_scores.size() != records.size()) throw ArgumentError("one OHM score per speaker is required");
  const std::size_t k = records.front().rater_scores.size();
  if (k < 2) throw ArgumentError("rater_stats needs at least 2 raters");
  for (const auto& r : records) {
    if (r.rater_scores.size() != k) throw ArgumentError("records disagree on rater count");
  }

  RaterStats out;
  auto correlate = [&](auto&& x_at, auto&& y_at, const std::string& label) -> std::optional<double> {
    std::vector<double> x, y;
    for (std::size_t s = 0; s < records.size(); ++s) {
      const auto xv = x_at(s);
      const auto yv = y_at(s);
      if (xv && yv) {
        x.push_back(*xv);
        y.push_back(*yv);
      }
    }
    if (x.size() < static_cast<std::size_t>(records.size())) {
      warn(label + ": " + std::to_string(records.size() - x.size()) + " missing cells excluded");
    }
    try {
      return pearson_r(x, y).r;
    } catch (const Error& e) {
      warn(label + " skipped: " + e.what());
      return std::nullopt;
    }
  };

  std::vector<double> pairs, vs_ohm;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto r = correlate([&](std::size_t s) { return records[s].rater_scores[a]; },
                               [&](std::size_t s) { return records[s].rater_scores[b]; },
                               "rater pair (" + std::to_string(a + 1) + ", " + std::to_string(b + 1) + ")");
      if (r) pairs.push_back(*r);
      else ++out.skipped_pairs;
    }
    const auto r = correlate([&](std::size_t s) { return records[s].rater_scores[a]; },
                             [&](std::size_t s) { return std::optional<double>(ohm_scores[s]); },
                             "rater " + std::to_string(a + 1) + " vs OHM");
    if (r) vs_ohm.push_back(*r);
  }
  out.inter_rater = mean_std(pairs);
  out.ohm_rater = mean_std(vs_ohm);
  return out;
}

/// Pearson r between two speaker-level score sets over the same speakers.
inline Correlation split_half(const std::map<std::string, double>& set1, const std::map<std::string, double>& set2) {
  if (set1.size() != set2.size()) throw ManifestError("split-half sets cover different speakers");
  std::vector<double> x, y;
  for (const auto& [speaker, v] : set1) {
    const auto it = set2.find(speaker);
    if (it == set2.end()) throw ManifestError("speaker " + speaker + " missing from the second split-half set");
    x.push_back(v);
    y.push_back(it->second);
  }
  return pearson_r(x, y);
}

}  // namespace ohm::stats
