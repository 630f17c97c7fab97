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

// Utterance manifests: one TSV row per audio file.
//
// Required columns: audio_path, speaker_id, utterance_id.
// Optional: alignment_path, is_oral, rating, sentence_id, category, split,
// and the augmentation provenance columns aug_type, aug_param, aug_seed,
// source_utterance. Relative paths resolve against the manifest directory.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ohm/csv.hpp"
#include "ohm/error.hpp"

namespace ohm::manifest {

struct ManifestRow {
  std::filesystem::path audio_path;
  std::optional<std::filesystem::path> alignment_path;
  std::string speaker_id;
  std::string utterance_id;
  bool is_oral = true;
  std::optional<double> rating;
  std::string sentence_id;  // defaults to utterance_id
  std::string category;
  std::string split;
  std::string aug_type = "original";
  std::string aug_param;
  std::uint64_t aug_seed = 0;
  std::string source_utterance;  // defaults to utterance_id

  bool is_original() const { return aug_type == "original"; }
};

struct Manifest {
  std::vector<ManifestRow> rows;

  std::set<std::string> speakers() const {
    std::set<std::string> out;
    for (const auto& r : rows) out.insert(r.speaker_id);
    return out;
  }
};

namespace detail {

inline bool parse_bool(const std::string& s, const std::string& where) {
  if (s == "1" || s == "true" || s == "True" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "False" || s == "no") return false;
  throw ManifestError(where + ": expected a boolean, got '" + s + "'");
}

}  // namespace detail

inline void check_unique(const Manifest& m) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : m.rows) {
    if (!seen.emplace(r.speaker_id, r.utterance_id).second) {
      throw ManifestError("duplicate (speaker_id, utterance_id) = (" + r.speaker_id + ", " +
                          r.utterance_id + ")");
    }
  }
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  const csv::Table t = csv::read_table(path, '\t');
  const auto base = path.parent_path();
  auto col = [&](const char* name, bool required) {
    const int c = t.column(name);
    if (c < 0 && required) throw ManifestError(path.string() + ": missing column " + name);
    return c;
  };
  const int c_audio = col("audio_path", true);
  const int c_speaker = col("speaker_id", true);
  const int c_utt = col("utterance_id", true);
  const int c_align = col("alignment_path", false);
  const int c_oral = col("is_oral", false);
  const int c_rating = col("rating", false);
  const int c_sentence = col("sentence_id", false);
  const int c_category = col("category", false);
  const int c_split = col("split", false);
  const int c_aug_type = col("aug_type", false);
  const int c_aug_param = col("aug_param", false);
  const int c_aug_seed = col("aug_seed", false);
  const int c_source = col("source_utterance", false);

  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  Manifest m;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    ManifestRow r;
    r.audio_path = resolve(f[c_audio]);
    r.speaker_id = f[c_speaker];
    r.utterance_id = f[c_utt];
    if (r.speaker_id.empty() || r.utterance_id.empty()) throw ManifestError(where + ": empty speaker or utterance id");
    if (c_align >= 0 && !f[c_align].empty()) r.alignment_path = resolve(f[c_align]);
    if (c_oral >= 0 && !f[c_oral].empty()) r.is_oral = detail::parse_bool(f[c_oral], where);
    if (c_rating >= 0 && !f[c_rating].empty()) r.rating = csv::parse_double(f[c_rating], where);
    r.sentence_id = (c_sentence >= 0 && !f[c_sentence].empty()) ? f[c_sentence] : r.utterance_id;
    if (c_category >= 0) r.category = f[c_category];
    if (c_split >= 0) r.split = f[c_split];
    if (c_aug_type >= 0 && !f[c_aug_type].empty()) r.aug_type = f[c_aug_type];
    if (c_aug_param >= 0) r.aug_param = f[c_aug_param];
    if (c_aug_seed >= 0 && !f[c_aug_seed].empty()) {
      try {
        std::size_t used = 0;
        r.aug_seed = std::stoull(f[c_aug_seed], &used);
        if (used != f[c_aug_seed].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ManifestError(where + ": aug_seed '" + f[c_aug_seed] + "' is not an unsigned integer");
      }
    }
    r.source_utterance = (c_source >= 0 && !f[c_source].empty()) ? f[c_source] : r.utterance_id;
    m.rows.push_back(std::move(r));
  }
  check_unique(m);
  return m;
}

/// Throws ManifestError naming the first referenced file that is missing.
inline void check_files_exist(const Manifest& m, bool need_alignment = false) {
  for (const auto& r : m.rows) {
    if (!std::filesystem::exists(r.audio_path)) {
      throw ManifestError("missing audio file " + r.audio_path.string());
    }
    if (need_alignment) {
      if (!r.alignment_path) throw ManifestError("utterance " + r.utterance_id + " has no alignment_path");
      if (!std::filesystem::exists(*r.alignment_path)) {
        throw ManifestError("missing alignment file " + r.alignment_path->string());
      }
    }
  }
}

inline std::string format_manifest(const Manifest& m) {
  std::string out =
      "audio_path\talignment_path\tspeaker_id\tutterance_id\tis_oral\trating\tsentence_id\t"
      "category\tsplit\taug_type\taug_param\taug_seed\tsource_utterance\n";
  for (const auto& r : m.rows) {
    out += r.audio_path.string() + '\t' + (r.alignment_path ? r.alignment_path->string() : "") + '\t' +
           r.speaker_id + '\t' + r.utterance_id + '\t' + (r.is_oral ? "1" : "0") + '\t' +
           (r.rating ? csv::format_double(*r.rating) : "") + '\t' + r.sentence_id + '\t' + r.category +
           '\t' + r.split + '\t' + r.aug_type + '\t' + r.aug_param + '\t' + std::to_string(r.aug_seed) +
           '\t' + r.source_utterance + '\n';
  }
  return out;
}

}  // namespace ohm::manifest
