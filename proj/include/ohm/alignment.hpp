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

// Forced-alignment ingestion and the four-way phone grouping used to label
// training frames: nasal consonant (NC), oral consonant (OC), nasalized
// vowel (NV), oral vowel (OV).

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ohm/error.hpp"

namespace ohm::alignment {

struct AlignmentSegment {
  std::string phone;
  double start_s = 0.0;
  double end_s = 0.0;
  bool unknown_phone = false;  // label outside ARPABET and the silence set
};

enum class PhoneClass : std::uint8_t { kNC = 0, kOC = 1, kNV = 2, kOV = 3, kExcluded = 4 };

inline constexpr int kNumClasses = 4;

inline const char* class_name(PhoneClass c) {
  switch (c) {
    case PhoneClass::kNC: return "NC";
    case PhoneClass::kOC: return "OC";
    case PhoneClass::kNV: return "NV";
    case PhoneClass::kOV: return "OV";
    case PhoneClass::kExcluded: return "EXCLUDED";
  }
  return "?";
}

/// Uppercases and strips ARPABET stress digits ("ah0" -> "AH").
inline std::string normalize_phone(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  for (char ch : label) {
    if (!std::isspace(static_cast<unsigned char>(ch))) {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    }
  }
  while (!out.empty() && std::isdigit(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

struct PhoneInventory {
  std::set<std::string> nasal_consonants{"M", "N", "NG"};
  std::set<std::string> oral_consonants{"B", "D", "G", "P", "T", "K",  "Z", "ZH", "V",
                                        "S", "SH", "F", "HH", "JH", "CH", "L", "R"};
  std::set<std::string> vowels{"AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
                               "EY", "IH", "IY", "OW", "OY", "UH", "UW"};
  std::set<std::string> silence{"", "SIL", "SP", "SPN", "<EPS>"};
  // Recognized but outside all classes.
  std::set<std::string> other{"W", "Y", "TH", "DH"};

  bool is_known(const std::string& p) const {
    return nasal_consonants.count(p) || oral_consonants.count(p) || vowels.count(p) ||
           silence.count(p) || other.count(p);
  }
};

/// Reads a class override file. Each non-comment line is "KEY: PHONE ...",
/// KEY one of NC, OC, VOWEL, SILENCE, OTHER. Listed keys replace the
/// defaults; unlisted keys keep them.
inline PhoneInventory load_inventory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open phone inventory " + path.string());
  PhoneInventory inv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected KEY: phones");
    }
    const std::string key = normalize_phone(line.substr(0, colon));
    std::istringstream rest(line.substr(colon + 1));
    std::set<std::string> phones;
    for (std::string p; rest >> p;) phones.insert(normalize_phone(p));
    if (key == "NC") inv.nasal_consonants = phones;
    else if (key == "OC") inv.oral_consonants = phones;
    else if (key == "VOWEL") inv.vowels = phones;
    else if (key == "SILENCE") inv.silence = phones;
    else if (key == "OTHER") inv.other = phones;
    else throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown key " + key);
  }
  return inv;
}

/// Sorts and checks a segment list: times finite, 0 <= start < end, no
/// overlap between consecutive segments.
inline void validate_segments(std::vector<AlignmentSegment>& segs, const std::string& name) {
  std::stable_sort(segs.begin(), segs.end(),
                   [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& s = segs[i];
    if (!(s.start_s >= 0.0) || !(s.end_s > s.start_s) || !std::isfinite(s.end_s)) {
      throw ValidationError(name + ": invalid segment [" + std::to_string(s.start_s) + ", " +
                            std::to_string(s.end_s) + ") for phone " + s.phone);
    }
    if (i > 0 && s.start_s < segs[i - 1].end_s - 1e-9) {
      throw ValidationError(name + ": segment " + s.phone + " at " + std::to_string(s.start_s) +
                            " overlaps " + segs[i - 1].phone + " ending at " +
                            std::to_string(segs[i - 1].end_s));
    }
  }
}

namespace detail {

inline double parse_time(const std::string& field, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": non-numeric time '" + field + "'");
  }
  if (used != field.size()) throw ParseError(where + ": non-numeric time '" + field + "'");
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

}  // namespace detail

/// Parses "start_s<TAB>end_s<TAB>phone" lines. Blank lines, '#' comments and
/// an optional "start_s end_s phone" header are skipped.
inline std::vector<AlignmentSegment> parse_alignment_text(const std::string& text,
                                                          const std::string& name = "<memory>",
                                                          const PhoneInventory& inv = {}) {
  std::vector<AlignmentSegment> segs;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split_fields(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    if (std::exchange(first_record, false) && fields[0] == "start_s") continue;
    const std::string where = name + ":" + std::to_string(line_no);
    if (fields.size() < 2 || fields.size() > 3) {
      throw ParseError(where + ": expected 3 columns, got " + std::to_string(fields.size()));
    }
    AlignmentSegment seg;
    seg.start_s = detail::parse_time(fields[0], where);
    seg.end_s = detail::parse_time(fields[1], where);
    seg.phone = fields.size() == 3 ? normalize_phone(fields[2]) : std::string();
    seg.unknown_phone = !inv.is_known(seg.phone);
    segs.push_back(std::move(seg));
  }
  validate_segments(segs, name);
  return segs;
}

inline std::vector<AlignmentSegment> parse_alignment(const std::filesystem::path& path,
                                                     const PhoneInventory& inv = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open alignment " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_alignment_text(ss.str(), path.string(), inv);
}

inline std::string format_alignment(const std::vector<AlignmentSegment>& segs) {
  std::string out;
  char buf[64];
  for (const auto& s : segs) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t", s.start_s, s.end_s);
    out += buf;
    out += s.phone.empty() ? "SIL" : s.phone;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Praat TextGrid (long or short text format), interval tier "phones" only.

namespace detail {

// Praat text files are a stream of numbers and quoted strings; labels such
// as "xmin =" or "item [1]:" carry no information and are skipped.
struct TextGridTokens {
  std::vector<std::string> values;
  std::vector<bool> quoted;
};

inline TextGridTokens tokenize_textgrid(const std::string& text) {
  TextGridTokens tok;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '"') {
      std::string s;
      ++i;
      while (i < text.size()) {
        if (text[i] == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            s.push_back('"');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        s.push_back(text[i++]);
      }
      tok.values.push_back(std::move(s));
      tok.quoted.push_back(true);
    } else {
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
             text[j] != '"') {
        ++j;
      }
      const std::string word = text.substr(i, j - i);
      i = j;
      char* end = nullptr;
      std::strtod(word.c_str(), &end);
      if (!word.empty() && end == word.c_str() + word.size()) {
        tok.values.push_back(word);
        tok.quoted.push_back(false);
      }
    }
  }
  return tok;
}

}  // namespace detail

inline std::vector<AlignmentSegment> parse_textgrid_text(const std::string& text,
                                                         const std::string& name = "<memory>",
                                                         const std::string& tier = "phones",
                                                         const PhoneInventory& inv = {}) {
  const auto tok = detail::tokenize_textgrid(text);
  std::size_t pos = 0;
  auto next_string = [&]() -> std::string {
    if (pos >= tok.values.size() || !tok.quoted[pos]) {
      throw FormatError(name + ": malformed TextGrid (expected string)");
    }
    return tok.values[pos++];
  };
  auto next_number = [&]() -> double {
    if (pos >= tok.values.size() || tok.quoted[pos]) {
      throw FormatError(name + ": malformed TextGrid (expected number)");
    }
    return std::stod(tok.values[pos++]);
  };
  if (next_string() != "ooTextFile" || next_string() != "TextGrid") {
    throw FormatError(name + ": not a Praat TextGrid");
  }
  next_number();
  next_number();
  const auto n_tiers = static_cast<long>(next_number());
  const std::string wanted = normalize_phone(tier);
  for (long t = 0; t < n_tiers; ++t) {
    const std::string cls = next_string();
    const std::string tier_name = next_string();
    next_number();
    next_number();
    const auto n_items = static_cast<long>(next_number());
    const bool interval = cls == "IntervalTier";
    if (!interval && cls != "TextTier") throw FormatError(name + ": unknown tier class " + cls);
    const bool keep = interval && normalize_phone(tier_name) == wanted;
    std::vector<AlignmentSegment> segs;
    for (long k = 0; k < n_items; ++k) {
      if (interval) {
        AlignmentSegment seg;
        seg.start_s = next_number();
        seg.end_s = next_number();
        seg.phone = normalize_phone(next_string());
        seg.unknown_phone = !inv.is_known(seg.phone);
        if (keep && !seg.phone.empty()) segs.push_back(std::move(seg));
      } else {
        next_number();
        next_string();
      }
    }
    if (keep) {
      validate_segments(segs, name);
      return segs;
    }
  }
  throw FormatError(name + ": no IntervalTier named \"" + tier + "\"");
}

inline std::vector<AlignmentSegment> parse_textgrid(const std::filesystem::path& path,
                                                    const std::string& tier = "phones",
                                                    const PhoneInventory& inv = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open TextGrid " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_textgrid_text(ss.str(), path.string(), tier, inv);
}

// ---------------------------------------------------------------------------
// Classification.

struct ClassifiedSegment {
  AlignmentSegment segment;
  PhoneClass cls = PhoneClass::kExcluded;
};

struct ClassifyOptions {
  double nv_fraction = 0.3;
  std::uint64_t seed = 42;
  /// Silence at least this long between two phones breaks adjacency.
  double max_silence_gap_s = 0.05;
};

/// Classifies a whole corpus at once; the NV sample is drawn over the pooled
/// list of nasal-adjacent vowels of all utterances. Exactly
/// round(nv_fraction * M) of the M candidates become NV, the rest Excluded.
inline std::vector<std::vector<ClassifiedSegment>> classify_corpus(
    const std::vector<std::vector<AlignmentSegment>>& corpus, const ClassifyOptions& opt = {},
    const PhoneInventory& inv = {}) {
  if (!(opt.nv_fraction >= 0.0 && opt.nv_fraction <= 1.0)) {
    throw ArgumentError("nv_fraction must lie in [0, 1], got " + std::to_string(opt.nv_fraction));
  }
  std::vector<std::vector<ClassifiedSegment>> out(corpus.size());
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const auto& segs = corpus[u];
    out[u].resize(segs.size());
    std::vector<std::size_t> voiced;  // indices of non-silence segments
    for (std::size_t i = 0; i < segs.size(); ++i) {
      out[u][i].segment = segs[i];
      if (!inv.silence.count(segs[i].phone)) voiced.push_back(i);
    }
    auto is_nc = [&](std::size_t i) { return inv.nasal_consonants.count(segs[i].phone) > 0; };
    for (std::size_t v = 0; v < voiced.size(); ++v) {
      const std::size_t i = voiced[v];
      const std::string& p = segs[i].phone;
      PhoneClass cls = PhoneClass::kExcluded;
      if (inv.nasal_consonants.count(p)) {
        cls = PhoneClass::kNC;
      } else if (inv.oral_consonants.count(p)) {
        cls = PhoneClass::kOC;
      } else if (inv.vowels.count(p)) {
        bool nasal_neighbour = false;
        if (v > 0) {
          const std::size_t j = voiced[v - 1];
          nasal_neighbour |= is_nc(j) && segs[i].start_s - segs[j].end_s < opt.max_silence_gap_s;
        }
        if (v + 1 < voiced.size()) {
          const std::size_t j = voiced[v + 1];
          nasal_neighbour |= is_nc(j) && segs[j].start_s - segs[i].end_s < opt.max_silence_gap_s;
        }
        if (nasal_neighbour) {
          candidates.emplace_back(u, i);
        } else {
          cls = PhoneClass::kOV;
        }
      }
      out[u][i].cls = cls;
    }
  }
  const auto n_nv = static_cast<std::size_t>(std::llround(opt.nv_fraction * candidates.size()));
  std::mt19937_64 rng(opt.seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (std::size_t k = 0; k < n_nv; ++k) {
    out[candidates[k].first][candidates[k].second].cls = PhoneClass::kNV;
  }
  return out;
}

inline std::vector<ClassifiedSegment> classify_segments(const std::vector<AlignmentSegment>& segs,
                                                        double nv_fraction, std::uint64_t seed,
                                                        const PhoneInventory& inv = {}) {
  ClassifyOptions opt;
  opt.nv_fraction = nv_fraction;
  opt.seed = seed;
  return classify_corpus({segs}, opt, inv).front();
}

/// Each frame takes the class of the segment whose half-open interval
/// [start, end) contains the frame centre; otherwise Excluded.
inline std::vector<PhoneClass> label_frames(const std::vector<ClassifiedSegment>& classified,
                                            const std::vector<double>& frame_times_s) {
  std::vector<PhoneClass> labels(frame_times_s.size(), PhoneClass::kExcluded);
  for (std::size_t f = 0; f < frame_times_s.size(); ++f) {
    const double t = frame_times_s[f];
    auto it = std::upper_bound(classified.begin(), classified.end(), t,
                               [](double v, const ClassifiedSegment& s) { return v < s.segment.start_s; });
    if (it == classified.begin()) continue;
    --it;
    if (t < it->segment.end_s) labels[f] = it->cls;
  }
  return labels;
}

}  // namespace ohm::alignment
