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

// ohm: command-line front end. See `ohm --help` and `ohm <command> --help`.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ohm/alignment.hpp"
#include "ohm/audio.hpp"
#include "ohm/augment.hpp"
#include "ohm/csv.hpp"
#include "ohm/error.hpp"
#include "ohm/features.hpp"
#include "ohm/manifest.hpp"
#include "ohm/nn.hpp"
#include "ohm/parallel.hpp"
#include "ohm/pipeline.hpp"
#include "ohm/preprocess.hpp"
#include "ohm/regressor.hpp"
#include "ohm/score.hpp"
#include "ohm/stats.hpp"
#include "ohm/version.hpp"

namespace fs = std::filesystem;
using ohm::csv::format_double;

namespace {

// Every file is written to a temporary name and renamed into place. If the
// command fails, everything it already committed is removed again.
class Outputs {
 public:
  void write(const fs::path& path, const std::string& text) {
    write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
  }

  void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".partial";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw ohm::ArgumentError("cannot write " + path.string());
      out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
      if (!out) {
        fs::remove(tmp);
        throw ohm::ArgumentError("write failed for " + path.string());
      }
    }
    fs::rename(tmp, path);
    committed_.push_back(path);
  }

  void rollback() {
    std::error_code ec;
    for (const auto& p : committed_) fs::remove(p, ec);
    committed_.clear();
  }

 private:
  std::vector<fs::path> committed_;
};

struct Provenance {
  std::string command;
  std::optional<std::uint64_t> seed;
  ohm::features::MfccConfig mfcc;
  std::optional<ohm::preprocess::PreprocessConfig> pre;

  std::string header() const {
    std::map<std::string, std::string> f{{"tool", "ohm"},
                                         {"version", ohm::kVersion},
                                         {"command", command},
                                         {"mfcc_hash", hex(mfcc.hash())}};
    f["seed"] = seed ? std::to_string(*seed) : "none";
    f["preprocess"] = pre ? (pre->enabled ? "on" : "off") : "none";
    if (pre) {
      f["pitch_factor"] = format_double(pre->pitch_factor);
      f["tempo_factor"] = format_double(pre->tempo_factor);
    }
    return ohm::csv::provenance_comment(f);
  }

  static std::string hex(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
  }
};

std::string fmt(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

void announce_seed(std::uint64_t seed) { std::cerr << "seed=" << seed << "\n"; }

ohm::manifest::Manifest filter_split(ohm::manifest::Manifest m, const std::string& split) {
  if (split.empty()) return m;
  ohm::manifest::Manifest out;
  for (auto& r : m.rows) {
    if (r.split == split) out.rows.push_back(std::move(r));
  }
  if (out.rows.empty()) throw ohm::ManifestError("no manifest rows with split '" + split + "'");
  return out;
}

// ---------------------------------------------------------------------------

struct TrainNasalityArgs {
  std::string manifest, model, loss_log, split, inventory;
  int epochs = 25, batch = 256, width = 1024, depth = 3;
  double lr = 1e-3, nv_fraction = 0.3, max_gap = 0.05;
  std::uint64_t seed = 42;
};

void run_train_nasality(const TrainNasalityArgs& a, Outputs& out) {
  announce_seed(a.seed);
  const auto m = filter_split(ohm::manifest::read_manifest(a.manifest), a.split);
  ohm::pipeline::LabelOptions opt;
  opt.classify.nv_fraction = a.nv_fraction;
  opt.classify.seed = a.seed;
  opt.classify.max_silence_gap_s = a.max_gap;
  if (!a.inventory.empty()) opt.inventory = ohm::alignment::load_inventory(a.inventory);
  const auto utts = ohm::pipeline::label_corpus(m, opt);
  const auto data = ohm::pipeline::to_dataset(utts);
  std::array<std::size_t, 4> per_class{};
  for (int y : data.targets.labels) ++per_class[static_cast<std::size_t>(y)];
  std::cerr << "frames: " << data.size() << " (NC " << per_class[0] << ", OC " << per_class[1] << ", NV "
            << per_class[2] << ", OV " << per_class[3] << ")\n";

  ohm::nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  Provenance prov{"train-nasality", a.seed, opt.mfcc, std::nullopt};
  std::string log = prov.header() + "epoch,mean_loss\n";
  const auto result = ohm::nn::train(data, ohm::nn::nasality_spec(opt.mfcc.hash(), a.width, a.depth), cfg,
                                     [&](const ohm::nn::EpochLog& e) {
                                       std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << "\n";
                                       log += std::to_string(e.epoch) + "," + format_double(e.mean_loss) + "\n";
                                     });
  out.write_bytes(a.model, ohm::nn::serialize_model(result.model));
  out.write(a.loss_log.empty() ? a.model + ".loss.csv" : a.loss_log, log);
}

// ---------------------------------------------------------------------------

struct PreArgs {
  double pitch = 0.8, tempo = 0.9;
  bool disabled = false;

  ohm::preprocess::PreprocessConfig config() const {
    ohm::preprocess::PreprocessConfig c;
    c.enabled = !disabled;
    c.pitch_factor = pitch;
    c.tempo_factor = tempo;
    c.validate();
    return c;
  }
};

void add_pre_options(CLI::App* sub, PreArgs& p) {
  sub->add_option("--pitch-factor", p.pitch, "Output F0 / input F0 before scoring")->capture_default_str();
  sub->add_option("--tempo-factor", p.tempo, "Output / input speaking rate before scoring")->capture_default_str();
  sub->add_flag("--no-preprocess", p.disabled, "Score the audio without pitch/tempo modification");
}

struct ScoreArgs {
  std::string manifest, model, out, frames_out, speaker_out, split;
  PreArgs pre;
};

void run_score(const ScoreArgs& a, Outputs& out) {
  const auto m = filter_split(ohm::manifest::read_manifest(a.manifest), a.split);
  const auto model = ohm::nn::load_model(a.model);
  const auto pre = a.pre.config();
  ohm::features::MfccConfig mfcc;
  const auto reports = ohm::pipeline::score_manifest(m, model, pre, mfcc);
  Provenance prov{"score", std::nullopt, mfcc, pre};
  std::string text = prov.header() + "speaker_id,utterance_id,n_frames,sentence_ohm,sentence_id,category,is_oral\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const auto& row = m.rows[i];
    text += r.speaker_id + "," + r.utterance_id + "," + std::to_string(r.frame_scores.size()) + "," +
            format_double(r.sentence_score) + "," + row.sentence_id + "," + row.category + "," +
            (row.is_oral ? "1" : "0") + "\n";
  }
  out.write(a.out, text);
  if (!a.frames_out.empty()) {
    std::string frames = prov.header() + "speaker_id,utterance_id,frame,frame_ohm\n";
    for (const auto& r : reports) {
      for (std::size_t k = 0; k < r.frame_scores.size(); ++k) {
        frames += r.speaker_id + "," + r.utterance_id + "," + std::to_string(k) + "," +
                  format_double(r.frame_scores[k]) + "\n";
      }
    }
    out.write(a.frames_out, frames);
  }
  if (!a.speaker_out.empty()) {
    std::string spk = prov.header() + "speaker_id,n_sentences,speaker_ohm\n";
    std::map<std::string, int> counts;
    for (const auto& r : reports) ++counts[r.speaker_id];
    for (const auto& [s, v] : ohm::scoring::speaker_scores(reports)) {
      spk += s + "," + std::to_string(counts[s]) + "," + format_double(v) + "\n";
    }
    out.write(a.speaker_out, spk);
  }
  std::cerr << "scored " << reports.size() << " utterances\n";
}

// ---------------------------------------------------------------------------

std::vector<ohm::pipeline::ScoredSentence> read_scores(const fs::path& path) {
  const auto t = ohm::csv::read_table(path, ',');
  auto need = [&](const char* c) {
    const int i = t.column(c);
    if (i < 0) throw ohm::ManifestError(path.string() + ": missing column " + c);
    return i;
  };
  const int c_spk = need("speaker_id"), c_utt = need("utterance_id"), c_n = need("n_frames"),
            c_score = need("sentence_ohm");
  const int c_sent = t.column("sentence_id"), c_cat = t.column("category"), c_oral = t.column("is_oral");
  std::vector<ohm::pipeline::ScoredSentence> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    const std::string where = path.string() + ":" + std::to_string(t.line_numbers[i]);
    ohm::pipeline::ScoredSentence s;
    s.speaker_id = f[c_spk];
    s.utterance_id = f[c_utt];
    s.n_frames = static_cast<std::size_t>(ohm::csv::parse_double(f[c_n], where));
    s.score = ohm::csv::parse_double(f[c_score], where);
    s.sentence_id = (c_sent >= 0 && !f[c_sent].empty()) ? f[c_sent] : s.utterance_id;
    if (c_cat >= 0) s.category = f[c_cat];
    if (c_oral >= 0 && !f[c_oral].empty()) s.is_oral = f[c_oral] != "0";
    out.push_back(std::move(s));
  }
  return out;
}

// Correlation row fields "n,r,p,note"; statistics that cannot be computed
// are reported as NA with the reason.
std::string corr_fields(const std::vector<double>& x, const std::vector<double>& y) {
  try {
    const auto c = ohm::stats::pearson_r(x, y);
    return std::to_string(c.n) + "," + fmt(c.r) + "," + fmt(c.p) + ",";
  } catch (const ohm::Error& e) {
    std::string why = e.what();
    for (auto& ch : why) {
      if (ch == ',') ch = ';';
    }
    return std::to_string(x.size()) + ",NA,NA," + why;
  }
}

struct EvaluateArgs {
  std::string scores, ratings, out_dir;
};

void run_evaluate(const EvaluateArgs& a, Outputs& out) {
  using ohm::pipeline::ScoredSentence;
  const auto sentences = read_scores(a.scores);
  const auto records = ohm::stats::read_ratings(a.ratings);
  std::map<std::string, const ohm::stats::RatingRecord*> by_speaker;
  for (const auto& r : records) by_speaker[r.speaker_id] = &r;
  std::set<std::string> scored;
  for (const auto& s : sentences) scored.insert(s.speaker_id);
  for (const auto& s : scored) {
    if (!by_speaker.count(s)) throw ohm::ManifestError("scored speaker " + s + " has no entry in " + a.ratings);
  }
  const fs::path dir(a.out_dir);
  const std::string head = Provenance{"evaluate", std::nullopt, {}, std::nullopt}.header();

  // Speaker-level OHM over oral sentences.
  const auto speaker_ohm = ohm::pipeline::speaker_means(sentences, [](const ScoredSentence& s) { return s.is_oral; });
  {
    std::string t = head + "speaker_id,cohort,ground_truth,n_oral_sentences,speaker_ohm\n";
    std::map<std::string, int> n_oral;
    for (const auto& s : sentences) n_oral[s.speaker_id] += s.is_oral;
    for (const auto& spk : scored) {
      const auto* r = by_speaker.at(spk);
      const auto it = speaker_ohm.find(spk);
      t += spk + "," + (r->cohort == ohm::stats::Cohort::kControl ? "control" : "cp") + "," +
           format_double(r->ground_truth) + "," + std::to_string(n_oral[spk]) + "," +
           (it == speaker_ohm.end() ? "NA" : format_double(it->second)) + "\n";
    }
    out.write(dir / "speaker_scores.csv", t);
  }

  auto vs_truth = [&](const std::map<std::string, double>& scores) {
    std::vector<double> x, y;
    for (const auto& [spk, v] : scores) {
      x.push_back(v);
      y.push_back(by_speaker.at(spk)->ground_truth);
    }
    return corr_fields(x, y);
  };

  {
    std::map<std::string, std::pair<std::string, bool>> meta;
    for (const auto& s : sentences) meta[s.sentence_id] = {s.category, s.is_oral};
    std::string t = head + "sentence_id,category,is_oral,n,r,p,note\n";
    for (const auto& [sid, m] : meta) {
      const auto scores = ohm::pipeline::speaker_means(
          sentences, [&, sid = sid](const ScoredSentence& s) { return s.sentence_id == sid; });
      t += sid + "," + m.first + "," + (m.second ? "1" : "0") + "," + vs_truth(scores) + "\n";
    }
    out.write(dir / "per_sentence.csv", t);
  }
  {
    std::set<std::string> cats;
    for (const auto& s : sentences) cats.insert(s.category);
    std::string t = head + "category,n,r,p,note\n";
    for (const auto& c : cats) {
      const auto scores =
          ohm::pipeline::speaker_means(sentences, [&](const ScoredSentence& s) { return s.category == c; });
      t += c + "," + vs_truth(scores) + "\n";
    }
    out.write(dir / "per_category.csv", t);
  }
  {
    std::string t = head + "measure,mean,std,count,note\n";
    std::vector<ohm::stats::RatingRecord> recs;
    std::vector<double> ohm_scores;
    for (const auto& [spk, v] : speaker_ohm) {
      recs.push_back(*by_speaker.at(spk));
      ohm_scores.push_back(v);
    }
    try {
      const auto rs = ohm::stats::rater_stats(recs, ohm_scores);
      t += "inter_rater," + fmt(rs.inter_rater.mean) + "," + fmt(rs.inter_rater.std) + "," +
           std::to_string(rs.inter_rater.count) + "," + std::to_string(rs.skipped_pairs) + " pairs skipped\n";
      t += "ohm_rater," + fmt(rs.ohm_rater.mean) + "," + fmt(rs.ohm_rater.std) + "," +
           std::to_string(rs.ohm_rater.count) + ",\n";
    } catch (const ohm::Error& e) {
      t += std::string("inter_rater,NA,NA,0,") + e.what() + "\nohm_rater,NA,NA,0,\n";
    }
    out.write(dir / "rater_agreement.csv", t);
    std::string g = head + "measure,n,r,p,note\n";
    g += "ohm_vs_ground_truth," + vs_truth(speaker_ohm) + "\n";
    out.write(dir / "ground_truth_correlation.csv", g);
  }
  {
    const auto [set1, set2] = ohm::pipeline::split_half_sets(sentences);
    std::vector<double> x, y;
    for (const auto& [spk, v] : set1) {
      x.push_back(v);
      y.push_back(set2.at(spk));
    }
    out.write(dir / "split_half.csv", head + "n,r,p,note\n" + corr_fields(x, y) + "\n");
  }
  {
    // Controls against CP speakers whose ground-truth rating is 0.
    std::vector<double> control, cp_normal;
    for (const auto& [spk, v] : speaker_ohm) {
      const auto* r = by_speaker.at(spk);
      if (r->cohort == ohm::stats::Cohort::kControl) control.push_back(v);
      else if (r->ground_truth == 0.0) cp_normal.push_back(v);
    }
    std::string t = head + "group_a,group_b,n_a,n_b,mean_a,mean_b,t,dof,p,note\n";
    t += "control,cp_rated_normal," + std::to_string(control.size()) + "," + std::to_string(cp_normal.size()) + ",";
    try {
      const auto tt = ohm::stats::welch_t(control, cp_normal);
      t += fmt(ohm::stats::mean(control)) + "," + fmt(ohm::stats::mean(cp_normal)) + "," + fmt(tt.t) + "," +
           fmt(tt.dof) + "," + fmt(tt.p) + ",\n";
    } catch (const ohm::Error& e) {
      t += std::string("NA,NA,NA,NA,NA,") + e.what() + "\n";
    }
    out.write(dir / "ttest.csv", t);
  }
  {
    std::string t = head + "score,error_type,n,r,p,note\n";
    for (const bool active : {true, false}) {
      std::vector<double> err, truth, ohm_v;
      for (const auto& [spk, v] : speaker_ohm) {
        const auto* r = by_speaker.at(spk);
        const auto& pct = active ? r->pct_active_errors : r->pct_passive_errors;
        if (!pct) continue;
        err.push_back(*pct);
        truth.push_back(r->ground_truth);
        ohm_v.push_back(v);
      }
      const std::string type = active ? "active" : "passive";
      t += "perceptual," + type + "," + corr_fields(truth, err) + "\n";
      t += "ohm," + type + "," + corr_fields(ohm_v, err) + "\n";
    }
    out.write(dir / "error_robustness.csv", t);
  }
  std::cerr << "evaluated " << scored.size() << " speakers\n";
}

// ---------------------------------------------------------------------------

struct AugmentArgs {
  std::string manifest, out_dir;
  std::vector<std::string> noise;
  std::vector<double> snr{5, 10, 15, 20}, rate{0.8, 0.9, 1.1, 1.2}, vtlp{0.9, 0.95, 1.05, 1.1};
  bool no_original = false, no_noise = false, no_rate = false, no_vtlp = false, no_white = false;
  std::uint64_t seed = 42;
};

void run_augment(const AugmentArgs& a, Outputs& out) {
  announce_seed(a.seed);
  ohm::augment::AugmentSpec spec;
  spec.snr_db_values = a.snr;
  spec.rate_factors = a.rate;
  spec.vtlp_alphas = a.vtlp;
  spec.include_original = !a.no_original;
  spec.noise = !a.no_noise;
  spec.rate = !a.no_rate;
  spec.vtlp = !a.no_vtlp;
  spec.seed = a.seed;
  if (a.no_white) spec.noise_sources.clear();
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& n : a.noise) {
    const auto eq = n.find('=');
    if (eq == std::string::npos || eq == 0) throw ohm::ArgumentError("--noise expects name=path, got '" + n + "'");
    files.emplace_back(n.substr(0, eq), n.substr(eq + 1));
  }
  ohm::augment::add_noise_files(spec, files);
  if (spec.noise && spec.noise_sources.empty()) throw ohm::ArgumentError("no noise source available");
  for (double f : spec.rate_factors) {
    if (!(f >= 0.5 && f <= 2.0)) throw ohm::ArgumentError("rate factor " + format_double(f) + " outside [0.5, 2]");
  }
  for (double v : spec.vtlp_alphas) {
    if (!(v >= 0.8 && v <= 1.25)) throw ohm::ArgumentError("VTLP alpha " + format_double(v) + " outside [0.8, 1.25]");
  }

  const auto in = ohm::manifest::read_manifest(a.manifest);
  ohm::manifest::check_files_exist(in, false);
  const fs::path dir(a.out_dir);
  const auto expanded = ohm::augment::expand_manifest(in, spec, dir / "audio");

  // Render every noise and rate row; slots are filled in parallel and
  // written in manifest order.
  std::map<std::string, const ohm::manifest::ManifestRow*> source;
  for (const auto& r : in.rows) source[r.utterance_id] = &r;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < expanded.rows.size(); ++i) {
    const auto& t = expanded.rows[i].aug_type;
    if (t == "noise" || t == "rate") todo.push_back(i);
  }
  std::vector<std::vector<unsigned char>> rendered(todo.size());
  ohm::parallel_for(todo.size(), [&](std::size_t k) {
    const auto& row = expanded.rows[todo[k]];
    const auto clean = ohm::audio::load_wav(source.at(row.source_utterance)->audio_path);
    for (const auto& v : ohm::augment::plan_variants(spec, row.source_utterance)) {
      if (v.seed != row.aug_seed) continue;
      rendered[k] = ohm::audio::encode_wav(ohm::augment::render_variant(clean, spec, v),
                                           ohm::audio::WavEncoding::kFloat32);
      return;
    }
    throw ohm::ValidationError("no planned variant matches " + row.utterance_id);
  });
  for (std::size_t k = 0; k < todo.size(); ++k) out.write_bytes(expanded.rows[todo[k]].audio_path, rendered[k]);

  Provenance prov{"augment", a.seed, {}, std::nullopt};
  out.write(dir / "manifest.tsv", prov.header() + ohm::manifest::format_manifest(expanded));
  std::cerr << in.rows.size() << " input rows -> " << expanded.rows.size() << " output rows ("
            << spec.variants_per_original() << " per original)\n";
}

// ---------------------------------------------------------------------------

struct RegressorArgs {
  std::string manifest, ratings, out;
  int epochs = 25, batch = 256, width = 512, depth = 3;
  double lr = 1e-3;
  bool all_sentences = false;
  std::uint64_t seed = 42;
};

void run_train_regressor(const RegressorArgs& a, Outputs& out) {
  announce_seed(a.seed);
  const auto m = ohm::manifest::read_manifest(a.manifest);
  std::map<std::string, double> ratings;
  if (!a.ratings.empty()) {
    for (const auto& r : ohm::stats::read_ratings(a.ratings)) ratings[r.speaker_id] = r.ground_truth;
  } else {
    for (const auto& r : m.rows) {
      if (!r.rating) continue;
      const auto [it, fresh] = ratings.emplace(r.speaker_id, *r.rating);
      if (!fresh && it->second != *r.rating) {
        throw ohm::ManifestError("speaker " + r.speaker_id + " has conflicting ratings in the manifest");
      }
    }
  }
  ohm::features::MfccConfig mfcc;
  ohm::nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.loss = ohm::nn::Loss::kMse;
  ohm::regressor::FoldOptions opt;
  opt.oral_only = !a.all_sentences;

  const auto folds = ohm::regressor::build_loso_folds(m, ratings, opt);
  for (const auto& f : folds) {
    if (const auto v = ohm::regressor::audit_fold(m, f)) {
      throw ohm::ValidationError("fold " + f.test_speaker + " has " + std::to_string(v) + " leaking rows");
    }
  }
  const auto res = ohm::regressor::run_loso(m, ratings, ohm::regressor::audio_feature_provider(mfcc), cfg,
                                            ohm::nn::regressor_spec(mfcc.hash(), a.width, a.depth), opt);
  Provenance prov{"train-regressor", a.seed, mfcc, std::nullopt};
  std::string t = prov.header() + "speaker_id,true_rating,predicted_score,fold_status\n";
  for (const auto& f : res.folds) {
    std::string status = f.status;
    for (auto& ch : status) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    t += f.speaker_id + "," + format_double(f.true_rating) + "," + (f.ok() ? format_double(f.predicted) : "NA") +
         "," + status + "\n";
  }
  out.write(a.out, t);
  if (res.correlation) {
    std::cout << "loso r=" << res.correlation->r << " p=" << res.correlation->p << " n=" << res.correlation->n << "\n";
  } else {
    std::cout << "loso correlation unavailable\n";
  }
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 42;
  double h = 1e-5;
  std::size_t coordinates = 256;
  std::string features;
};

Eigen::MatrixXd read_feature_rows(const fs::path& path, std::size_t max_rows) {
  const auto t = ohm::csv::read_table(path, ',');
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < t.rows.size() && rows.size() < max_rows; ++i) {
    std::vector<double> r;
    for (std::size_t c = 1; c < t.rows[i].size(); ++c) {
      r.push_back(ohm::csv::parse_double(t.rows[i][c], path.string()));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ohm::EmptyInputError(path.string() + ": no feature rows");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows[0].size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows[0].size()) throw ohm::ShapeError(path.string() + ": ragged feature rows");
    for (std::size_t i = 0; i < rows[j].size(); ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
  }
  return x;
}

int run_gradcheck(const GradcheckArgs& a) {
  announce_seed(a.seed);
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd x;
  if (!a.features.empty()) {
    x = read_feature_rows(a.features, 8);
  } else {
    x.resize(5, 6);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = gauss(rng);
    }
  }
  const int in = static_cast<int>(x.rows());
  const int batch = static_cast<int>(x.cols());
  bool ok = true;
  for (const bool ce : {true, false}) {
    ohm::nn::ModelSpec spec{{in, 7, ce ? 4 : 1},
                            ce ? ohm::nn::OutputActivation::kSoftmax : ohm::nn::OutputActivation::kLinear, 0};
    auto model = ohm::nn::he_init<double>(spec, a.seed + (ce ? 0 : 1));
    for (auto& b : model.biases) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.3 * gauss(rng);
    }
    ohm::nn::Targets t;
    for (int j = 0; j < batch; ++j) {
      t.labels.push_back(j % 4);
      t.values.push_back(static_cast<float>(gauss(rng)));
    }
    const auto r = ohm::nn::grad_check(model, x, t, ce ? ohm::nn::Loss::kCrossEntropy : ohm::nn::Loss::kMse, a.h,
                                       a.coordinates, a.seed);
    std::cout << (ce ? "cross_entropy" : "mse") << " [" << in << ",7," << (ce ? 4 : 1)
              << "] max_relative_error=" << r.max_relative_error
              << " max_abs_error_at_zero=" << r.max_absolute_error_at_zero << " coordinates=" << r.coordinates_checked
              << (r.passed() ? " ok" : " FAIL") << "\n";
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct FeaturesArgs {
  std::string audio, out;
};

void run_features(const FeaturesArgs& a, Outputs& out) {
  ohm::features::MfccConfig mfcc;
  const auto f = ohm::features::extract_features(ohm::audio::load_wav(a.audio), mfcc);
  std::string t = Provenance{"features", std::nullopt, mfcc, std::nullopt}.header() + "time_s";
  for (int k = 0; k < ohm::features::kFeatureDim; ++k) t += ",f" + std::to_string(k);
  t += "\n";
  for (Eigen::Index i = 0; i < f.n_frames(); ++i) {
    t += format_double(f.frame_times_s[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < f.vectors.cols(); ++k) t += "," + format_double(f.vectors(i, k));
    t += "\n";
  }
  out.write(a.out, t);
}

struct ConvertArgs {
  std::string in, out, tier = "phones";
};

void run_convert_textgrid(const ConvertArgs& a, Outputs& out) {
  const auto segs = ohm::alignment::parse_textgrid(a.in, a.tier);
  out.write(a.out, Provenance{"convert-textgrid", std::nullopt, {}, std::nullopt}.header() + "start_s\tend_s\tphone\n" +
                      ohm::alignment::format_alignment(segs));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Objective hypernasality measure: nasality model training, scoring and evaluation"};
  app.set_version_flag("--version", std::string(ohm::kVersion));
  app.set_config("--config", "", "Configuration file of key=value lines ([command] sections); flags win");
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: OHM_THREADS or all cores)");

  TrainNasalityArgs tn;
  auto* c_tn = app.add_subcommand("train-nasality", "Train the 4-class nasality model on aligned speech");
  c_tn->add_option("--manifest", tn.manifest, "Manifest TSV with audio_path and alignment_path")->required();
  c_tn->add_option("--model", tn.model, "Output model file")->required();
  c_tn->add_option("--loss-log", tn.loss_log, "Per-epoch loss CSV (default: <model>.loss.csv)");
  c_tn->add_option("--split", tn.split, "Use only manifest rows with this split value");
  c_tn->add_option("--inventory", tn.inventory, "Phone inventory override file");
  c_tn->add_option("--epochs", tn.epochs)->capture_default_str();
  c_tn->add_option("--learning-rate", tn.lr)->capture_default_str();
  c_tn->add_option("--batch-size", tn.batch)->capture_default_str();
  c_tn->add_option("--width", tn.width, "Hidden layer width")->capture_default_str();
  c_tn->add_option("--depth", tn.depth, "Number of hidden layers")->capture_default_str();
  c_tn->add_option("--nv-fraction", tn.nv_fraction, "Share of nasal-adjacent vowels labelled NV")->capture_default_str();
  c_tn->add_option("--max-silence-gap", tn.max_gap, "Pause (s) that breaks nasal adjacency")->capture_default_str();
  c_tn->add_option("--seed", tn.seed)->capture_default_str();

  ScoreArgs sc;
  auto* c_sc = app.add_subcommand("score", "Compute frame, sentence and speaker OHM scores");
  c_sc->add_option("--manifest", sc.manifest)->required();
  c_sc->add_option("--model", sc.model)->required();
  c_sc->add_option("--out", sc.out, "Sentence score CSV")->required();
  c_sc->add_option("--frames-out", sc.frames_out, "Optional per-frame score CSV");
  c_sc->add_option("--speaker-out", sc.speaker_out, "Optional speaker score CSV");
  c_sc->add_option("--split", sc.split, "Use only manifest rows with this split value");
  add_pre_options(c_sc, sc.pre);

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Correlate sentence scores with perceptual ratings");
  c_ev->add_option("--scores", ev.scores, "Sentence score CSV from `score`")->required();
  c_ev->add_option("--ratings", ev.ratings, "Ratings CSV")->required();
  c_ev->add_option("--out-dir", ev.out_dir, "Directory for the report CSVs")->required();

  AugmentArgs au;
  auto* c_au = app.add_subcommand("augment", "Expand a manifest with noise, rate and VTLP variants");
  c_au->add_option("--manifest", au.manifest)->required();
  c_au->add_option("--out-dir", au.out_dir, "Receives audio/ and manifest.tsv")->required();
  c_au->add_option("--noise", au.noise, "Recorded noise type as name=wav (repeatable)");
  c_au->add_option("--snr", au.snr, "SNR values in dB")->capture_default_str();
  c_au->add_option("--rate", au.rate, "Speaking-rate factors")->capture_default_str();
  c_au->add_option("--vtlp", au.vtlp, "VTLP warp factors")->capture_default_str();
  c_au->add_flag("--no-original", au.no_original, "Do not carry the original rows over");
  c_au->add_flag("--no-noise", au.no_noise);
  c_au->add_flag("--no-rate", au.no_rate);
  c_au->add_flag("--no-vtlp", au.no_vtlp);
  c_au->add_flag("--no-white", au.no_white, "Drop the generated white-noise source");
  c_au->add_option("--seed", au.seed)->capture_default_str();

  RegressorArgs rg;
  auto* c_rg = app.add_subcommand("train-regressor", "Leave-one-speaker-out DNN regression baseline");
  c_rg->add_option("--manifest", rg.manifest)->required();
  c_rg->add_option("--ratings", rg.ratings, "Ratings CSV (default: the manifest rating column)");
  c_rg->add_option("--out", rg.out, "Per-speaker prediction CSV")->required();
  c_rg->add_option("--epochs", rg.epochs)->capture_default_str();
  c_rg->add_option("--learning-rate", rg.lr)->capture_default_str();
  c_rg->add_option("--batch-size", rg.batch)->capture_default_str();
  c_rg->add_option("--width", rg.width)->capture_default_str();
  c_rg->add_option("--depth", rg.depth)->capture_default_str();
  c_rg->add_flag("--all-sentences", rg.all_sentences, "Also use rows with is_oral = 0");
  c_rg->add_option("--seed", rg.seed)->capture_default_str();

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Compare backprop gradients with finite differences");
  c_gc->add_option("--seed", gc.seed)->capture_default_str();
  c_gc->add_option("--step", gc.h, "Finite-difference step")->capture_default_str();
  c_gc->add_option("--coordinates", gc.coordinates, "Parameters sampled per model")->capture_default_str();
  c_gc->add_option("--features", gc.features, "Feature dump CSV; its first rows form the batch");

  FeaturesArgs fe;
  auto* c_fe = app.add_subcommand("features", "Dump 39-dimensional MFCC features of one file");
  c_fe->add_option("--audio", fe.audio)->required();
  c_fe->add_option("--out", fe.out)->required();

  ConvertArgs cv;
  auto* c_cv = app.add_subcommand("convert-textgrid", "Convert a Praat TextGrid phone tier to TSV");
  c_cv->add_option("--in", cv.in)->required();
  c_cv->add_option("--out", cv.out)->required();
  c_cv->add_option("--tier", cv.tier)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) setenv("OHM_THREADS", std::to_string(threads).c_str(), 1);

  Outputs out;
  try {
    if (c_tn->parsed()) run_train_nasality(tn, out);
    else if (c_sc->parsed()) run_score(sc, out);
    else if (c_ev->parsed()) run_evaluate(ev, out);
    else if (c_au->parsed()) run_augment(au, out);
    else if (c_rg->parsed()) run_train_regressor(rg, out);
    else if (c_gc->parsed()) return run_gradcheck(gc);
    else if (c_fe->parsed()) run_features(fe, out);
    else if (c_cv->parsed()) run_convert_textgrid(cv, out);
  } catch (const std::exception& e) {
    out.rollback();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
