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

#include <filesystem>
#include <fstream>

#include "ohm/alignment.hpp"

using namespace ohm;
using namespace ohm::alignment;

namespace {

std::vector<AlignmentSegment> segs(std::initializer_list<std::tuple<const char*, double, double>> list) {
  std::vector<AlignmentSegment> out;
  for (const auto& [p, s, e] : list) out.push_back({p, s, e});
  return out;
}

std::vector<PhoneClass> classes(const std::vector<ClassifiedSegment>& c) {
  std::vector<PhoneClass> out;
  for (const auto& s : c) out.push_back(s.cls);
  return out;
}

}  // namespace

TEST(ParseAlignment, SingleLine) {
  const auto s = parse_alignment_text("0.00\t0.12\tN\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].phone, "N");
  EXPECT_DOUBLE_EQ(s[0].start_s, 0.0);
  EXPECT_DOUBLE_EQ(s[0].end_s, 0.12);
  EXPECT_FALSE(s[0].unknown_phone);
}

TEST(ParseAlignment, HeaderAfterCommentIsSkipped) {
  const auto s = parse_alignment_text("# tool=ohm\nstart_s\tend_s\tphone\n0\t0.1\tN\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].phone, "N");
  EXPECT_THROW(parse_alignment_text("0\t0.1\tN\nstart_s\tend_s\tphone\n"), ParseError);
}

TEST(ParseAlignment, EmptyFileIsEmptyList) { EXPECT_TRUE(parse_alignment_text("").empty()); }

TEST(ParseAlignment, OverlapIsValidationError) {
  EXPECT_THROW(parse_alignment_text("0\t0.1\tAA\n0.05\t0.2\tB\n"), ValidationError);
}

TEST(ParseAlignment, NonNumericTimeIsParseError) {
  EXPECT_THROW(parse_alignment_text("zero\t0.1\tAA\n"), ParseError);
  EXPECT_THROW(parse_alignment_text("0.0\t0.1x\tAA\n"), ParseError);
}

TEST(ParseAlignment, SortsStripsStressAndFlagsUnknown) {
  const auto s = parse_alignment_text("start_s\tend_s\tphone\n0.2\t0.3\tah1\n0.0\t0.2\tXYZ\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].phone, "XYZ");
  EXPECT_TRUE(s[0].unknown_phone);
  EXPECT_EQ(s[1].phone, "AH");
  EXPECT_FALSE(s[1].unknown_phone);
}

TEST(ParseAlignment, ZeroLengthSegmentRejected) {
  EXPECT_THROW(parse_alignment_text("0.1\t0.1\tAA\n"), ValidationError);
}

TEST(ParseAlignment, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ohm_align_rt.tsv";
  const auto in = segs({{"N", 0.0, 0.12}, {"IY", 0.12, 0.3}});
  std::ofstream(path) << format_alignment(in);
  const auto out = parse_alignment(path);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].phone, "IY");
  EXPECT_DOUBLE_EQ(out[1].end_s, 0.3);
  std::filesystem::remove(path);
}

TEST(TextGrid, LongFormatPhonesTier) {
  const std::string tg = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.5
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 0.5
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = "no"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.5
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 0.1
            text = ""
        intervals [2]:
            xmin = 0.1
            xmax = 0.2
            text = "N"
        intervals [3]:
            xmin = 0.2
            xmax = 0.5
            text = "OW1"
)";
  const auto s = parse_textgrid_text(tg);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].phone, "N");
  EXPECT_EQ(s[1].phone, "OW");
  EXPECT_DOUBLE_EQ(s[1].end_s, 0.5);
}

TEST(TextGrid, ShortFormat) {
  const std::string tg = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n0\n1\n<exists>\n1\n"
                         "\"IntervalTier\"\n\"phones\"\n0\n1\n2\n0\n0.4\n\"M\"\n0.4\n1\n\"AA1\"\n";
  const auto s = parse_textgrid_text(tg);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].phone, "M");
  EXPECT_EQ(s[1].phone, "AA");
}

TEST(TextGrid, MissingTierIsFormatError) {
  const std::string tg = "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n0\n1\n<exists>\n1\n"
                         "\"IntervalTier\"\n\"words\"\n0\n1\n1\n0\n1\n\"hi\"\n";
  EXPECT_THROW(parse_textgrid_text(tg), FormatError);
}

TEST(Classify, VowelsAroundNasalBecomeNv) {
  const auto c = classify_segments(segs({{"OW", 0.0, 0.1}, {"N", 0.1, 0.2}, {"IY", 0.2, 0.3}}), 1.0, 7);
  EXPECT_EQ(classes(c), (std::vector{PhoneClass::kNV, PhoneClass::kNC, PhoneClass::kNV}));
}

TEST(Classify, OralContext) {
  const auto c = classify_segments(segs({{"AE", 0.0, 0.1}, {"T", 0.1, 0.2}}), 0.3, 7);
  EXPECT_EQ(classes(c), (std::vector{PhoneClass::kOV, PhoneClass::kOC}));
}

TEST(Classify, ZeroFractionGivesNoNv) {
  const auto c = classify_segments(segs({{"OW", 0.0, 0.1}, {"N", 0.1, 0.2}, {"IY", 0.2, 0.3}}), 0.0, 7);
  EXPECT_EQ(classes(c), (std::vector{PhoneClass::kExcluded, PhoneClass::kNC, PhoneClass::kExcluded}));
}

TEST(Classify, FractionOutOfRangeIsArgumentError) {
  EXPECT_THROW(classify_segments({}, 1.5, 0), ArgumentError);
  EXPECT_THROW(classify_segments({}, -0.1, 0), ArgumentError);
}

TEST(Classify, InventoryCoversFigureExample) {
  // "no one who had ever seen": N OW W AH N HH UW HH AE D EH V ER S IY N
  const auto c = classify_segments(
      segs({{"N", 0.00, 0.05},  {"OW", 0.05, 0.10}, {"W", 0.10, 0.15},  {"AH", 0.15, 0.20},
            {"N", 0.20, 0.25},  {"HH", 0.25, 0.30}, {"UW", 0.30, 0.35}, {"HH", 0.35, 0.40},
            {"AE", 0.40, 0.45}, {"D", 0.45, 0.50},  {"EH", 0.50, 0.55}, {"V", 0.55, 0.60},
            {"ER", 0.60, 0.65}, {"S", 0.65, 0.70},  {"IY", 0.70, 0.75}, {"N", 0.75, 0.80}}),
      1.0, 1);
  using P = PhoneClass;
  EXPECT_EQ(classes(c), (std::vector{P::kNC, P::kNV, P::kExcluded, P::kNV, P::kNC, P::kOC, P::kOV, P::kOC, P::kOV,
                                     P::kOC, P::kOV, P::kOC, P::kOV, P::kOC, P::kNV, P::kNC}));
}

TEST(Classify, LongSilenceBreaksAdjacency) {
  // 40 ms pause keeps adjacency, 60 ms breaks it.
  auto c = classify_segments(segs({{"N", 0.0, 0.1}, {"SIL", 0.1, 0.14}, {"AA", 0.14, 0.3}}), 1.0, 0);
  EXPECT_EQ(c[2].cls, PhoneClass::kNV);
  c = classify_segments(segs({{"N", 0.0, 0.1}, {"SIL", 0.1, 0.16}, {"AA", 0.16, 0.3}}), 1.0, 0);
  EXPECT_EQ(c[2].cls, PhoneClass::kOV);
  // Unlabelled gaps count as silence too.
  c = classify_segments(segs({{"N", 0.0, 0.1}, {"AA", 0.2, 0.3}}), 1.0, 0);
  EXPECT_EQ(c[1].cls, PhoneClass::kOV);
}

TEST(Classify, SilenceAndUnlistedPhonesExcluded) {
  const auto c = classify_segments(segs({{"SIL", 0.0, 0.1}, {"TH", 0.1, 0.2}, {"XYZ", 0.2, 0.3}}), 0.3, 0);
  for (const auto& s : c) EXPECT_EQ(s.cls, PhoneClass::kExcluded);
}

TEST(Classify, NvCountIsRoundedFractionAndSeeded) {
  // 20 utterances of the form "M AA", each vowel a nasal-adjacent candidate.
  std::vector<std::vector<AlignmentSegment>> corpus;
  for (int u = 0; u < 20; ++u) corpus.push_back(segs({{"M", 0.0, 0.1}, {"AA", 0.1, 0.2}, {"T", 0.2, 0.3}}));
  ClassifyOptions opt;
  opt.nv_fraction = 0.3;
  opt.seed = 11;
  const auto a = classify_corpus(corpus, opt);
  const auto b = classify_corpus(corpus, opt);
  int nv = 0;
  for (std::size_t u = 0; u < a.size(); ++u) {
    EXPECT_EQ(classes(a[u]), classes(b[u]));
    nv += a[u][1].cls == PhoneClass::kNV;
  }
  EXPECT_EQ(nv, 6);
  opt.nv_fraction = 0.33;  // round(6.6) = 7
  nv = 0;
  for (const auto& u : classify_corpus(corpus, opt)) nv += u[1].cls == PhoneClass::kNV;
  EXPECT_EQ(nv, 7);
}

TEST(Classify, InventoryOverrideFile) {
  const auto path = std::filesystem::temp_directory_path() / "ohm_inventory.txt";
  std::ofstream(path) << "# custom\nNC: M N NG NX\n";
  const auto inv = load_inventory(path);
  EXPECT_TRUE(inv.nasal_consonants.count("NX"));
  EXPECT_TRUE(inv.oral_consonants.count("T"));
  const auto c = classify_segments(segs({{"NX", 0.0, 0.1}}), 0.3, 0, inv);
  EXPECT_EQ(c[0].cls, PhoneClass::kNC);
  std::filesystem::remove(path);
}

TEST(LabelFrames, ContainmentAndBoundaries) {
  std::vector<ClassifiedSegment> c{{{"N", 0.0, 0.12}, PhoneClass::kNC}, {{"AA", 0.12, 0.2}, PhoneClass::kOV}};
  const auto labels = label_frames(c, {0.05, 0.12, 0.19, 0.25});
  EXPECT_EQ(labels[0], PhoneClass::kNC);
  EXPECT_EQ(labels[1], PhoneClass::kOV);  // half-open: boundary goes to the later segment
  EXPECT_EQ(labels[2], PhoneClass::kOV);
  EXPECT_EQ(labels[3], PhoneClass::kExcluded);
}

TEST(LabelFrames, ExcludedSegmentsAndGaps) {
  std::vector<ClassifiedSegment> c{{{"SIL", 0.0, 0.1}, PhoneClass::kExcluded}, {{"T", 0.2, 0.3}, PhoneClass::kOC}};
  const auto labels = label_frames(c, {0.05, 0.15, 0.25});
  EXPECT_EQ(labels, (std::vector{PhoneClass::kExcluded, PhoneClass::kExcluded, PhoneClass::kOC}));
}
