#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

#include "support.hpp"
#include "tspmgs/csv.hpp"
#include "tspmgs/dataset.hpp"
#include "tspmgs/errors.hpp"

using namespace tspmgs;

namespace {

void touch_png(const std::filesystem::path& p) {
  cv::imwrite(p.string(), cv::Mat(8, 8, CV_8UC3, cv::Scalar(1, 2, 3)));
}

std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& body) {
  const auto p = dir / "manifest.csv";
  std::ofstream(p) << body;
  return p;
}

std::vector<Sample> numbered(int m) {
  std::vector<Sample> out;
  for (int i = 0; i < m; ++i) {
    Sample s;
    s.name = "s" + std::to_string(i);
    s.initial_prompt = "prompt " + std::to_string(i % 7);
    s.mos_perception = s.raw_mos_perception = i;
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> names(const std::vector<Sample>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back(s.name);
  return out;
}

}  // namespace

TEST(Csv, QuotesCrlfAndBom) {
  std::istringstream in("\xEF\xBB\xBFname,prompt\r\na.png,\"a cat, sitting\"\r\n\r\nb.png,\"say \"\"hi\"\"\"\n");
  const auto rows = read_csv(in);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (CsvRow{"name", "prompt"}));
  EXPECT_EQ(rows[1][1], "a cat, sitting");
  EXPECT_EQ(rows[2][1], "say \"hi\"");
  std::istringstream bad("a,\"open\n");
  EXPECT_THROW(read_csv(bad), InputError);
}

TEST(Csv, WriteRoundTrip) {
  std::ostringstream out;
  const CsvRow row{"plain", "with,comma", "with \"quote\"", "multi\nline"};
  write_csv_row(out, row);
  std::istringstream in(out.str());
  EXPECT_EQ(read_csv(in).at(0), row);
}

TEST(Dataset, LoadsAndSkipsMissingImages) {
  const auto dir = testing_support::temp_dir("dataset_load");
  touch_png(dir / "sd_0001.png");
  touch_png(dir / "mj_0002.png");
  const auto manifest = write_manifest(dir,
                                       "name,prompt,mos_quality,mos_align\n"
                                       "sd_0001.png,a red fox,2.5,3.1\n"
                                       "mj_0002.png,\"a cat, sitting\",4.0,1.2\n"
                                       "gone_0003.png,missing,1.0,1.0\n");
  const auto report = load_dataset(manifest);
  EXPECT_EQ(report.rows, 3u);
  EXPECT_EQ(report.skipped_missing, 1u);
  ASSERT_EQ(report.samples.size(), 2u);
  EXPECT_EQ(report.samples[1].initial_prompt, "a cat, sitting");
  EXPECT_DOUBLE_EQ(*report.samples[1].mos_alignment, 1.2);
  EXPECT_EQ(*report.samples[0].generator_id, "sd");
  EXPECT_FALSE(report.warnings.empty());
}

TEST(Dataset, QualityOnlyManifest) {
  const auto dir = testing_support::temp_dir("dataset_quality_only");
  touch_png(dir / "a.png");
  const auto report = load_dataset(write_manifest(dir, "name,prompt,mos_quality\na.png,x,3\n"));
  ASSERT_EQ(report.samples.size(), 1u);
  EXPECT_FALSE(report.samples[0].mos_alignment.has_value());
}

TEST(Dataset, EmptyBodyWarns) {
  const auto dir = testing_support::temp_dir("dataset_empty");
  const auto report = load_dataset(write_manifest(dir, "name,prompt,mos_quality\n"));
  EXPECT_TRUE(report.samples.empty());
  EXPECT_EQ(report.warnings.size(), 1u);
}

TEST(Dataset, MalformedManifests) {
  const auto dir = testing_support::temp_dir("dataset_bad");
  touch_png(dir / "a.png");
  EXPECT_THROW(load_dataset(write_manifest(dir, "name,caption,mos_quality\na.png,x,1\n")), InputError);
  EXPECT_THROW(load_dataset(write_manifest(dir, "name,prompt,mos_quality\na.png,x,good\n")), InputError);
  EXPECT_THROW(load_dataset(write_manifest(dir, "name,prompt,mos_quality\na.png,x\n")), InputError);
  EXPECT_THROW(load_dataset(write_manifest(dir, "name,prompt,mos_quality\na.png,,2\n")), InputError);
  EXPECT_THROW(load_dataset(dir / "absent.csv"), InputError);
}

TEST(Normalize, MapsEndpointsToBounds) {
  auto samples = numbered(3);
  samples[0].raw_mos_perception = 1;
  samples[1].raw_mos_perception = 3;
  samples[2].raw_mos_perception = 5;
  const auto n = normalize_mos(samples, 5.0);
  EXPECT_DOUBLE_EQ(*n[0].mos_perception, 0.0);
  EXPECT_DOUBLE_EQ(*n[1].mos_perception, 2.5);
  EXPECT_DOUBLE_EQ(*n[2].mos_perception, 5.0);
  EXPECT_DOUBLE_EQ(*n[1].raw_mos_perception, 3.0);
}

TEST(Normalize, IdentityOnUnitRange) {
  auto samples = numbered(4);
  const double values[] = {0.0, 1.7, 3.3, 5.0};
  for (int i = 0; i < 4; ++i) samples[i].raw_mos_perception = values[i];
  const auto n = normalize_mos(samples, 5.0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(*n[i].mos_perception, values[i], 1e-12);
}

TEST(Normalize, ConstantColumnRejected) {
  auto samples = numbered(3);
  for (auto& s : samples) s.raw_mos_perception = 2.0;
  EXPECT_THROW(normalize_mos(samples, 5.0), InputError);
}

TEST(Split, SizesAndDeterminism) {
  const auto samples = numbered(10);
  const auto a = split(samples, {0.8, 3, 0});
  EXPECT_EQ(a.train.size(), 8u);
  EXPECT_EQ(a.test.size(), 2u);
  const auto b = split(samples, {0.8, 3, 0});
  EXPECT_EQ(names(a.train), names(b.train));
  EXPECT_EQ(names(a.test), names(b.test));
}

TEST(Split, RepetitionsDiffer) {
  const auto samples = numbered(30);
  const auto a = split(samples, {0.8, 0, 0});
  const auto b = split(samples, {0.8, 0, 1});
  EXPECT_NE(names(a.train), names(b.train));
}

TEST(Split, PartitionsAreDisjointAndComplete) {
  for (int m : {2, 5, 11, 64}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto s = split(numbered(m), {0.8, 9, rep});
      std::set<std::string> all;
      for (const auto& n : names(s.train)) all.insert(n);
      for (const auto& n : names(s.test)) EXPECT_TRUE(all.insert(n).second);
      EXPECT_EQ(all.size(), static_cast<std::size_t>(m));
    }
  }
}

TEST(Split, InvalidSpec) {
  EXPECT_THROW(split(numbered(4), {1.0, 0, 0}), ConfigError);
  EXPECT_THROW(split(numbered(4), {0.8, 0, -1}), ConfigError);
}

TEST(Split, ManifestRoundTrip) {
  const auto dir = testing_support::temp_dir("split_manifest");
  const auto samples = numbered(12);
  const auto s = split(samples, {0.8, 1, 4});
  write_split_manifest(dir / "split.csv", s);
  const auto back = read_split_manifest(dir / "split.csv", samples);
  EXPECT_EQ(back.repetition_index, 4);
  EXPECT_EQ(names(back.train), names(s.train));
  EXPECT_EQ(names(back.test), names(s.test));
}

TEST(Split, PromptLeakageCounted) {
  Split s;
  s.train = numbered(3);
  s.test = numbered(2);
  EXPECT_EQ(prompt_leakage(s), 2u);
}
