#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "tspmgs/cli.hpp"
#include "tspmgs/csv.hpp"

using namespace tspmgs;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Small synthetic corpus shared by every CLI test.
const fs::path& toy_dir() {
  static const fs::path dir = [] {
    auto d = testing_support::temp_dir("cli_toy");
    const int rc = run_cli({"synth", "--out", d.string(), "--count", "16", "--size", "96"});
    EXPECT_EQ(rc, 0);
    return d;
  }();
  return dir;
}

std::string image0() { return (toy_dir() / "images" / "synthetic_000.png").string(); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<CsvRow> read_rows(const fs::path& p) {
  std::ifstream in(p);
  return read_csv(in);
}

std::vector<std::string> quick(std::vector<std::string> args, const fs::path& out) {
  for (std::string extra : {"--repetitions", "2", "--epochs", "1"}) args.push_back(extra);
  args.push_back("--out");
  args.push_back(out.string());
  return args;
}

}  // namespace

TEST(Cli, ScoreEmitsDocumentedJson) {
  const auto out = toy_dir() / "score.json";
  ASSERT_EQ(run_cli({"score", "--image", image0(), "--prompt", "a red circle at dawn", "--zero-shot", "--json-out",
                     out.string()}),
            0);
  const auto j = read_json(out);
  for (const char* key : {"p_image", "p_patch", "w_image", "w_patch", "q_final", "q_cg_image", "q_cg_patch", "q_fg",
                          "alpha", "sentences", "config_hash"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["p_image"].size(), 5u);
  EXPECT_NEAR(j["q_final"].get<double>(),
              j["alpha"].get<double>() * j["q_cg_image"].get<double>() +
                  (1 - j["alpha"].get<double>()) * j["q_cg_patch"].get<double>() + j["q_fg"].get<double>(),
              1e-12);
}

TEST(Cli, MissingImageExitsWithTwo) {
  EXPECT_EQ(run_cli({"score", "--image", "/nonexistent/x.png", "--prompt", "p", "--zero-shot"}), 2);
}

TEST(Cli, ScoreNeedsCheckpointOrZeroShot) {
  EXPECT_EQ(run_cli({"score", "--image", image0(), "--prompt", "p"}), 3);
  EXPECT_EQ(run_cli({"score", "--image", image0(), "--prompt", "p", "--zero-shot", "--task", "alignment", "--scheme",
                     "antonym"}),
            3);
  EXPECT_NE(run_cli({"score", "--bogus-flag"}), 0);
}

TEST(Cli, FixedOneCoarseTermIgnoresPatches) {
  json runs[2];
  const char* counts[2] = {"1", "5"};
  for (int i = 0; i < 2; ++i) {
    const auto out = toy_dir() / ("fixed1_" + std::string(counts[i]) + ".json");
    ASSERT_EQ(run_cli({"score", "--image", image0(), "--prompt", "a red circle", "--zero-shot", "--alpha-mode",
                       "fixed_1", "--patches-n", counts[i], "--json-out", out.string()}),
              0);
    runs[i] = read_json(out);
  }
  EXPECT_NE(runs[0]["p_patch"], runs[1]["p_patch"]);
  for (const auto& r : runs) {
    EXPECT_EQ(r["q_final"].get<double>(), r["q_cg_image"].get<double>() + r["q_fg"].get<double>());
  }
  EXPECT_EQ(runs[0]["q_cg_image"], runs[1]["q_cg_image"]);
  EXPECT_EQ(runs[0]["q_final"].get<double>() - runs[0]["q_fg"].get<double>(),
            runs[1]["q_final"].get<double>() - runs[1]["q_fg"].get<double>());
}

TEST(Cli, OnlyImageInputIgnoresPatchesEntirely) {
  json runs[2];
  const char* counts[2] = {"1", "5"};
  for (int i = 0; i < 2; ++i) {
    const auto out = toy_dir() / ("only_image_" + std::string(counts[i]) + ".json");
    ASSERT_EQ(run_cli({"score", "--image", image0(), "--prompt", "a red circle", "--zero-shot", "--image-input",
                       "only_image", "--patches-n", counts[i], "--json-out", out.string()}),
              0);
    runs[i] = read_json(out);
  }
  EXPECT_EQ(runs[0]["q_final"], runs[1]["q_final"]);
}

TEST(Cli, BenchmarkTableAndDeterminism) {
  const auto config = (toy_dir() / "config.json").string();
  const auto a = toy_dir() / "bench_a";
  const auto b = toy_dir() / "bench_b";
  ASSERT_EQ(run_cli(quick({"benchmark", "--config", config}, a)), 0);
  ASSERT_EQ(run_cli(quick({"benchmark", "--config", config}, b)), 0);
  const auto rows = read_rows(a / "benchmark" / "summary.csv");
  ASSERT_EQ(rows.size(), 3u);  // header + (synthetic, perception) + (synthetic, alignment)
  EXPECT_EQ(rows[1][1], "perception");
  EXPECT_EQ(rows[1][2], "adjective");
  EXPECT_EQ(rows[2][1], "alignment");
  EXPECT_EQ(rows[2][2], "adverb");
  EXPECT_EQ(slurp(a / "benchmark" / "summary.csv"), slurp(b / "benchmark" / "summary.csv"));
  const auto per_task = a / "benchmark" / "synthetic" / "perception";
  EXPECT_TRUE(fs::exists(per_task / "scatter.png"));
  EXPECT_TRUE(fs::exists(per_task / "repetitions.csv"));
  EXPECT_TRUE(fs::exists(per_task / "splits" / "split_01.csv"));
  const auto pred = read_json(per_task / "predictions_rep00.json");
  EXPECT_EQ(pred["config_hash"], rows[1][10]);
}

TEST(Cli, AblationRows) {
  const auto config = (toy_dir() / "config.json").string();
  const auto out = toy_dir() / "ablate";
  ASSERT_EQ(run_cli(quick({"ablate", "--config", config, "--axis", "alpha", "--task", "perception"}, out)), 0);
  EXPECT_EQ(read_rows(out / "ablation" / "alpha.csv").size(), 4u);

  ASSERT_EQ(run_cli(quick({"ablate", "--config", config, "--axis", "image_input", "--task", "alignment"}, out)), 0);
  const auto inputs = read_rows(out / "ablation" / "image_input.csv");
  ASSERT_EQ(inputs.size(), 4u);
  EXPECT_EQ(inputs[1][1], "only_image");
  EXPECT_EQ(inputs[2][1], "only_patches");
  EXPECT_EQ(inputs[3][1], "both");

  ASSERT_EQ(run_cli(quick({"ablate", "--config", config, "--axis", "prompt_scheme", "--task", "perception"}, out)), 0);
  const auto schemes = read_rows(out / "ablation" / "prompt_scheme.csv");
  ASSERT_EQ(schemes.size(), 3u);
  EXPECT_EQ(schemes[1][1], "antonym");
  EXPECT_EQ(schemes[2][1], "adjective");

  ASSERT_EQ(run_cli(quick({"ablate", "--config", config, "--axis", "prompt_scheme", "--task", "alignment",
                           "--cross-task"},
                          out)),
            0);
  EXPECT_EQ(read_rows(out / "ablation" / "prompt_scheme.csv").size(), 4u);
  EXPECT_EQ(run_cli(quick({"ablate", "--config", config, "--axis", "colour"}, out)), 3);
}

TEST(Cli, TrainThenScoreFromCheckpoint) {
  const auto config = (toy_dir() / "config.json").string();
  const auto out = toy_dir() / "train";
  ASSERT_EQ(run_cli({"train", "--config", config, "--epochs", "1", "--out", out.string()}), 0);
  const auto ckpt = out / "train" / "synthetic" / "perception" / "checkpoint";
  ASSERT_TRUE(fs::exists(ckpt / "weights.bin"));
  const auto json_out = out / "score.json";
  ASSERT_EQ(run_cli({"score", "--image", image0(), "--prompt", "a red circle", "--checkpoint", ckpt.string(),
                     "--json-out", json_out.string()}),
            0);
  EXPECT_FALSE(read_json(json_out)["zero_shot"].get<bool>());
  EXPECT_EQ(run_cli({"score", "--image", image0(), "--prompt", "x", "--checkpoint", ckpt.string(), "--task",
                     "alignment"}),
            3);
}

TEST(Cli, SplitCommandWritesManifests) {
  const auto config = (toy_dir() / "config.json").string();
  const auto out = toy_dir() / "splits_out";
  ASSERT_EQ(run_cli({"split", "--config", config, "--repetitions", "3", "--out", out.string()}), 0);
  for (int r = 0; r < 3; ++r) {
    const auto rows = read_rows(out / "splits" / "synthetic" / ("split_0" + std::to_string(r) + ".csv"));
    EXPECT_EQ(rows.size(), 17u);
  }
}
