#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "clad/data.hpp"
#include "clad/pipeline.hpp"

namespace fs = std::filesystem;
using namespace clad;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(CLAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("clad_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string small_dataset(std::uint64_t seed = 1) {
    const std::string p = path("data_" + std::to_string(seed) + ".jsonl");
    EXPECT_EQ(run("synth --n-target 200 --m-non-target 600 --seed " + std::to_string(seed) + " --output " + p), 0);
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("synth"), 2);
  EXPECT_EQ(run("synth --output " + path("x") + " --n-target many"), 2);
  EXPECT_EQ(run("train --input a --output b --loss l2"), 2);
  EXPECT_EQ(run("train --input a --output b --beta-level 1"), 2);
  EXPECT_EQ(run("train --input a --output b --calibrate recall"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, InvalidTrainingConfigExitsWithTwo) {
  const std::string data = small_dataset();
  EXPECT_EQ(run("train --input " + data + " --output " + path("m") + " --lr 0"), 2);
  EXPECT_EQ(run("train --input " + data + " --output " + path("m") + " --batch-size 0"), 2);
}

TEST_F(Cli, DataErrorsExitWithThree) {
  EXPECT_EQ(run("train --input " + path("missing.jsonl") + " --output " + path("m")), 3);
  write_file(path("bad.jsonl"), "{\"id\":\"a\",\"label\":7,\"vector\":[1]}\n");
  EXPECT_EQ(run("train --input " + path("bad.jsonl") + " --output " + path("m")), 3);
  write_file(path("model.txt"), "clad-model\nversion 0\n");
  EXPECT_EQ(run("evaluate --model " + path("model.txt") + " --input " + small_dataset()), 3);
}

TEST_F(Cli, NumericalErrorsExitWithFour) {
  // three targets are too few for a three-dimensional normality test
  SynthConfig sc;
  sc.n_target = 3;
  sc.m_non_target = 50;
  save_dataset(synth_benchmark(sc), path("tiny.jsonl"));
  EXPECT_EQ(run("diagnose --input " + path("tiny.jsonl") + " --output " + path("diag")), 4);
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(run("synth --n-target 30 --m-non-target 70 --seed 4 --output " + path("a")), 0);
  ASSERT_EQ(run("synth --n-target 30 --m-non-target 70 --seed 4 --output " + path("b")), 0);
  ASSERT_EQ(run("synth --n-target 30 --m-non-target 70 --seed 5 --output " + path("c")), 0);
  EXPECT_EQ(read_file(path("a")), read_file(path("b")));
  EXPECT_NE(read_file(path("a")), read_file(path("c")));
  const EmbeddingDataset d = load_dataset(path("a"));
  EXPECT_EQ(d.size(), 100);
  EXPECT_EQ(d.n_target(), 30);
}

TEST_F(Cli, ConfigFileAndOverrides) {
  const std::string data = small_dataset();
  write_file(path("run.cfg"), "# training setup\nseed = 9\nloss = mah\nepochs=2\n");
  ASSERT_EQ(run("train --config " + path("run.cfg") + " --input " + data + " --output " + path("from_cfg")), 0);
  ASSERT_EQ(run("train --input " + data + " --output " + path("from_flags") + " --seed 9 --loss mah --epochs 2"), 0);
  EXPECT_EQ(read_file(path("from_cfg")), read_file(path("from_flags")));

  ASSERT_EQ(run("train --config " + path("run.cfg") + " --seed 10 --input " + data + " --output " + path("override")), 0);
  ASSERT_EQ(run("train --input " + data + " --output " + path("direct") + " --seed 10 --loss mah --epochs 2"), 0);
  EXPECT_EQ(read_file(path("override")), read_file(path("direct")));

  write_file(path("typo.cfg"), "sede = 9\n");
  EXPECT_EQ(run("train --config " + path("typo.cfg") + " --input " + data + " --output " + path("m")), 2);
  write_file(path("k.cfg"), "k = 2\n");
  EXPECT_EQ(run("train --config " + path("k.cfg") + " --input " + data + " --output " + path("m")), 2);
  write_file(path("garbled.cfg"), "seed 9\n");
  EXPECT_EQ(run("train --config " + path("garbled.cfg") + " --input " + data + " --output " + path("m")), 2);
  EXPECT_EQ(run("train --config " + path("none.cfg") + " --input " + data + " --output " + path("m")), 2);
}

TEST_F(Cli, TrainWritesModelAndLog) {
  const std::string data = small_dataset();
  ASSERT_EQ(run("train --input " + data + " --output " + path("m") + " --log " + path("log") + " --loss cosine --seed 2"), 0);
  const ModelArtifact a = load_model(path("m"));
  EXPECT_EQ(a.seed, 2u);
  EXPECT_FALSE(a.mlp.has_value());
  // 160 training targets in batches of 16
  const std::string log = read_file(path("log"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 10);

  ASSERT_EQ(run("train --input " + data + " --output " + path("mlp") + " --decision mlp --mlp-epochs 2"), 0);
  EXPECT_TRUE(load_model(path("mlp")).mlp.has_value());
}

TEST_F(Cli, InferAndEvaluateMatchTheLibrary) {
  const std::string data = small_dataset();
  ASSERT_EQ(run("train --input " + data + " --output " + path("m") + " --seed 3"), 0);
  ASSERT_EQ(run("infer --model " + path("m") + " --input " + data + " --output " + path("inf")), 0);
  ASSERT_EQ(run("evaluate --model " + path("m") + " --input " + data + " --split test --seed 3 --output " + path("eval")), 0);

  const ModelArtifact a = load_model(path("m"));
  const EmbeddingDataset d = load_dataset(data);
  const std::string inf = read_file(path("inf"));
  EXPECT_EQ(std::count(inf.begin(), inf.end(), '\n'), d.size());
  EXPECT_EQ(inf, inference_jsonl(infer(a, d)));
  EXPECT_EQ(read_file(path("eval")), evaluate(a, split(d, {}, 3).test).to_text());
}

TEST_F(Cli, CalibrateRewritesTheThreshold) {
  const std::string data = small_dataset();
  ASSERT_EQ(run("train --input " + data + " --output " + path("m") + " --seed 3"), 0);
  ASSERT_EQ(run("calibrate --model " + path("m") + " --input " + data + " --beta-level 0.5 --output " + path("fixed")), 0);
  const ModelArtifact fixed = load_model(path("fixed"));
  EXPECT_EQ(fixed.threshold.beta_level, 0.5);
  EXPECT_EQ(fixed.head.weights, load_model(path("m")).head.weights);

  // recalibrating on the same dev split with the same objective reproduces the trained file
  ASSERT_EQ(run("calibrate --model " + path("fixed") + " --input " + data + " --seed 3 --output " + path("again")), 0);
  EXPECT_EQ(read_file(path("again")), read_file(path("m")));

  ASSERT_EQ(run("calibrate --model " + path("m") + " --input " + data +
                " --seed 3 --calibrate f1-fpr-cap --fpr-cap 0.01 --output " + path("capped")),
            0);
  const ModelArtifact capped = load_model(path("capped"));
  const ModelArtifact trained = load_model(path("m"));
  const EmbeddingDataset dev = split(load_dataset(data), {}, 3).dev;
  EXPECT_LE(evaluate(capped, dev).fpr, std::max(0.01, evaluate(trained, dev).fpr));
}

TEST_F(Cli, DiagnoseWritesReports) {
  const std::string data = small_dataset();
  ASSERT_EQ(run("diagnose --input " + data + " --k 2 --output " + path("diag")), 0);
  for (const char* f : {"normality.jsonl", "qq_target.tsv", "qq_non_target.tsv", "distances.tsv"})
    EXPECT_TRUE(fs::exists(dir_ / "diag" / f)) << f;
  const std::string normality = read_file(path("diag/normality.jsonl"));
  EXPECT_EQ(std::count(normality.begin(), normality.end(), '\n'), 2);
  EXPECT_NE(normality.find("\"k\":2"), std::string::npos);
  const std::string dist = read_file(path("diag/distances.tsv"));
  EXPECT_EQ(std::count(dist.begin(), dist.end(), '\n'), 801);
  const std::string qq = read_file(path("diag/qq_target.tsv"));
  EXPECT_EQ(std::count(qq.begin(), qq.end(), '\n'), 201);
}

TEST_F(Cli, AblateTable) {
  const std::string data = small_dataset();
  ASSERT_EQ(run("ablate --input " + data + " --mlp-epochs 2 --seed 1 --output " + path("a")), 0);
  ASSERT_EQ(run("ablate --input " + data + " --mlp-epochs 2 --seed 1 --output " + path("b")), 0);
  const std::string t = read_file(path("a"));
  EXPECT_EQ(t, read_file(path("b")));
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 7);
  EXPECT_EQ(t.substr(0, t.find('\n')), "loss\tdecision\taccuracy\tprecision\tfpr\tf1");
}
