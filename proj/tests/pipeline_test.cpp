#include <algorithm>

#include <gtest/gtest.h>

#include "clad/pipeline.hpp"
#include "oracles.hpp"

using namespace clad;

namespace {

Splits benchmark_splits(std::uint64_t seed) {
  SynthConfig sc;
  sc.n_target = 300;
  sc.m_non_target = 900;
  sc.seed = seed;
  return split(synth_benchmark(sc), {}, seed);
}

ModelArtifact identity_artifact(const Eigen::MatrixXd& pts) {
  const Eigen::Index d = pts.cols();
  ModelArtifact a;
  a.head = ProjectionHead::identity(d);
  a.model = fit_gaussian(pts, 0.0);
  a.threshold = make_threshold(decision_params(a.model.n, d), 0.95);
  return a;
}

}  // namespace

TEST(Infer, MeanIsTarget) {
  Rng rng(1);
  const ModelArtifact a = identity_artifact(rng.normal_matrix(60, 3));
  EmbeddingDataset d;
  d.vectors = a.model.mean.transpose();
  d.ids = {"m"};
  d.labels = {Label::NonTarget};
  const auto rows = infer(a, d);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].id, "m");
  EXPECT_NEAR(rows[0].t, 0.0, 1e-24);
  EXPECT_EQ(rows[0].decision, Label::Target);
}

TEST(Infer, AgreesWithDecisionRule) {
  Rng rng(2);
  const Eigen::MatrixXd pts = rng.normal_matrix(60, 4);
  const ModelArtifact a = identity_artifact(pts);
  EmbeddingDataset d;
  d.vectors = 2.0 * rng.normal_matrix(200, 4);
  for (int i = 0; i < 200; ++i) {
    d.ids.push_back(std::to_string(i));
    d.labels.push_back(Label::Target);
  }
  const auto rows = infer(a, d);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const Eigen::VectorXd x = d.vectors.row(i).transpose();
    EXPECT_EQ(rows[std::size_t(i)].decision, beta_decide(a.model, x, a.threshold));
    EXPECT_NEAR(rows[std::size_t(i)].t, oracle::decision_t(pts, x), 1e-10);
  }
  const std::string jsonl = inference_jsonl(rows);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 200);
  EXPECT_EQ(jsonl.substr(0, 21), "{\"id\":\"0\",\"decision\":");
}

TEST(Pipeline, CalibratedRunSeparatesClasses) {
  const Splits s = benchmark_splits(7);
  PipelineOptions o;
  o.train.seed = 7;
  const PipelineResult r = run_pipeline(s, o);
  EXPECT_EQ(r.artifact.seed, 7u);
  EXPECT_EQ(r.artifact.config_hash.size(), 16u);
  EXPECT_FALSE(r.artifact.mlp.has_value());
  EXPECT_GE(r.dev.f1, 0.8);
  const MetricsReport test = evaluate(r.artifact, s.test);
  EXPECT_TRUE(test.has_auc);
  EXPECT_GE(test.auc, 0.9);
}

TEST(Pipeline, FixedLevelAndRefit) {
  const Splits s = benchmark_splits(8);
  PipelineOptions o;
  o.beta_level = 0.9;
  o.refit_all = true;
  const PipelineResult r = run_pipeline(s, o);
  EXPECT_EQ(r.artifact.threshold.beta_level, 0.9);
  EXPECT_EQ(r.artifact.model.n, s.train.n_target());
  const GaussianModeld want = fit_target_model(s.train, r.artifact.head, o.train.ridge);
  EXPECT_LT(oracle::rel_err(r.artifact.model.cov, want.cov), 1e-12);
}

TEST(Pipeline, Deterministic) {
  const Splits s = benchmark_splits(9);
  PipelineOptions o;
  o.train.seed = 3;
  const std::string a = format_model(run_pipeline(s, o).artifact);
  EXPECT_EQ(format_model(run_pipeline(s, o).artifact), a);
}

TEST(Ablation, SixRowsAndTable) {
  const Splits s = benchmark_splits(10);
  PipelineOptions o;
  o.mlp.epochs = 3;
  const auto rows = run_ablation(s, o);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].loss, LossKind::Mah);
  EXPECT_FALSE(rows[0].mlp_decision);
  EXPECT_TRUE(rows[1].mlp_decision);
  EXPECT_EQ(rows[5].loss, LossKind::Cosine);
  const std::string tsv = ablation_tsv(rows);
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 7);
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "loss\tdecision\taccuracy\tprecision\tfpr\tf1");
  EXPECT_NE(tsv.find("\nmah-mean\tmlp\t"), std::string::npos);
}
