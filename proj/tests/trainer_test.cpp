#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "clad/data.hpp"
#include "clad/mahalanobis.hpp"
#include "clad/metrics.hpp"
#include "clad/trainer.hpp"
#include "oracles.hpp"

using namespace clad;

namespace {

EmbeddingDataset make_dataset(const Eigen::MatrixXd& targets, const Eigen::MatrixXd& negatives) {
  EmbeddingDataset d;
  d.vectors.resize(targets.rows() + negatives.rows(), targets.cols());
  d.vectors << targets, negatives;
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    d.ids.push_back("t" + std::to_string(i));
    d.labels.push_back(Label::Target);
  }
  for (Eigen::Index i = 0; i < negatives.rows(); ++i) {
    d.ids.push_back("n" + std::to_string(i));
    d.labels.push_back(Label::NonTarget);
  }
  return d;
}

EmbeddingDataset small_benchmark(std::uint64_t seed) {
  SynthConfig sc;
  sc.n_target = 400;
  sc.m_non_target = 1600;
  sc.seed = seed;
  return synth_benchmark(sc);
}

}  // namespace

TEST(SampleTriples, ForcedPositive) {
  Rng rng(1);
  const EmbeddingDataset d = make_dataset(rng.normal_matrix(2, 3), rng.normal_matrix(1, 3));
  const auto batches = sample_triples(d, 4, rng);
  ASSERT_EQ(batches.size(), 1u);
  ASSERT_EQ(batches[0].size(), 2u);
  for (const auto& t : batches[0]) {
    EXPECT_EQ(t.positive, 1 - t.anchor);
    EXPECT_EQ(t.negative, 2);
  }
}

TEST(SampleTriples, AnchorsCoverEveryTargetOnce) {
  Rng rng(2);
  const EmbeddingDataset d = make_dataset(rng.normal_matrix(37, 2), rng.normal_matrix(11, 2));
  const auto batches = sample_triples(d, 8, rng);
  ASSERT_EQ(batches.size(), 5u);
  EXPECT_EQ(batches.back().size(), 5u);
  std::map<Eigen::Index, int> seen;
  for (const auto& b : batches)
    for (const auto& t : b) {
      ++seen[t.anchor];
      EXPECT_NE(t.anchor, t.positive);
      EXPECT_EQ(d.labels[std::size_t(t.positive)], Label::Target);
      EXPECT_EQ(d.labels[std::size_t(t.negative)], Label::NonTarget);
    }
  EXPECT_EQ(seen.size(), 37u);
  for (const auto& [k, c] : seen) EXPECT_EQ(c, 1);
}

TEST(SampleTriples, Deterministic) {
  Rng data_rng(3);
  const EmbeddingDataset d = make_dataset(data_rng.normal_matrix(50, 2), data_rng.normal_matrix(20, 2));
  Rng a(42), b(42);
  const auto x = sample_triples(d, 7, a), y = sample_triples(d, 7, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      EXPECT_EQ(x[i][j].anchor, y[i][j].anchor);
      EXPECT_EQ(x[i][j].positive, y[i][j].positive);
      EXPECT_EQ(x[i][j].negative, y[i][j].negative);
    }
}

TEST(SampleTriples, PositivesAreUniform) {
  const Eigen::Index n = 1000;
  const EmbeddingDataset d = make_dataset(Eigen::MatrixXd::Zero(n, 1), Eigen::MatrixXd::Zero(1, 1));
  Rng rng(7);
  std::vector<double> counts(std::size_t(n), 0.0);
  long draws = 0;
  while (draws < 100000)
    for (const auto& b : sample_triples(d, 50, rng))
      for (const auto& t : b) counts[std::size_t(t.positive)] += 1, ++draws;
  const double expected = double(draws) / double(n);
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Wilson-Hilferty upper 1% point of chi-square with n-1 degrees of freedom
  const double df = double(n - 1), z = 2.326347874040841;
  const double crit = df * std::pow(1 - 2 / (9 * df) + z * std::sqrt(2 / (9 * df)), 3);
  EXPECT_LT(chi2, crit);
}

TEST(SampleTriples, NeedsBothClasses) {
  Rng rng(1);
  const EmbeddingDataset d = make_dataset(rng.normal_matrix(1, 2), rng.normal_matrix(3, 2));
  try {
    sample_triples(d, 4, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientClassData);
  }
}

TEST(TrainConfig, ProjectionWidthAndValidation) {
  TrainConfig c;
  EXPECT_EQ(c.projection_width(32), 16);
  EXPECT_EQ(c.projection_width(1), 1);
  EXPECT_EQ(c.projection_width(512), 64);
  c.proj_dim = 100;
  EXPECT_EQ(c.projection_width(32), 32);
  EXPECT_EQ(c.window_capacity(), 1600);
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_loss("mah-mean"), LossKind::MahMean);
  EXPECT_THROW(parse_loss("l2"), Error);
}

TEST(ProjectionHead, OrthonormalRows) {
  Rng rng(4);
  const ProjectionHead h = ProjectionHead::orthonormal(10, 4, rng);
  EXPECT_LT((h.weights * h.weights.transpose() - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-13);
  EXPECT_EQ(h.bias.norm(), 0.0);
  EXPECT_THROW(ProjectionHead::orthonormal(3, 4, rng), Error);
  EXPECT_THROW(h.project(Eigen::MatrixXd::Zero(2, 9)), Error);
}

TEST(Train, ZeroEpochsKeepsInitialization) {
  const EmbeddingDataset d = small_benchmark(1);
  TrainConfig c;
  c.epochs = 0;
  c.seed = 9;
  const TrainResult r = train(d, c);
  Rng init(9, "head-init");
  const ProjectionHead h0 = ProjectionHead::orthonormal(d.dim(), c.projection_width(d.dim()), init);
  EXPECT_EQ(r.head.weights, h0.weights);
  EXPECT_EQ(r.head.bias, h0.bias);
  const GaussianModeld want = fit_target_model(d, h0, c.ridge);
  EXPECT_LT(oracle::rel_err(r.model.cov, want.cov), 1e-12);
  EXPECT_LT(oracle::rel_err(r.model.mean, want.mean), 1e-12);
  EXPECT_TRUE(r.log.empty());
}

TEST(Train, WindowModelTracksItsContents) {
  const EmbeddingDataset d = small_benchmark(2);
  TrainConfig c;
  c.batch_size = 12;  // 400 targets leave a short final batch
  c.window_multiplier = 10;
  int steps = 0;
  train(d, c, [&](const TrainLogRecord&, const ProjectionHead&, const SlidingWindow<double>& w) {
    ++steps;
    const GaussianModeld naive = fit_gaussian(w.contents(), c.ridge);
    EXPECT_LT(oracle::rel_err(w.model().cov, naive.cov), 1e-10);
    EXPECT_LT(oracle::rel_err(w.model().mean, naive.mean), 1e-10);
  });
  EXPECT_EQ(steps, 34);
}

TEST(Train, DeterministicUnderSeed) {
  const EmbeddingDataset d = small_benchmark(3);
  TrainConfig c;
  c.seed = 5;
  c.loss = LossKind::Mah;
  const TrainResult a = train(d, c), b = train(d, c);
  EXPECT_EQ(a.head.weights, b.head.weights);
  EXPECT_EQ(a.head.bias, b.head.bias);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  c.seed = 6;
  EXPECT_NE(train(d, c).head.weights, a.head.weights);
}

TEST(Train, LogsOneRecordPerBatch) {
  const EmbeddingDataset d = small_benchmark(4);
  TrainConfig c;
  c.epochs = 2;
  const TrainResult r = train(d, c);
  ASSERT_EQ(r.log.size(), 50u);
  EXPECT_EQ(r.log[25].epoch, 1);
  EXPECT_EQ(r.log[25].batch, 0);
  for (const auto& rec : r.log) EXPECT_TRUE(std::isfinite(rec.loss));
}

TEST(Train, SingleEpochSeparatesSyntheticData) {
  const EmbeddingDataset d = small_benchmark(5);
  const Splits s = split(d, {}, 5);
  TrainConfig c;
  c.seed = 5;
  const TrainResult r = train(s.train, c);
  const EmbeddingDataset dev = project(s.dev, r.head);
  const DecisionThreshold thr = calibrate(r.model, dev);
  const Eigen::VectorXd t = decision_statistics(r.model, dev.vectors);
  std::vector<Label> pred;
  for (Eigen::Index i = 0; i < t.size(); ++i) pred.push_back(t[i] < thr.v_beta ? Label::Target : Label::NonTarget);
  EXPECT_GE(score(pred, dev.labels).f1, 0.9);
}

TEST(Train, RejectsDegenerateData) {
  Rng rng(1);
  const EmbeddingDataset d = make_dataset(rng.normal_matrix(1, 4), rng.normal_matrix(5, 4));
  try {
    train(d, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientClassData);
  }
}

namespace {

EmbeddingDataset separable_2d(Rng& rng) {
  Eigen::MatrixXd t(200, 2), n(200, 2);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(-2, 2), b = rng.uniform(0.2, 2);
    t.row(i) << a, a + b;
    const double c = rng.uniform(-2, 2), e = rng.uniform(0.2, 2);
    n.row(i) << c, c - e;
  }
  return make_dataset(t, n);
}

double accuracy(const std::vector<Label>& p, const std::vector<Label>& y) {
  double ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == y[i];
  return ok / double(p.size());
}

}  // namespace

TEST(TrainMlp, SeparableToyData) {
  Rng rng(10);
  const EmbeddingDataset d = separable_2d(rng);
  MlpConfig c;
  c.epochs = 50;
  const MlpHead m = train_mlp(d, ProjectionHead::identity(2), c);
  EXPECT_GE(accuracy(m.predict(d.vectors), d.labels), 0.99);
}

TEST(TrainMlp, ZeroEpochsIsNearChance) {
  // labels carry no information about the inputs, so any fixed rule scores about 1/2
  Rng rng(11);
  const EmbeddingDataset d = make_dataset(rng.normal_matrix(500, 2), rng.normal_matrix(500, 2));
  MlpConfig c;
  c.epochs = 0;
  const MlpHead m = train_mlp(d, ProjectionHead::identity(2), c);
  EXPECT_NEAR(accuracy(m.predict(d.vectors), d.labels), 0.5, 0.1);
}

TEST(TrainMlp, Deterministic) {
  Rng rng(12);
  const EmbeddingDataset d = separable_2d(rng);
  MlpConfig c;
  c.seed = 3;
  const MlpHead a = train_mlp(d, ProjectionHead::identity(2), c);
  const MlpHead b = train_mlp(d, ProjectionHead::identity(2), c);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w3, b.w3);
  EXPECT_EQ(a.b3, b.b3);
  EXPECT_EQ(a.predict_proba(d.vectors), b.predict_proba(d.vectors));
}
