#include "clad/pipeline.hpp"

#include <json.hpp>

namespace clad {

std::vector<Inference> infer(const ModelArtifact& artifact, const EmbeddingDataset& data) {
  const Eigen::MatrixXd z = artifact.head.project(data.vectors);
  std::vector<Inference> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  if (artifact.mlp) {
    const Eigen::VectorXd p = artifact.mlp->predict_proba(z);
    for (Eigen::Index i = 0; i < data.size(); ++i)
      out.push_back({data.ids[static_cast<std::size_t>(i)],
                     p[i] > 0.5 ? Label::Target : Label::NonTarget, p[i], p[i]});
    return out;
  }
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto x = z.row(i).transpose();
    const double t = decision_statistic(artifact.model, x).t;
    const Label decision = beta_decide(artifact.model, x, artifact.threshold);
    out.push_back({data.ids[static_cast<std::size_t>(i)], decision, t, -t});
  }
  return out;
}

MetricsReport evaluate(const ModelArtifact& artifact, const EmbeddingDataset& data) {
  const auto rows = infer(artifact, data);
  std::vector<Label> pred;
  Eigen::VectorXd scores(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pred.push_back(rows[i].decision);
    scores[static_cast<Eigen::Index>(i)] = rows[i].score;
  }
  MetricsReport report = score(pred, data.labels);
  if (data.n_target() > 0 && data.m_non_target() > 0) {
    report.auc = roc_auc(scores, data.labels);
    report.has_auc = true;
  }
  return report;
}

PipelineResult run_pipeline(const Splits& splits, const PipelineOptions& options) {
  TrainResult trained = train(splits.train, options.train);
  PipelineResult result;
  result.log = std::move(trained.log);
  ModelArtifact& a = result.artifact;
  a.head = std::move(trained.head);
  a.model = options.refit_all ? fit_target_model(splits.train, a.head, options.train.ridge)
                              : std::move(trained.model);
  const BetaParams params = decision_params(a.model.n, a.model.dim());
  if (options.beta_level) a.threshold = make_threshold(params, *options.beta_level);
  else a.threshold = calibrate(a.model, project(splits.dev, a.head), options.calibration);
  a.seed = options.train.seed;
  a.config_hash = hash_hex(describe(options.train));
  if (options.mlp_decision) {
    MlpConfig mlp = options.mlp;
    mlp.seed = options.train.seed;
    a.mlp = train_mlp(splits.train, a.head, mlp);
  }
  result.dev = evaluate(a, splits.dev);
  return result;
}

std::vector<AblationRow> run_ablation(const Splits& splits, const PipelineOptions& base,
                                      const std::vector<bool>& decisions) {
  std::vector<AblationRow> rows;
  for (LossKind loss : {LossKind::Mah, LossKind::MahMean, LossKind::Cosine}) {
    PipelineOptions opts = base;
    opts.train.loss = loss;
    opts.mlp_decision = false;
    PipelineResult beta_run = run_pipeline(splits, opts);
    for (bool mlp : decisions) {
      ModelArtifact artifact = beta_run.artifact;
      if (mlp) {
        MlpConfig cfg = base.mlp;
        cfg.seed = base.train.seed;
        artifact.mlp = train_mlp(splits.train, artifact.head, cfg);
      }
      rows.push_back({loss, mlp, evaluate(artifact, splits.test)});
    }
  }
  return rows;
}

std::string ablation_tsv(const std::vector<AblationRow>& rows) {
  std::string out = "loss\tdecision\taccuracy\tprecision\tfpr\tf1\n";
  for (const auto& r : rows) {
    out += std::string(loss_name(r.loss)) + '\t' + (r.mlp_decision ? "mlp" : "beta") + '\t' +
           format_real(r.test.accuracy) + '\t' + format_real(r.test.precision) + '\t' +
           format_real(r.test.fpr) + '\t' + format_real(r.test.f1) + '\n';
  }
  return out;
}

std::string inference_jsonl(const std::vector<Inference>& rows) {
  std::string out;
  for (const auto& r : rows)
    out += "{\"id\":" + nlohmann::json(r.id).dump() + ",\"decision\":" +
           std::to_string(to_int(r.decision)) + ",\"t\":" + format_real(r.t) + "}\n";
  return out;
}

}  // namespace clad
