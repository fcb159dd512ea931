#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "clad/data.hpp"
#include "clad/diagnostics.hpp"
#include "clad/error.hpp"
#include "clad/pipeline.hpp"

namespace {

using namespace clad;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct RunConfig {
  std::string input;
  std::string output;
  std::string model;
  std::string log;
  std::string split_part;  // empty selects the subcommand default
  std::string loss = "mah-mean";
  std::string decision = "beta";
  std::optional<double> beta_level;
  std::string calibrate = "f1";
  double fpr_cap = 0.05;
  bool refit_all = false;
  TrainConfig train;
  MlpConfig mlp;
  SynthConfig synth;
  Eigen::Index k = 3;
  std::uint64_t seed = 0;
};

struct Commands {
  CLI::App* synth;
  CLI::App* train;
  CLI::App* calibrate;
  CLI::App* infer;
  CLI::App* evaluate;
  CLI::App* diagnose;
  CLI::App* ablate;
};

void add_seed(CLI::App* sub, RunConfig& c) {
  sub->add_option("--seed", c.seed, "root seed for every random stream");
}

void add_training(CLI::App* sub, RunConfig& c) {
  sub->add_option("--loss", c.loss, "training loss")->check(CLI::IsMember({"mah", "mah-mean", "cosine"}));
  sub->add_option("--batch-size", c.train.batch_size, "triples per optimizer step");
  sub->add_option("--window-mult", c.train.window_multiplier, "window capacity in batches");
  sub->add_option("--epochs", c.train.epochs, "passes over the target class");
  sub->add_option("--lr", c.train.learning_rate, "Adam step size");
  sub->add_option("--ridge", c.train.ridge, "diagonal loading of the covariance");
  sub->add_option("--proj-dim", c.train.proj_dim, "projection width (0 picks min(64, d/2))");
  sub->add_flag("--refit-all", c.refit_all, "fit inference statistics on all training targets");
  sub->add_option("--mlp-epochs", c.mlp.epochs, "epochs for the MLP decision head");
}

void add_threshold(CLI::App* sub, RunConfig& c) {
  sub->add_option("--beta-level", c.beta_level, "fixed quantile level in (0, 1) instead of calibration")
      ->check(CLI::Validator(
          [](std::string& v) {
            double x = 0.0;
            try {
              x = std::stod(v);
            } catch (const std::exception&) {
              return std::string("not a number: ") + v;
            }
            return x > 0.0 && x < 1.0 ? std::string() : std::string("must lie strictly between 0 and 1");
          },
          "(0, 1)"));
  sub->add_option("--calibrate", c.calibrate, "calibration objective on the dev split")
      ->check(CLI::IsMember({"f1", "f1-fpr-cap"}));
  sub->add_option("--fpr-cap", c.fpr_cap, "false positive ceiling for f1-fpr-cap")->check(CLI::Range(0.0, 1.0));
}

void add_split(CLI::App* sub, RunConfig& c, const std::string& fallback) {
  sub->add_option("--split", c.split_part, "rows of --input to use, split under --seed (default " + fallback + ")")
      ->check(CLI::IsMember({"all", "train", "dev", "test"}));
}

Commands build(CLI::App& app, RunConfig& c) {
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", "key=value file; command-line flags take precedence");
  Commands cmd{};

  cmd.synth = app.add_subcommand("synth", "write a synthetic benchmark dataset");
  cmd.synth->add_option("--output", c.output, "dataset file")->required();
  cmd.synth->add_option("--n-target", c.synth.n_target, "target records");
  cmd.synth->add_option("--m-non-target", c.synth.m_non_target, "non-target records");
  cmd.synth->add_option("--d-in", c.synth.d_in, "embedding dimension");
  cmd.synth->add_option("--manifold-dim", c.synth.manifold_dim, "dimension of the target subspace");
  cmd.synth->add_option("--components", c.synth.components, "non-target mixture components");
  cmd.synth->add_option("--separation", c.synth.separation, "distance scale between classes");
  add_seed(cmd.synth, c);

  cmd.train = app.add_subcommand("train", "split, train, calibrate and save a model");
  cmd.train->add_option("--input", c.input, "dataset file")->required();
  cmd.train->add_option("--output", c.output, "model file")->required();
  cmd.train->add_option("--decision", c.decision, "decision head")->check(CLI::IsMember({"beta", "mlp"}));
  cmd.train->add_option("--log", c.log, "training loss log (JSON lines)");
  add_training(cmd.train, c);
  add_threshold(cmd.train, c);
  add_seed(cmd.train, c);

  cmd.calibrate = app.add_subcommand("calibrate", "recompute a model's threshold");
  cmd.calibrate->add_option("--model", c.model, "model file")->required();
  cmd.calibrate->add_option("--input", c.input, "dataset file")->required();
  cmd.calibrate->add_option("--output", c.output, "model file to write")->required();
  add_split(cmd.calibrate, c, "dev");
  add_threshold(cmd.calibrate, c);
  add_seed(cmd.calibrate, c);

  cmd.infer = app.add_subcommand("infer", "per-record decisions and statistics");
  cmd.infer->add_option("--model", c.model, "model file")->required();
  cmd.infer->add_option("--input", c.input, "dataset file")->required();
  cmd.infer->add_option("--output", c.output, "JSON lines file (default stdout)");
  add_split(cmd.infer, c, "all");
  add_seed(cmd.infer, c);

  cmd.evaluate = app.add_subcommand("evaluate", "metrics of a model on labeled data");
  cmd.evaluate->add_option("--model", c.model, "model file")->required();
  cmd.evaluate->add_option("--input", c.input, "dataset file")->required();
  cmd.evaluate->add_option("--output", c.output, "report file (default stdout)");
  add_split(cmd.evaluate, c, "all");
  add_seed(cmd.evaluate, c);

  cmd.diagnose = app.add_subcommand("diagnose", "normality, Q-Q and distance reports");
  cmd.diagnose->add_option("--input", c.input, "dataset file")->required();
  cmd.diagnose->add_option("--model", c.model, "model file (default: identity head, target fit)");
  cmd.diagnose->add_option("--output", c.output, "directory for the report files")->required();
  cmd.diagnose->add_option("--k", c.k, "principal components for the normality tests");
  cmd.diagnose->add_option("--ridge", c.train.ridge, "ridge for the fallback target fit");
  add_seed(cmd.diagnose, c);

  cmd.ablate = app.add_subcommand("ablate", "loss x decision-head comparison on the test split");
  cmd.ablate->add_option("--input", c.input, "dataset file")->required();
  cmd.ablate->add_option("--output", c.output, "table file (default stdout)");
  add_training(cmd.ablate, c);
  add_threshold(cmd.ablate, c);
  add_seed(cmd.ablate, c);
  return cmd;
}

// ---------------------------------------------------------------------------
// Config file: `key = value` per line, `#` starts a comment. Keys are the
// long flag names of the chosen subcommand without the leading dashes.

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::InvalidConfig, std::string("config file: ") + e.what());
  }
  std::istringstream in(text);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::InvalidConfig, path + ":" + std::to_string(line_no) + ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::optional<std::string> find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

// Places config values directly after the subcommand name so that any flag
// given on the command line comes later and wins.
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& path) {
  RunConfig scratch;
  CLI::App probe;
  build(probe, scratch);
  std::size_t at = 1;
  while (at < args.size() && !probe.get_subcommand_no_throw(args[at])) ++at;
  if (at == args.size()) return args;
  CLI::App* sub = probe.get_subcommand(args[at]);

  std::vector<std::string> merged = {args[0], args[at]};
  for (const auto& [key, value] : read_config(path)) {
    if (key == "config" || !sub->get_option_no_throw("--" + key))
      throw Error(Errc::InvalidConfig, "unknown config key '" + key + "' for " + sub->get_name());
    merged.push_back("--" + key + "=" + value);
  }
  // --config may sit anywhere on the line; it has been consumed here
  std::ptrdiff_t front = 1;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (i == at) continue;
    if (args[i] == "--config") {
      ++i;
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) continue;
    if (i > at) merged.push_back(args[i]);
    else merged.insert(merged.begin() + front++, args[i]);
  }
  return merged;
}

// ---------------------------------------------------------------------------

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) std::cout << text;
  else write_file(path, text);
}

EmbeddingDataset select_rows(const RunConfig& c, const std::string& fallback) {
  const std::string part = c.split_part.empty() ? fallback : c.split_part;
  EmbeddingDataset data = load_dataset(c.input);
  if (part == "all") return data;
  Splits s = split(data, {}, c.seed);
  if (part == "train") return std::move(s.train);
  if (part == "dev") return std::move(s.dev);
  return std::move(s.test);
}

CalibrationOptions calibration_of(const RunConfig& c) {
  CalibrationOptions o;
  o.objective = c.calibrate == "f1" ? CalibrationObjective::MaxF1 : CalibrationObjective::MaxF1AtFprCap;
  o.fpr_cap = c.fpr_cap;
  return o;
}

PipelineOptions pipeline_of(const RunConfig& c) {
  PipelineOptions o;
  o.train = c.train;
  o.train.loss = parse_loss(c.loss);
  o.train.seed = c.seed;
  o.train.validate();
  o.calibration = calibration_of(c);
  o.beta_level = c.beta_level;
  o.refit_all = c.refit_all;
  o.mlp_decision = c.decision == "mlp";
  o.mlp = c.mlp;
  return o;
}

int cmd_synth(RunConfig c) {
  c.synth.seed = c.seed;
  const EmbeddingDataset data = synth_benchmark(c.synth);
  save_dataset(data, c.output);
  std::cout << "records=" << data.size() << "\ntargets=" << data.n_target()
            << "\nnon_targets=" << data.m_non_target() << "\ndim=" << data.dim() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& c) {
  const PipelineOptions opts = pipeline_of(c);
  const Splits splits = split(load_dataset(c.input), {}, c.seed);
  const PipelineResult r = run_pipeline(splits, opts);
  save_model(r.artifact, c.output);
  if (!c.log.empty()) write_file(c.log, format_train_log(r.log));
  std::cout << r.dev.to_text();
  return kExitOk;
}

int cmd_calibrate(const RunConfig& c) {
  ModelArtifact a = load_model(c.model);
  const EmbeddingDataset dev = select_rows(c, "dev");
  const BetaParams params = decision_params(a.model.n, a.model.dim());
  a.threshold = c.beta_level ? make_threshold(params, *c.beta_level)
                             : calibrate(a.model, project(dev, a.head), calibration_of(c));
  save_model(a, c.output);
  std::cout << "v_beta=" << format_real(a.threshold.v_beta) << "\nbeta_level="
            << format_real(a.threshold.beta_level) << '\n'
            << evaluate(a, dev).to_text();
  return kExitOk;
}

int cmd_infer(const RunConfig& c) {
  emit(c.output, inference_jsonl(infer(load_model(c.model), select_rows(c, "all"))));
  return kExitOk;
}

int cmd_evaluate(const RunConfig& c) {
  emit(c.output, evaluate(load_model(c.model), select_rows(c, "all")).to_text());
  return kExitOk;
}

int cmd_diagnose(const RunConfig& c) {
  const EmbeddingDataset data = load_dataset(c.input);
  ProjectionHead head = ProjectionHead::identity(data.dim());
  GaussianModeld model;
  if (!c.model.empty()) {
    ModelArtifact a = load_model(c.model);
    head = std::move(a.head);
    model = std::move(a.model);
  } else {
    model = fit_target_model(data, head, c.train.ridge);
  }
  const std::filesystem::path dir(c.output);
  std::filesystem::create_directories(dir);

  std::string normality;
  for (const auto& r : normality_report(data, head, c.k)) normality += to_jsonl(r);
  write_file((dir / "normality.jsonl").string(), normality);

  // Q-Q of each class along its leading principal direction
  const EmbeddingDataset z = project(data, head);
  for (Label l : {Label::Target, Label::NonTarget}) {
    const Eigen::VectorXd lead = pca_reduce(z.rows(l), 1).reduced.col(0);
    const std::vector<double> sample(lead.data(), lead.data() + lead.size());
    const char* name = l == Label::Target ? "qq_target.tsv" : "qq_non_target.tsv";
    write_file((dir / name).string(), qq_tsv(emit_qq(sample)));
  }
  write_file((dir / "distances.tsv").string(), distance_tsv(emit_distance_report(data, head, model)));
  std::cout << normality;
  return kExitOk;
}

int cmd_ablate(const RunConfig& c) {
  const PipelineOptions opts = pipeline_of(c);
  const Splits splits = split(load_dataset(c.input), {}, c.seed);
  emit(c.output, ablation_tsv(run_ablation(splits, opts)));
  return kExitOk;
}

int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Config: return kExitUsage;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

int run(std::vector<std::string> args) {
  if (const auto path = find_config(args)) args = merge_config(args, *path);

  RunConfig c;
  CLI::App app("Class distillation with a Mahalanobis decision rule", "clad");
  const Commands cmd = build(app, c);
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (app.got_subcommand(cmd.synth)) return cmd_synth(c);
  if (app.got_subcommand(cmd.train)) return cmd_train(c);
  if (app.got_subcommand(cmd.calibrate)) return cmd_calibrate(c);
  if (app.got_subcommand(cmd.infer)) return cmd_infer(c);
  if (app.got_subcommand(cmd.evaluate)) return cmd_evaluate(c);
  if (app.got_subcommand(cmd.diagnose)) return cmd_diagnose(c);
  return cmd_ablate(c);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv, argv + argc));
  } catch (const clad::Error& e) {
    std::cerr << "clad: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "clad: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "clad: " << e.what() << '\n';
    return kExitNumerical;
  }
}
