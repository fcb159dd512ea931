#include "clad/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "clad/rng.hpp"

namespace clad {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error(Errc::Io, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// datasets

void validate_dataset(const EmbeddingDataset& data) {
  if (data.ids.size() != data.labels.size() ||
      static_cast<Eigen::Index>(data.labels.size()) != data.vectors.rows())
    throw Error(Errc::LengthMismatch, "dataset columns differ in length");
  std::unordered_set<std::string> seen;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const auto& id = data.ids[static_cast<std::size_t>(i)];
    if (!seen.insert(id).second) throw Error(Errc::DuplicateId, "duplicate id '" + id + "'");
    if (!data.vectors.row(i).allFinite())
      throw Error(Errc::ParseError, "record '" + id + "' has a non-finite value");
  }
}

EmbeddingDataset parse_dataset(const std::string& text) {
  EmbeddingDataset data;
  std::vector<std::vector<double>> rows;
  std::unordered_set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, where + e.what());
    }
    if (!rec.is_object() || !rec.contains("id") || !rec.contains("label") || !rec.contains("vector"))
      throw Error(Errc::ParseError, where + "record needs id, label and vector");
    if (!rec["id"].is_string()) throw Error(Errc::ParseError, where + "id must be a string");
    const std::string id = rec["id"].get<std::string>();
    const auto& label = rec["label"];
    if (!label.is_number_integer() || (label.get<long long>() != 0 && label.get<long long>() != 1))
      throw Error(Errc::ParseError, where + "label must be 0 or 1 (record '" + id + "')");
    const auto& vec = rec["vector"];
    if (!vec.is_array() || vec.empty())
      throw Error(Errc::ParseError, where + "vector must be a nonempty array (record '" + id + "')");
    std::vector<double> values;
    values.reserve(vec.size());
    for (const auto& v : vec) {
      if (!v.is_number()) throw Error(Errc::ParseError, where + "non-numeric vector entry in '" + id + "'");
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw Error(Errc::ParseError, where + "non-finite value in '" + id + "'");
      values.push_back(x);
    }
    if (rows.empty()) dim = values.size();
    else if (values.size() != dim)
      throw Error(Errc::DimensionMismatch, where + "record '" + id + "' has " +
                                               std::to_string(values.size()) + " values, expected " +
                                               std::to_string(dim));
    if (!seen.insert(id).second) throw Error(Errc::DuplicateId, where + "duplicate id '" + id + "'");
    data.ids.push_back(id);
    data.labels.push_back(label.get<long long>() == 1 ? Label::Target : Label::NonTarget);
    rows.push_back(std::move(values));
  }
  data.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < dim; ++j)
      data.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return data;
}

EmbeddingDataset load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::string format_dataset(const EmbeddingDataset& data) {
  validate_dataset(data);
  std::string out;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out += "{\"id\":";
    out += nlohmann::json(data.ids[static_cast<std::size_t>(i)]).dump();
    out += ",\"label\":";
    out += std::to_string(to_int(data.labels[static_cast<std::size_t>(i)]));
    out += ",\"vector\":[";
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      if (j) out += ',';
      out += format_real(data.vectors(i, j));
    }
    out += "]}\n";
  }
  return out;
}

void save_dataset(const EmbeddingDataset& data, const std::string& path) {
  write_file(path, format_dataset(data));
}

// ---------------------------------------------------------------------------
// splitting

Splits split(const EmbeddingDataset& data, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.dev > 0.0 && ratios.test > 0.0) ||
      std::fabs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9)
    throw Error(Errc::InvalidConfig, "split ratios must be positive and sum to 1");
  Rng rng(seed, "split");
  std::vector<Eigen::Index> train, dev, test;
  for (Label label : {Label::Target, Label::NonTarget}) {
    auto idx = data.indices(label);
    shuffle(idx, rng);
    const double n = double(idx.size());
    const auto n_dev = static_cast<std::size_t>(std::floor(ratios.dev * n + 0.5));
    const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * n + 0.5));
    if (n_dev + n_test > idx.size())
      throw Error(Errc::TooSmallForSplit, "class too small to split");
    dev.insert(dev.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_dev));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_dev),
                idx.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_dev + n_test), idx.end());
  }
  if (train.empty() || dev.empty() || test.empty())
    throw Error(Errc::TooSmallForSplit, "dataset of " + std::to_string(data.size()) +
                                            " records leaves an empty split");
  std::sort(train.begin(), train.end());
  std::sort(dev.begin(), dev.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(dev), data.subset(test)};
}

// ---------------------------------------------------------------------------
// synthetic benchmark

namespace {

Eigen::MatrixXd orthonormal_columns(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rng.normal_matrix(rows, cols));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

Eigen::VectorXd unit_vector(Eigen::Index d, Rng& rng) {
  Eigen::VectorXd v = rng.normal_vector(d);
  return v / v.norm();
}

std::string make_id(char prefix, Eigen::Index i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%07ld", prefix, static_cast<long>(i));
  return buf;
}

constexpr double kNoise = 0.3;

void validate_synth(const SynthConfig& cfg) {
  if (cfg.d_in < 1 || cfg.manifold_dim < 1 || cfg.manifold_dim > cfg.d_in)
    throw Error(Errc::InvalidConfig, "need 1 <= manifold_dim <= d_in");
  if (cfg.n_target < 2 || cfg.m_non_target < 1)
    throw Error(Errc::InvalidConfig, "need n_target >= 2 and m_non_target >= 1");
  if (cfg.components < 2) throw Error(Errc::InvalidConfig, "non-target mixture needs >= 2 components");
  if (!(cfg.separation >= 0.0) || !std::isfinite(cfg.separation))
    throw Error(Errc::InvalidConfig, "separation must be finite and nonnegative");
}

// Target subspace, center and per-axis scales; the first draws of the stream.
struct TargetLayout {
  Eigen::MatrixXd basis;
  Eigen::VectorXd center;
  Eigen::VectorXd scales;
};

TargetLayout draw_layout(const SynthConfig& cfg, Rng& rng) {
  const Eigen::Index m = cfg.manifold_dim;
  TargetLayout t;
  t.basis = orthonormal_columns(cfg.d_in, m, rng);
  t.center = 2.0 * rng.normal_vector(cfg.d_in);
  t.scales.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) t.scales[j] = m > 1 ? 1.0 + double(j) / double(m - 1) : 1.0;
  return t;
}

}  // namespace

SynthMoments synth_target_moments(const SynthConfig& cfg) {
  validate_synth(cfg);
  Rng rng(cfg.seed, "synth");
  const TargetLayout t = draw_layout(cfg, rng);
  SynthMoments out;
  out.mean = t.center;
  out.cov = t.basis * t.scales.array().square().matrix().asDiagonal() * t.basis.transpose();
  out.cov.diagonal().array() += kNoise * kNoise;
  return out;
}

EmbeddingDataset synth_benchmark(const SynthConfig& cfg) {
  validate_synth(cfg);
  const Eigen::Index d = cfg.d_in;
  const Eigen::Index m = cfg.manifold_dim;

  Rng rng(cfg.seed, "synth");
  const TargetLayout layout = draw_layout(cfg, rng);
  const Eigen::MatrixXd& basis = layout.basis;
  const Eigen::VectorXd& center = layout.center;
  const Eigen::VectorXd& scales = layout.scales;

  struct Component {
    Eigen::VectorXd mean;
    Eigen::VectorXd in_scale;  // spread along the target subspace
    double noise;              // isotropic spread
  };
  std::vector<Component> comps;
  for (Eigen::Index c = 0; c < cfg.components; ++c) {
    Component comp;
    if (c % 2 == 0) {
      // shares the target subspace, shifted within it by `separation` target deviations
      const Eigen::VectorXd dir = unit_vector(m, rng);
      comp.mean = center + basis * (cfg.separation * scales.cwiseProduct(dir));
      comp.in_scale = scales * rng.uniform(0.7, 1.3);
      comp.noise = kNoise * rng.uniform(1.0, 1.5);
    } else {
      // full-dimensional, shifted off the subspace
      comp.mean = center + 2.0 * cfg.separation * kNoise * unit_vector(d, rng);
      comp.in_scale = scales * rng.uniform(0.5, 1.5);
      comp.noise = kNoise * rng.uniform(0.8, 1.2);
    }
    comps.push_back(std::move(comp));
  }
  const Eigen::VectorXd background_center = center + cfg.separation * kNoise * unit_vector(d, rng);
  const double background_half_width = std::sqrt(3.0) * kNoise;

  EmbeddingDataset data;
  data.vectors.resize(cfg.n_target + cfg.m_non_target, d);
  for (Eigen::Index i = 0; i < cfg.n_target; ++i) {
    const Eigen::VectorXd z = rng.normal_vector(m);
    data.vectors.row(i) = (center + basis * scales.cwiseProduct(z) + kNoise * rng.normal_vector(d)).transpose();
    data.ids.push_back(make_id('t', i));
    data.labels.push_back(Label::Target);
  }

  // 10% background, the rest spread evenly over the components
  const Eigen::Index n_background = cfg.m_non_target / 10;
  const Eigen::Index n_mixture = cfg.m_non_target - n_background;
  for (Eigen::Index i = 0; i < cfg.m_non_target; ++i) {
    Eigen::VectorXd x;
    if (i < n_mixture) {
      const Component& comp = comps[static_cast<std::size_t>(i % cfg.components)];
      x = comp.mean + basis * comp.in_scale.cwiseProduct(rng.normal_vector(m)) +
          comp.noise * rng.normal_vector(d);
    } else {
      x.resize(d);
      for (Eigen::Index j = 0; j < d; ++j)
        x[j] = background_center[j] + rng.uniform(-background_half_width, background_half_width);
    }
    const Eigen::Index row = cfg.n_target + i;
    data.vectors.row(row) = x.transpose();
    data.ids.push_back(make_id('n', i));
    data.labels.push_back(Label::NonTarget);
  }
  return data;
}

// ---------------------------------------------------------------------------
// model artifact

namespace {

constexpr const char* kMagic = "clad-model";

void put_scalar(std::string& out, const char* key, const std::string& value) {
  out += key;
  out += ' ';
  out += value;
  out += '\n';
}

template <typename Derived>
void put_values(std::string& out, const char* key, const Eigen::DenseBase<Derived>& values) {
  out += key;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    out += ' ';
    out += format_real(values.derived().coeff(i));
  }
  out += '\n';
}

Eigen::VectorXd row_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[k++] = m(i, j);
  return out;
}

Eigen::MatrixXd from_row_major(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[k++];
  return m;
}

class ArtifactReader {
 public:
  explicit ArtifactReader(const std::string& text) : in_(text) {}

  // Next line split into key and value tokens; the key must match.
  std::vector<std::string> expect(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line))
      throw Error(Errc::ParseError, "line " + std::to_string(line_no_ + 1) +
                                        ": unexpected end of file, expected '" + key + "'");
    ++line_no_;
    std::istringstream ls(line);
    std::string got;
    ls >> got;
    if (got != key)
      throw Error(Errc::ParseError, "line " + std::to_string(line_no_) + ": expected '" + key +
                                        "', found '" + got + "'");
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    return tokens;
  }

  std::string text(const std::string& key) {
    const auto t = expect(key);
    if (t.size() != 1) fail("'" + key + "' takes one value");
    return t[0];
  }

  long long integer(const std::string& key) {
    const std::string s = text(key);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') fail("'" + key + "' is not an integer");
    return v;
  }

  double real(const std::string& key) {
    const auto v = reals(key, 1);
    return v[0];
  }

  Eigen::VectorXd reals(const std::string& key, Eigen::Index count) {
    const auto t = expect(key);
    if (static_cast<Eigen::Index>(t.size()) != count)
      fail("'" + key + "' has " + std::to_string(t.size()) + " values, expected " +
           std::to_string(count));
    Eigen::VectorXd out(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const std::string& s = t[static_cast<std::size_t>(i)];
      char* end = nullptr;
      out[i] = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0' || !std::isfinite(out[i]))
        fail("'" + key + "' has a malformed number '" + s + "'");
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::ParseError, "line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istringstream in_;
  std::size_t line_no_ = 0;
};

}  // namespace

std::string format_model(const ModelArtifact& a) {
  const Eigen::Index d_in = a.head.d_in();
  const Eigen::Index d_out = a.head.d_out();
  if (a.model.dim() != d_out)
    throw Error(Errc::DimensionMismatch, "model dimension does not match head output");
  std::string out;
  out += kMagic;
  out += '\n';
  put_scalar(out, "version", std::to_string(kArtifactVersion));
  put_scalar(out, "seed", std::to_string(a.seed));
  put_scalar(out, "config_hash", a.config_hash.empty() ? "-" : a.config_hash);
  put_scalar(out, "d_in", std::to_string(d_in));
  put_scalar(out, "d_out", std::to_string(d_out));
  put_values(out, "projection_weights", row_major(a.head.weights));
  put_values(out, "projection_bias", a.head.bias);
  put_scalar(out, "gaussian_n", std::to_string(a.model.n));
  put_scalar(out, "gaussian_ridge", format_real(a.model.ridge));
  put_values(out, "gaussian_mean", a.model.mean);
  put_values(out, "gaussian_cov_lower", lower_triangle(a.model.cov));
  put_scalar(out, "threshold_beta_level", format_real(a.threshold.beta_level));
  put_scalar(out, "threshold_a", format_real(a.threshold.params.a));
  put_scalar(out, "threshold_b", format_real(a.threshold.params.b));
  put_scalar(out, "threshold_v_beta", format_real(a.threshold.v_beta));
  put_scalar(out, "decision", a.mlp ? "mlp" : "beta");
  if (a.mlp) {
    const MlpHead& m = *a.mlp;
    put_scalar(out, "mlp_hidden1", std::to_string(m.w1.rows()));
    put_scalar(out, "mlp_hidden2", std::to_string(m.w2.rows()));
    put_values(out, "mlp_shift", m.shift);
    put_values(out, "mlp_scale", m.scale);
    put_values(out, "mlp_w1", row_major(m.w1));
    put_values(out, "mlp_b1", m.b1);
    put_values(out, "mlp_w2", row_major(m.w2));
    put_values(out, "mlp_b2", m.b2);
    put_values(out, "mlp_w3", m.w3);
    put_scalar(out, "mlp_b3", format_real(m.b3));
  }
  out += "end\n";
  return out;
}

ModelArtifact parse_model(const std::string& text) {
  ArtifactReader r(text);
  r.expect(kMagic);
  const long long version = r.integer("version");
  if (version != kArtifactVersion)
    throw Error(Errc::VersionMismatch, "model artifact version " + std::to_string(version) +
                                           " is not supported (this build reads version " +
                                           std::to_string(kArtifactVersion) + ")");
  ModelArtifact a;
  const std::string seed = r.text("seed");
  char* end = nullptr;
  a.seed = std::strtoull(seed.c_str(), &end, 10);
  if (end == seed.c_str() || *end != '\0') r.fail("'seed' is not an integer");
  a.config_hash = r.text("config_hash");
  if (a.config_hash == "-") a.config_hash.clear();
  const long long d_in = r.integer("d_in");
  const long long d_out = r.integer("d_out");
  if (d_in < 1 || d_out < 1 || d_out > d_in) r.fail("invalid dimensions");
  a.head.weights = from_row_major(r.reals("projection_weights", d_in * d_out), d_out, d_in);
  a.head.bias = r.reals("projection_bias", d_out);
  const long long n = r.integer("gaussian_n");
  const double ridge = r.real("gaussian_ridge");
  Eigen::VectorXd mean = r.reals("gaussian_mean", d_out);
  Eigen::MatrixXd cov = from_lower_triangle(r.reals("gaussian_cov_lower", d_out * (d_out + 1) / 2), d_out);
  a.model = make_gaussian<double>(std::move(mean), std::move(cov), n, ridge);
  a.threshold.beta_level = r.real("threshold_beta_level");
  a.threshold.params.a = r.real("threshold_a");
  a.threshold.params.b = r.real("threshold_b");
  a.threshold.v_beta = r.real("threshold_v_beta");
  const std::string decision = r.text("decision");
  if (decision == "mlp") {
    MlpHead m;
    const long long h1 = r.integer("mlp_hidden1");
    const long long h2 = r.integer("mlp_hidden2");
    if (h1 < 1 || h2 < 1) r.fail("invalid MLP widths");
    m.shift = r.reals("mlp_shift", d_out);
    m.scale = r.reals("mlp_scale", d_out);
    m.w1 = from_row_major(r.reals("mlp_w1", h1 * d_out), h1, d_out);
    m.b1 = r.reals("mlp_b1", h1);
    m.w2 = from_row_major(r.reals("mlp_w2", h2 * h1), h2, h1);
    m.b2 = r.reals("mlp_b2", h2);
    m.w3 = r.reals("mlp_w3", h2);
    m.b3 = r.real("mlp_b3");
    a.mlp = std::move(m);
  } else if (decision != "beta") {
    r.fail("decision must be 'beta' or 'mlp'");
  }
  r.expect("end");
  return a;
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  write_file(path, format_model(artifact));
}

ModelArtifact load_model(const std::string& path) { return parse_model(read_file(path)); }

std::string describe(const TrainConfig& cfg) {
  return std::string("loss=") + loss_name(cfg.loss) + " batch_size=" + std::to_string(cfg.batch_size) +
         " window_mult=" + std::to_string(cfg.window_multiplier) + " lr=" + format_real(cfg.learning_rate) +
         " epochs=" + std::to_string(cfg.epochs) + " ridge=" + format_real(cfg.ridge) +
         " proj_dim=" + std::to_string(cfg.proj_dim) + " seed=" + std::to_string(cfg.seed);
}

std::string hash_hex(const std::string& text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string format_train_log(const std::vector<TrainLogRecord>& log) {
  std::string out;
  for (const auto& r : log)
    out += "{\"epoch\":" + std::to_string(r.epoch) + ",\"batch\":" + std::to_string(r.batch) +
           ",\"loss\":" + format_real(r.loss) + "}\n";
  return out;
}

}  // namespace clad
