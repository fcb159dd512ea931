#include "clad/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "clad/mahalanobis.hpp"

namespace clad {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::OutOfDomain, "normal quantile needs p in (0, 1)");
  // rational approximation (Acklam), then one Halley step on the exact CDF
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

PcaResult pca_reduce(const Eigen::MatrixXd& points, Eigen::Index k) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2) throw Error(Errc::InsufficientSamples, "PCA needs at least 2 points");
  if (k < 1 || k > std::min(d, n - 1))
    throw Error(Errc::InsufficientSamples, "PCA target dimension " + std::to_string(k) +
                                               " exceeds min(d, n-1) = " +
                                               std::to_string(std::min(d, n - 1)));
  PcaResult out;
  out.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - out.mean.transpose();
  const Eigen::MatrixXd cov = centered.adjoint() * centered / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // eigenvalues ascend; walk from the top
  const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.sum();
  const double rank_tol = std::max(1.0, values[0]) * double(d) * 1e-12;

  out.components = Eigen::MatrixXd::Zero(d, k);
  out.explained_ratio = Eigen::VectorXd::Zero(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (values[j] <= rank_tol) {
      out.rank_deficient = true;
      continue;
    }
    Eigen::VectorXd v = vectors.col(j);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    out.components.col(j) = v;
    out.explained_ratio[j] = total > 0.0 ? values[j] / total : 0.0;
  }
  out.reduced = centered * out.components;
  return out;
}

double henze_zirkler(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n <= d) throw Error(Errc::SingularCovariance, "HZ needs more points than dimensions");
  const Eigen::VectorXd mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.adjoint() * centered / double(n);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(Errc::SingularCovariance, "sample covariance is singular");
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  if (diag.minCoeff() <= 1e-10 * diag.maxCoeff())
    throw Error(Errc::SingularCovariance, "sample covariance is numerically singular");

  // whitened rows: z_i = L⁻¹ (x_i - mean)
  const Eigen::MatrixXd z = llt.matrixL().solve(centered.transpose()).transpose();
  const double dd = double(d);
  const double nn = double(n);
  const double beta = std::pow(nn * (2.0 * dd + 1.0) / 4.0, 1.0 / (dd + 4.0)) / std::numbers::sqrt2;
  const double b2 = beta * beta;

  const Eigen::VectorXd sq = z.rowwise().squaredNorm();
  double pair_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pair_sum += 1.0;  // j == i
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dij = sq[i] + sq[j] - 2.0 * z.row(i).dot(z.row(j));
      pair_sum += 2.0 * std::exp(-0.5 * b2 * std::max(dij, 0.0));
    }
  }
  double center_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) center_sum += std::exp(-b2 * sq[i] / (2.0 * (1.0 + b2)));

  return pair_sum / nn - 2.0 * std::pow(1.0 + b2, -dd / 2.0) * center_sum +
         nn * std::pow(1.0 + 2.0 * b2, -dd / 2.0);
}

double anderson_darling_from_probabilities(std::vector<double> p) {
  const std::size_t n = p.size();
  if (n < 1) throw Error(Errc::InsufficientSamples, "AD needs at least one value");
  std::sort(p.begin(), p.end());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    s += double(2 * i + 1) * (std::log(p[i]) + std::log1p(-p[n - 1 - i]));
  return -double(n) - s / double(n);
}

double anderson_darling(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(Errc::InsufficientSamples, "AD needs at least 2 samples");
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / double(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / double(n - 1));
  if (!(sd > 0.0)) throw Error(Errc::ZeroVariance, "sample has zero variance");

  std::vector<double> z(samples);
  for (double& v : z) v = (v - mean) / sd;
  std::sort(z.begin(), z.end());
  // log-CDF via erfc keeps the far tails finite
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double log_p = std::log(0.5 * std::erfc(-z[i] / std::numbers::sqrt2));
    const double log_q = std::log(0.5 * std::erfc(z[n - 1 - i] / std::numbers::sqrt2));
    s += double(2 * i + 1) * (log_p + log_q);
  }
  return -double(n) - s / double(n);
}

double NormalityReport::mean_ad() const {
  if (ad_per_dim.empty()) return 0.0;
  return std::accumulate(ad_per_dim.begin(), ad_per_dim.end(), 0.0) / double(ad_per_dim.size());
}

std::vector<NormalityReport> normality_report(const EmbeddingDataset& data,
                                              const ProjectionHead& head, Eigen::Index k) {
  std::vector<NormalityReport> out;
  for (Label label : {Label::Target, Label::NonTarget}) {
    const Eigen::MatrixXd rows = data.rows(label);
    if (rows.rows() <= k)
      throw Error(Errc::InsufficientSamples, "class " + std::to_string(to_int(label)) + " has " +
                                                 std::to_string(rows.rows()) +
                                                 " samples; need more than k = " + std::to_string(k));
    const PcaResult pca = pca_reduce(head.project(rows), k);
    NormalityReport r;
    r.label = label;
    r.n = rows.rows();
    r.k = k;
    r.hz = henze_zirkler(pca.reduced);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::VectorXd col = pca.reduced.col(j);
      r.ad_per_dim.push_back(anderson_darling(std::vector<double>(col.data(), col.data() + col.size())));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::pair<double, double>> emit_qq(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw Error(Errc::InsufficientSamples, "Q-Q data needs at least 2 samples");
  std::vector<double> z(samples);
  std::sort(z.begin(), z.end());
  if (!(z.front() < z.back())) throw Error(Errc::ZeroVariance, "sample has zero variance");
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.emplace_back(normal_quantile((double(i) + 0.5) / double(n)), z[i]);
  return out;
}

std::vector<DistanceRecord> emit_distance_report(const EmbeddingDataset& data,
                                                 const ProjectionHead& head,
                                                 const GaussianModeld& model) {
  const Eigen::MatrixXd z = head.project(data.vectors);
  if (z.cols() != model.dim())
    throw Error(Errc::DimensionMismatch, "head output width does not match model dimension");
  std::vector<DistanceRecord> out;
  out.reserve(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out.push_back({data.ids[static_cast<std::size_t>(i)], data.labels[static_cast<std::size_t>(i)],
                   sq_mahalanobis(model, z.row(i).transpose())});
  std::stable_sort(out.begin(), out.end(),
                   [](const DistanceRecord& a, const DistanceRecord& b) { return a.id < b.id; });
  return out;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_jsonl(const NormalityReport& report) {
  std::string s = "{\"label\":" + std::to_string(to_int(report.label)) +
                  ",\"n\":" + std::to_string(report.n) + ",\"k\":" + std::to_string(report.k) +
                  ",\"hz\":" + num(report.hz) + ",\"ad\":[";
  for (std::size_t i = 0; i < report.ad_per_dim.size(); ++i) {
    if (i) s += ',';
    s += num(report.ad_per_dim[i]);
  }
  s += "]}\n";
  return s;
}

std::string qq_tsv(const std::vector<std::pair<double, double>>& pairs) {
  std::string s = "theoretical\tsample\n";
  for (const auto& [t, q] : pairs) s += num(t) + '\t' + num(q) + '\n';
  return s;
}

std::string distance_tsv(const std::vector<DistanceRecord>& records) {
  std::string s = "id\tlabel\td2\n";
  for (const auto& r : records) s += r.id + '\t' + std::to_string(to_int(r.label)) + '\t' + num(r.d2) + '\n';
  return s;
}

}  // namespace clad
