#include "clad/trainer.hpp"

#include <cmath>
#include <numeric>

#include "clad/loss.hpp"
#include "clad/sliding_window.hpp"

namespace clad {

namespace {

// Adam with the usual moment decay rates.
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}

  void begin_step() {
    ++t_;
    c1_ = 1.0 - std::pow(kBeta1, t_);
    c2_ = 1.0 - std::pow(kBeta2, t_);
  }

  template <typename Param>
  void update(std::size_t slot, Param& param, const Param& grad) {
    if (slot >= m_.size()) {
      m_.resize(slot + 1);
      v_.resize(slot + 1);
    }
    auto& m = m_[slot];
    auto& v = v_[slot];
    if (m.size() == 0) {
      m = Eigen::ArrayXXd::Zero(param.rows(), param.cols());
      v = Eigen::ArrayXXd::Zero(param.rows(), param.cols());
    }
    const Eigen::ArrayXXd g = grad.array();
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.square();
    const Eigen::ArrayXXd step = lr_ * (m / c1_) / ((v / c2_).sqrt() + kEps);
    param.array() -= step;
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  double c1_ = 1.0;
  double c2_ = 1.0;
  std::vector<Eigen::ArrayXXd> m_;
  std::vector<Eigen::ArrayXXd> v_;
};

Eigen::MatrixXd gather(const Eigen::MatrixXd& src, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  return out;
}

}  // namespace

Eigen::MatrixXd ProjectionHead::project(const Eigen::MatrixXd& points) const {
  if (points.cols() != d_in())
    throw Error(Errc::DimensionMismatch, "head expects " + std::to_string(d_in()) +
                                             "-dimensional inputs, got " +
                                             std::to_string(points.cols()));
  Eigen::MatrixXd out = points * weights.transpose();
  out.rowwise() += bias.transpose();
  return out;
}

ProjectionHead ProjectionHead::orthonormal(Eigen::Index d_in, Eigen::Index d_out, Rng& rng) {
  if (d_out < 1 || d_out > d_in)
    throw Error(Errc::InvalidConfig, "projection width must lie in [1, d_in]");
  const Eigen::MatrixXd g = rng.normal_matrix(d_in, d_out);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d_in, d_out);
  // sign convention from R's diagonal makes the draw Haar distributed
  const Eigen::MatrixXd r = qr.matrixQR().topRows(d_out).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d_out; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return {q.transpose(), Eigen::VectorXd::Zero(d_out)};
}

ProjectionHead ProjectionHead::identity(Eigen::Index d) {
  return {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
}

EmbeddingDataset project(const EmbeddingDataset& data, const ProjectionHead& head) {
  EmbeddingDataset out{data.ids, data.labels, head.project(data.vectors)};
  return out;
}

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::Mah: return "mah";
    case LossKind::MahMean: return "mah-mean";
    case LossKind::Cosine: return "cosine";
  }
  return "?";
}

LossKind parse_loss(const std::string& name) {
  if (name == "mah") return LossKind::Mah;
  if (name == "mah-mean") return LossKind::MahMean;
  if (name == "cosine") return LossKind::Cosine;
  throw Error(Errc::InvalidConfig, "unknown loss '" + name + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch size must be positive");
  if (window_multiplier < 1) throw Error(Errc::InvalidConfig, "window multiplier must be positive");
  if (!(learning_rate > 0.0)) throw Error(Errc::InvalidConfig, "learning rate must be positive");
  if (epochs < 0) throw Error(Errc::InvalidConfig, "epochs must be nonnegative");
  if (!(ridge >= 0.0)) throw Error(Errc::InvalidConfig, "ridge must be nonnegative");
  if (proj_dim < 0) throw Error(Errc::InvalidConfig, "projection width must be nonnegative");
}

Eigen::Index TrainConfig::projection_width(Eigen::Index d_in) const {
  if (proj_dim > 0) return std::min(proj_dim, d_in);
  return std::clamp<Eigen::Index>(d_in / 2, 1, 64);
}

std::vector<std::vector<TripleIndex>> sample_triples(const EmbeddingDataset& data,
                                                     Eigen::Index batch_size, Rng& rng) {
  if (batch_size < 1) throw Error(Errc::InvalidConfig, "batch size must be positive");
  const auto targets = data.indices(Label::Target);
  const auto negatives = data.indices(Label::NonTarget);
  if (targets.size() < 2 || negatives.empty())
    throw Error(Errc::InsufficientClassData, "need >= 2 target and >= 1 non-target rows (have " +
                                                 std::to_string(targets.size()) + " and " +
                                                 std::to_string(negatives.size()) + ")");
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);

  std::vector<std::vector<TripleIndex>> batches;
  const auto bs = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += bs) {
    std::vector<TripleIndex> batch;
    for (std::size_t k = start; k < std::min(order.size(), start + bs); ++k) {
      const std::size_t a = order[k];
      std::size_t p = static_cast<std::size_t>(rng.below(targets.size() - 1));
      if (p >= a) ++p;
      const std::size_t n = static_cast<std::size_t>(rng.below(negatives.size()));
      batch.push_back({targets[a], targets[p], negatives[n]});
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

GaussianModeld fit_target_model(const EmbeddingDataset& data, const ProjectionHead& head,
                                double ridge) {
  return fit_gaussian(head.project(data.rows(Label::Target)), ridge);
}

TrainResult train(const EmbeddingDataset& data, const TrainConfig& cfg, const TrainObserver& observer) {
  cfg.validate();
  if (data.n_target() < 2 || data.m_non_target() < 1)
    throw Error(Errc::InsufficientClassData, "training needs >= 2 target and >= 1 non-target rows");

  Rng init_rng(cfg.seed, "head-init");
  const Eigen::Index d_out = cfg.projection_width(data.dim());
  TrainResult result{ProjectionHead::orthonormal(data.dim(), d_out, init_rng), {}, {}};
  ProjectionHead& head = result.head;

  // refresh on every push, so a short final batch is folded in as well
  SlidingWindow<double> window(cfg.window_capacity(), 1, d_out, cfg.ridge);
  window.push(head.project(data.rows(Label::Target)));
  window.refresh();

  Rng triple_rng(cfg.seed, "triples");
  Adam adam(cfg.learning_rate);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = sample_triples(data, cfg.batch_size, triple_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<Eigen::Index> ia, ip, in;
      for (const auto& t : batches[b]) {
        ia.push_back(t.anchor);
        ip.push_back(t.positive);
        in.push_back(t.negative);
      }
      const Eigen::MatrixXd xa = gather(data.vectors, ia);
      const Eigen::MatrixXd xp = gather(data.vectors, ip);
      const Eigen::MatrixXd xn = gather(data.vectors, in);
      ContrastBatch batch{head.project(xa), head.project(xp), head.project(xn)};

      window.push(batch.anchor);
      const GaussianModeld& model = window.model();

      LossValue loss;
      switch (cfg.loss) {
        case LossKind::Mah: loss = mah_loss(batch, model); break;
        case LossKind::MahMean: loss = mah_mean_loss(batch.anchor, batch.negative, model); break;
        case LossKind::Cosine: loss = cosine_loss(batch); break;
      }
      if (!std::isfinite(loss.value))
        throw Error(Errc::NonFiniteLoss, "loss became non-finite at epoch " +
                                             std::to_string(epoch) + " batch " + std::to_string(b) +
                                             "; lower the learning rate or raise the ridge");

      Eigen::MatrixXd grad_w = loss.grad_anchor.transpose() * xa;
      Eigen::VectorXd grad_b = loss.grad_anchor.colwise().sum().transpose();
      if (loss.grad_positive.rows() > 0) {
        grad_w += loss.grad_positive.transpose() * xp;
        grad_b += loss.grad_positive.colwise().sum().transpose();
      }
      grad_w += loss.grad_negative.transpose() * xn;
      grad_b += loss.grad_negative.colwise().sum().transpose();

      adam.begin_step();
      adam.update(0, head.weights, grad_w);
      adam.update(1, head.bias, grad_b);
      if (!head.weights.allFinite() || !head.bias.allFinite())
        throw Error(Errc::NonFiniteLoss, "projection head diverged");
      result.log.push_back({epoch, static_cast<int>(b), loss.value});
      if (observer) observer(result.log.back(), head, window);
    }
  }
  result.model = window.model();
  return result;
}

Eigen::VectorXd MlpHead::predict_proba(const Eigen::MatrixXd& points) const {
  if (points.cols() != shift.size())
    throw Error(Errc::DimensionMismatch, "MLP expects " + std::to_string(shift.size()) +
                                             "-dimensional inputs");
  const Eigen::MatrixXd x =
      ((points.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  Eigen::MatrixXd a1 = x * w1.transpose();
  a1.rowwise() += b1.transpose();
  a1 = a1.array().tanh().matrix();
  Eigen::MatrixXd a2 = a1 * w2.transpose();
  a2.rowwise() += b2.transpose();
  a2 = a2.array().tanh().matrix();
  const Eigen::ArrayXd logit = (a2 * w3).array() + b3;
  return (1.0 / (1.0 + (-logit).exp())).matrix();
}

std::vector<Label> MlpHead::predict(const Eigen::MatrixXd& points) const {
  const Eigen::VectorXd p = predict_proba(points);
  std::vector<Label> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[static_cast<std::size_t>(i)] = p[i] > 0.5 ? Label::Target : Label::NonTarget;
  return out;
}

MlpHead train_mlp(const EmbeddingDataset& data, const ProjectionHead& head, const MlpConfig& cfg) {
  if (data.n_target() < 1 || data.m_non_target() < 1)
    throw Error(Errc::InsufficientClassData, "MLP training needs both classes");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw Error(Errc::InvalidConfig, "invalid MLP configuration");

  const Eigen::MatrixXd z = head.project(data.vectors);
  const Eigen::Index in = z.cols();
  const Eigen::Index h1 = cfg.hidden1 > 0 ? cfg.hidden1 : in;
  const Eigen::Index h2 = cfg.hidden2 > 0 ? cfg.hidden2 : std::max<Eigen::Index>(1, in / 2);

  MlpHead mlp;
  mlp.shift = z.colwise().mean().transpose();
  mlp.scale = ((z.rowwise() - mlp.shift.transpose()).array().square().colwise().mean().sqrt())
                  .transpose()
                  .matrix();
  for (Eigen::Index j = 0; j < in; ++j)
    if (!(mlp.scale[j] > 0.0)) mlp.scale[j] = 1.0;

  Rng rng(cfg.seed, "mlp-init");
  mlp.w1 = rng.normal_matrix(h1, in) * std::sqrt(1.0 / double(in));
  mlp.b1 = Eigen::VectorXd::Zero(h1);
  mlp.w2 = rng.normal_matrix(h2, h1) * std::sqrt(1.0 / double(h1));
  mlp.b2 = Eigen::VectorXd::Zero(h2);
  mlp.w3 = rng.normal_vector(h2) * std::sqrt(1.0 / double(h2));
  mlp.b3 = 0.0;

  const Eigen::MatrixXd x =
      ((z.rowwise() - mlp.shift.transpose()).array().rowwise() / mlp.scale.transpose().array()).matrix();
  Eigen::VectorXd y(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i)
    y[i] = data.labels[static_cast<std::size_t>(i)] == Label::Target ? 1.0 : 0.0;

  Rng order_rng(cfg.seed, "mlp-order");
  Adam adam(cfg.learning_rate);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::VectorXd b3(1);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Eigen::Index> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Eigen::MatrixXd xb = gather(x, rows);
      Eigen::VectorXd yb(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t k = 0; k < rows.size(); ++k) yb[static_cast<Eigen::Index>(k)] = y[rows[k]];
      const double inv = 1.0 / double(rows.size());

      Eigen::MatrixXd a1 = xb * mlp.w1.transpose();
      a1.rowwise() += mlp.b1.transpose();
      a1 = a1.array().tanh().matrix();
      Eigen::MatrixXd a2 = a1 * mlp.w2.transpose();
      a2.rowwise() += mlp.b2.transpose();
      a2 = a2.array().tanh().matrix();
      const Eigen::ArrayXd logit = (a2 * mlp.w3).array() + mlp.b3;
      const Eigen::VectorXd p = (1.0 / (1.0 + (-logit).exp())).matrix();

      const Eigen::VectorXd dlogit = (p - yb) * inv;
      const Eigen::VectorXd g_w3 = a2.transpose() * dlogit;
      Eigen::VectorXd g_b3(1);
      g_b3[0] = dlogit.sum();
      const Eigen::MatrixXd dz2 = ((dlogit * mlp.w3.transpose()).array() * (1.0 - a2.array().square())).matrix();
      const Eigen::MatrixXd g_w2 = dz2.transpose() * a1;
      const Eigen::VectorXd g_b2 = dz2.colwise().sum().transpose();
      const Eigen::MatrixXd dz1 = ((dz2 * mlp.w2).array() * (1.0 - a1.array().square())).matrix();
      const Eigen::MatrixXd g_w1 = dz1.transpose() * xb;
      const Eigen::VectorXd g_b1 = dz1.colwise().sum().transpose();

      adam.begin_step();
      adam.update(0, mlp.w1, g_w1);
      adam.update(1, mlp.b1, g_b1);
      adam.update(2, mlp.w2, g_w2);
      adam.update(3, mlp.b2, g_b2);
      adam.update(4, mlp.w3, g_w3);
      b3[0] = mlp.b3;
      adam.update(5, b3, g_b3);
      mlp.b3 = b3[0];
    }
    if (!mlp.w1.allFinite() || !std::isfinite(mlp.b3))
      throw Error(Errc::NonFiniteLoss, "MLP training diverged");
  }
  return mlp;
}

}  // namespace clad
