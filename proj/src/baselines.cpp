#include "clickseq/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clickseq {
namespace {

void check_binary(std::span<const int> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw Error(ErrorKind::invalid_argument, "features and labels differ in length");
  }
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y == 0) has0 = true;
    else if (y == 1) has1 = true;
    else throw Error(ErrorKind::invalid_argument, "label must be 0 or 1");
  }
  if (!has0 || !has1) throw Error(ErrorKind::invalid_argument, "training data has a single class");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.stddev.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - s.mean(j)).square().sum() / std::max(n, 1.0);
    s.stddev(j) = std::max(std::sqrt(var), 1e-12);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorKind::invalid_argument, "feature width differs from the scaler");
  Matrix z = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) z.col(j) = (x.col(j).array() - mean(j)) / stddev(j);
  return z;
}

std::string_view to_string(LinearFeature kind) { return kind == LinearFeature::length ? "length" : "counts"; }

Vector LinearModel::margins(const Matrix& raw) const {
  const Matrix z = scaler.apply(raw);
  return (z * w).array() + b;
}

double svm_objective(const Vector& w, double b, const Matrix& z, std::span<const int> labels, double lambda) {
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * (z.row(i).dot(w) + b));
  }
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(z.rows());
}

LinearModel linear_svm_train(const Matrix& features, std::span<const int> labels, LinearFeature kind,
                             const SvmConfig& cfg) {
  check_binary(labels, features.rows());
  if (!(cfg.lambda > 0.0)) throw Error(ErrorKind::invalid_argument, "svm lambda must be positive");
  LinearModel model;
  model.feature_kind = kind;
  model.scaler = Standardizer::fit(features);
  const Matrix z = model.scaler.apply(features);
  const auto n = static_cast<std::size_t>(z.rows());
  const auto d = z.cols();

  // Initial step of 0.5, then 1/(lambda t) asymptotically.
  const double t0 = 1.0 / (cfg.lambda * 0.5);
  Vector w = Vector::Zero(d);
  double b = 0.0;
  Vector w_avg = Vector::Zero(d);
  double b_avg = 0.0;
  long averaged = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0x5F));
  double t = 0.0;
  const int burn_in = std::max(1, cfg.epochs / 2);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const double eta = 1.0 / (cfg.lambda * (t + t0));
      const double y = labels[i] ? 1.0 : -1.0;
      const double margin = y * (z.row(static_cast<Eigen::Index>(i)).dot(w) + b);
      w *= (1.0 - eta * cfg.lambda);
      if (margin < 1.0) {
        w.noalias() += (eta * y) * z.row(static_cast<Eigen::Index>(i)).transpose();
        b += eta * y;
      }
      t += 1.0;
      if (epoch >= burn_in || cfg.epochs == 1) {
        ++averaged;
        const double mu = 1.0 / static_cast<double>(averaged);
        w_avg += mu * (w - w_avg);
        b_avg += mu * (b - b_avg);
      }
    }
  }
  model.w = averaged ? w_avg : w;
  model.b = averaged ? b_avg : b;
  if (!model.w.allFinite() || !std::isfinite(model.b)) throw Error(ErrorKind::numeric, "SVM training diverged");
  return model;
}

MlpParams::MlpParams(int input_dim, int hidden) : input_(input_dim), hidden_(hidden) {
  if (input_dim < 1 || hidden < 1) throw Error(ErrorKind::invalid_argument, "bad MLP shape");
  flat_ = Vector::Zero(static_cast<Eigen::Index>(hidden) * input_dim + 2L * hidden + 1);
}

Vector MlpParams::predict_proba(const Matrix& raw) const {
  const Matrix z = scaler.apply(raw);
  Vector out(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Vector a = (w1() * z.row(i).transpose() + b1()).cwiseMax(0.0);
    out(i) = sigmoid(w2().dot(a) + b2());
  }
  return out;
}

double mlp_loss(const MlpParams& params, const Matrix& z, std::span<const int> labels, Vector* grad) {
  if (z.cols() != params.input_dim()) throw Error(ErrorKind::invalid_argument, "MLP input width mismatch");
  const int hm = params.hidden();
  const auto d = params.input_dim();
  if (grad) *grad = Vector::Zero(params.flat().size());
  double total = 0.0;
  Vector pre(hm), act(hm), dpre(hm);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    pre.noalias() = params.w1() * z.row(i).transpose();
    pre += params.b1();
    act = pre.cwiseMax(0.0);
    const double logit = params.w2().dot(act) + params.b2();
    const int y = labels[static_cast<std::size_t>(i)];
    total += std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
    if (!grad) continue;
    const double dl = sigmoid(logit) - y;
    double* g = grad->data();
    Eigen::Map<Matrix> gw1(g, hm, d);
    Eigen::Map<Vector> gb1(g + static_cast<Eigen::Index>(hm) * d, hm);
    Eigen::Map<Vector> gw2(gb1.data() + hm, hm);
    gw2 += dl * act;
    gw2.data()[hm] += dl;
    for (int j = 0; j < hm; ++j) dpre(j) = pre(j) > 0.0 ? dl * params.w2()(j) : 0.0;
    gb1 += dpre;
    gw1.noalias() += dpre * z.row(i);
  }
  const double inv = 1.0 / static_cast<double>(z.rows());
  if (grad) *grad *= inv;
  return total * inv;
}

MlpParams mlp_train(const Matrix& features, std::span<const int> labels, const MlpConfig& cfg) {
  check_binary(labels, features.rows());
  if (cfg.hidden < 1 || cfg.epochs < 1 || cfg.batch_size < 1) {
    throw Error(ErrorKind::invalid_argument, "bad MLP configuration");
  }
  MlpParams params(static_cast<int>(features.cols()), cfg.hidden);
  params.scaler = Standardizer::fit(features);
  const Matrix z = params.scaler.apply(features);

  Rng rng(derive_seed(cfg.seed, 0x3A));
  {
    // He-uniform for the rectifier layer, Glorot-uniform for the output.
    std::uniform_real_distribution<double> u1(-std::sqrt(6.0 / features.cols()), std::sqrt(6.0 / features.cols()));
    for (Eigen::Index i = 0; i < params.w1().size(); ++i) params.w1().data()[i] = u1(rng);
    const double s2 = std::sqrt(6.0 / (cfg.hidden + 1.0));
    std::uniform_real_distribution<double> u2(-s2, s2);
    for (Eigen::Index i = 0; i < params.w2().size(); ++i) params.w2()(i) = u2(rng);
  }
  Adam adam(params.flat().size(), {cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps});
  const auto n = static_cast<std::size_t>(z.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Vector grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t m = std::min(batch, n - start);
      Matrix zb(static_cast<Eigen::Index>(m), z.cols());
      std::vector<int> yb(m);
      for (std::size_t j = 0; j < m; ++j) {
        zb.row(static_cast<Eigen::Index>(j)) = z.row(static_cast<Eigen::Index>(order[start + j]));
        yb[j] = labels[order[start + j]];
      }
      const double loss = mlp_loss(params, zb, yb, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Error(ErrorKind::numeric, "MLP training diverged in epoch " + std::to_string(epoch + 1));
      }
      adam.step(params.flat(), grad);
    }
  }
  return params;
}

GradientCheckResult mlp_gradient_check(const MlpParams& params, const Matrix& z, std::span<const int> labels,
                                       double h) {
  Vector analytic;
  mlp_loss(params, z, labels, &analytic);
  MlpParams probe = params;
  return check_gradient(params.flat(), analytic,
                        [&](const Vector& x) {
                          probe.flat() = x;
                          return mlp_loss(probe, z, labels, nullptr);
                        },
                        h);
}

}  // namespace clickseq
