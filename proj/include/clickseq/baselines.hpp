#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "clickseq/adam.hpp"
#include "clickseq/common.hpp"
#include "clickseq/lstm.hpp"

namespace clickseq {

/// Per-feature z-scoring with statistics frozen at training time.
struct Standardizer {
  Vector mean;
  Vector stddev;  // floored at 1e-12

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

enum class LinearFeature { length, counts };

std::string_view to_string(LinearFeature kind);

struct LinearModel {
  Vector w;
  double b = 0.0;
  LinearFeature feature_kind = LinearFeature::counts;
  Standardizer scaler;

  /// Margins for raw (unstandardized) feature rows.
  Vector margins(const Matrix& raw) const;
};

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 0;
};

/// L2-regularized hinge loss: lambda/2 |w|^2 + mean_i max(0, 1 - y_i (w.z_i + b)),
/// labels in {0,1} mapped to {-1,+1}. `z` is already standardized.
double svm_objective(const Vector& w, double b, const Matrix& z, std::span<const int> labels, double lambda);

/// Averaged stochastic subgradient descent with step 1/(lambda (t + t0)).
LinearModel linear_svm_train(const Matrix& features, std::span<const int> labels, LinearFeature kind,
                             const SvmConfig& cfg);

struct MlpConfig {
  int hidden = 100;
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
};

/// One hidden rectifier layer and a sigmoid output, in a flat buffer:
/// W1 (Hm x D), b1 (Hm), w2 (Hm), b2 (1).
class MlpParams {
 public:
  MlpParams() = default;
  MlpParams(int input_dim, int hidden);

  int input_dim() const { return input_; }
  int hidden() const { return hidden_; }
  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  MatrixMap w1() { return {flat_.data(), hidden_, input_}; }
  ConstMatrixMap w1() const { return {flat_.data(), hidden_, input_}; }
  VectorMap b1() { return {flat_.data() + off_b1(), hidden_}; }
  ConstVectorMap b1() const { return {flat_.data() + off_b1(), hidden_}; }
  VectorMap w2() { return {flat_.data() + off_b1() + hidden_, hidden_}; }
  ConstVectorMap w2() const { return {flat_.data() + off_b1() + hidden_, hidden_}; }
  double& b2() { return flat_[off_b1() + 2L * hidden_]; }
  double b2() const { return flat_[off_b1() + 2L * hidden_]; }

  Standardizer scaler;

  /// Probabilities for raw (unstandardized) feature rows.
  Vector predict_proba(const Matrix& raw) const;

 private:
  Eigen::Index off_b1() const { return static_cast<Eigen::Index>(hidden_) * input_; }
  int input_ = 0;
  int hidden_ = 0;
  Vector flat_;
};

/// Mean BCE on standardized inputs; fills the gradient when requested.
double mlp_loss(const MlpParams& params, const Matrix& z, std::span<const int> labels, Vector* grad = nullptr);

MlpParams mlp_train(const Matrix& features, std::span<const int> labels, const MlpConfig& cfg);

GradientCheckResult mlp_gradient_check(const MlpParams& params, const Matrix& z, std::span<const int> labels,
                                       double h = 1e-3);

}  // namespace clickseq
