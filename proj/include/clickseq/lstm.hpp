#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "clickseq/adam.hpp"
#include "clickseq/common.hpp"

namespace clickseq {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 20;
  int batch_size = 32;
  double dropout_p = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_seq_len = 2000;
  bool deterministic = true;
  int threads = 1;
  int embed_dim = 32;
  int hidden_dim = 64;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
};

using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

/// Single-layer LSTM classifier parameters in one flat buffer:
/// embedding (V x E), input weights (4H x E), recurrent weights (4H x H),
/// gate bias (4H), output weights (H), output bias (1). Gate blocks are
/// stacked in the order input, forget, output, candidate.
class LstmParams {
 public:
  LstmParams() = default;
  LstmParams(int vocab_size, int embed_dim, int hidden_dim);

  /// Uniform fan-in scaled weights, zero biases except the forget gate at 1.
  static LstmParams random(int vocab_size, int embed_dim, int hidden_dim, Rng& rng);

  int vocab_size() const { return vocab_; }
  int embed_dim() const { return embed_; }
  int hidden_dim() const { return hidden_; }
  Eigen::Index size() const { return flat_.size(); }

  Vector& flat() { return flat_; }
  const Vector& flat() const { return flat_; }

  MatrixMap embedding() { return {flat_.data() + off_emb(), vocab_, embed_}; }
  ConstMatrixMap embedding() const { return {flat_.data() + off_emb(), vocab_, embed_}; }
  MatrixMap input_weights() { return {flat_.data() + off_w(), 4 * hidden_, embed_}; }
  ConstMatrixMap input_weights() const { return {flat_.data() + off_w(), 4 * hidden_, embed_}; }
  MatrixMap recurrent_weights() { return {flat_.data() + off_u(), 4 * hidden_, hidden_}; }
  ConstMatrixMap recurrent_weights() const { return {flat_.data() + off_u(), 4 * hidden_, hidden_}; }
  VectorMap gate_bias() { return {flat_.data() + off_b(), 4 * hidden_}; }
  ConstVectorMap gate_bias() const { return {flat_.data() + off_b(), 4 * hidden_}; }
  VectorMap output_weights() { return {flat_.data() + off_out(), hidden_}; }
  ConstVectorMap output_weights() const { return {flat_.data() + off_out(), hidden_}; }
  double& output_bias() { return flat_[off_out() + hidden_]; }
  double output_bias() const { return flat_[off_out() + hidden_]; }

 private:
  Eigen::Index off_emb() const { return 0; }
  Eigen::Index off_w() const { return static_cast<Eigen::Index>(vocab_) * embed_; }
  Eigen::Index off_u() const { return off_w() + 4L * hidden_ * embed_; }
  Eigen::Index off_b() const { return off_u() + 4L * hidden_ * hidden_; }
  Eigen::Index off_out() const { return off_b() + 4L * hidden_; }

  int vocab_ = 0;
  int embed_ = 0;
  int hidden_ = 0;
  Vector flat_;
};

/// Probability of label 1. Mean pooling over all hidden states, then a
/// logistic output. With dropout_p > 0 an Rng must be supplied and inverted
/// dropout is applied to the pooled vector.
double lstm_forward(std::span<const int> tokens, const LstmParams& params, double dropout_p = 0.0,
                    Rng* rng = nullptr);

/// Binary cross-entropy of one sequence; adds d(loss)/d(params) into `grad`.
double lstm_loss_and_grad(std::span<const int> tokens, int label, const LstmParams& params, Vector& grad,
                          double dropout_p = 0.0, Rng* rng = nullptr, double* prob_out = nullptr);

/// Mean BCE over a batch and its gradient (dropout off).
double lstm_batch_loss(std::span<const std::vector<int>> seqs, std::span<const int> labels, const LstmParams& params,
                       Vector* grad = nullptr);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> val_acc;
};

struct LstmTrainResult {
  LstmParams params;
  std::vector<EpochStats> trace;
};

struct ValidationSet {
  std::span<const std::vector<int>> seqs;
  std::span<const int> labels;
};

LstmTrainResult lstm_train(std::span<const std::vector<int>> seqs, std::span<const int> labels, int vocab_size,
                           const TrainConfig& cfg, const ValidationSet* validation = nullptr);

struct GradientCheckResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = -1;
  Vector analytic;
  Vector numeric;
};

double relative_error(double analytic, double numeric);

/// Analytic vs central-difference gradient of a scalar loss over a flat
/// parameter vector.
GradientCheckResult check_gradient(const Vector& params, const Vector& analytic,
                                   const std::function<double(const Vector&)>& loss, double h);

GradientCheckResult gradient_check(const LstmParams& params, std::span<const std::vector<int>> seqs,
                                   std::span<const int> labels, double h = 1e-3);

}  // namespace clickseq
