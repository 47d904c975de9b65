#pragma once

#include "clickseq/common.hpp"

namespace clickseq {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moment estimates over a flat parameter vector.
class Adam {
 public:
  Adam(Eigen::Index size, const AdamConfig& cfg);

  void step(Eigen::Ref<Vector> params, const Vector& grad);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

}  // namespace clickseq
