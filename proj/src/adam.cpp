#include "clickseq/adam.hpp"

#include <cmath>

namespace clickseq {

Adam::Adam(Eigen::Index size, const AdamConfig& cfg)
    : cfg_(cfg), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "learning rate must be positive");
}

void Adam::step(Eigen::Ref<Vector> params, const Vector& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) {
    throw Error(ErrorKind::invalid_argument, "Adam: parameter/gradient size mismatch");
  }
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

}  // namespace clickseq
