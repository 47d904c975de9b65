#include "clickseq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

namespace clickseq {

int make_label(double grade, double threshold) { return grade > threshold ? 1 : 0; }

FilterResult filter_students(std::span<const StudentLog> students, int min_clicks) {
  FilterResult r;
  for (std::size_t i = 0; i < students.size(); ++i) {
    const auto& s = students[i];
    if (!s.grade) {
      ++r.missing_grade;
    } else if (s.total_clicks() < static_cast<std::size_t>(std::max(min_clicks, 0))) {
      ++r.too_few_clicks;
    } else {
      r.kept.push_back(i);
    }
  }
  return r;
}

Split split_students(std::span<const std::size_t> ids, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::size_t> order(ids.begin(), ids.end());
  Rng rng(derive_seed(seed, 0x5B17));
  std::shuffle(order.begin(), order.end(), rng);
  // The epsilon keeps exact products such as 10 * 0.8 from rounding up.
  const auto n_train = std::min(
      order.size(), static_cast<std::size_t>(std::ceil(static_cast<double>(order.size()) * train_frac - 1e-9)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

double evaluate_accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorKind::invalid_argument, "predictions and labels differ in length");
  }
  if (labels.empty()) throw Error(ErrorKind::invalid_argument, "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorKind::invalid_argument, "degrees of freedom must be positive");
  if (std::isnan(t)) throw Error(ErrorKind::numeric, "t statistic is NaN");
  if (std::isinf(t)) return 0.0;
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t * t));
}

SignificanceResult students_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorKind::invalid_argument, "t-test needs at least two values per sample");
  auto mean = [](std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  };
  auto ss = [](std::span<const double> x, double m) {
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s;
  };
  SignificanceResult r;
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  r.degrees_of_freedom = na + nb - 2.0;
  const double pooled = (ss(a, r.mean_a) + ss(b, r.mean_b)) / r.degrees_of_freedom;
  const double diff = r.mean_a - r.mean_b;
  if (pooled == 0.0) {
    if (diff == 0.0) {
      r.t_statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p_value = 0.0;
    }
    return r;
  }
  r.t_statistic = diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.p_value = std::clamp(student_t_two_tailed(r.t_statistic, r.degrees_of_freedom), 0.0, 1.0);
  return r;
}

}  // namespace clickseq
