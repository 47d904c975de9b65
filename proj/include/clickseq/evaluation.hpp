#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clickseq/common.hpp"
#include "clickseq/ingest.hpp"

namespace clickseq {

inline constexpr int kDefaultMinClicks = 101;

/// 1 iff the grade is strictly above the threshold.
int make_label(double grade, double threshold = 0.0);

struct FilterResult {
  std::vector<std::size_t> kept;  // indices into the input, ascending
  std::size_t missing_grade = 0;
  std::size_t too_few_clicks = 0;
};

/// Keeps graded students with at least `min_clicks` clicks. A student
/// without a grade counts as missing_grade whatever the click count.
FilterResult filter_students(std::span<const StudentLog> students, int min_clicks = kDefaultMinClicks);

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Seeded uniform partition of `ids`; the train side gets ceil(N * train_frac).
Split split_students(std::span<const std::size_t> ids, double train_frac, std::uint64_t seed);

double evaluate_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct SignificanceResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-tailed
};

/// Two-sample pooled-variance t-test. With zero pooled variance the p-value
/// is 1 for equal means and 0 otherwise.
SignificanceResult students_t_test(std::span<const double> a, std::span<const double> b);

/// Two-tailed tail mass of Student's t distribution: P(|T| >= |t|).
double student_t_two_tailed(double t, double df);

}  // namespace clickseq
