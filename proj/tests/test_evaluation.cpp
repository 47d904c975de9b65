#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "clickseq/evaluation.hpp"
#include "oracles.hpp"

using namespace clickseq;

namespace {

StudentLog student(std::size_t clicks, std::optional<double> grade) {
  StudentLog s;
  s.student_id = "s";
  s.events.resize(clicks);
  s.grade = grade;
  return s;
}

std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

TEST_CASE("label rule fixtures") {
  CHECK(make_label(0.0, 0.0) == 0);
  CHECK(make_label(0.5, 0.0) == 1);
  CHECK(make_label(39.0, 40.0) == 0);
  for (double t = 0; t < 100; t += 7.5) CHECK(make_label(100.0, t) == 1);
}

TEST_CASE("property: label is one exactly when grade exceeds the threshold") {
  for (int gi = 0; gi <= 200; ++gi) {
    for (int ti = 0; ti <= 200; ++ti) {
      const double g = gi * 0.5, t = ti * 0.5;
      CHECK(make_label(g, t) == (g > t ? 1 : 0));
    }
  }
}

TEST_CASE("filter: click minimum and missing grades") {
  std::vector<StudentLog> s{student(100, 50.0), student(101, 50.0), student(500, std::nullopt), student(101, 0.0)};
  const auto f = filter_students(s);
  CHECK(f.kept == std::vector<std::size_t>{1, 3});
  CHECK(f.too_few_clicks == 1);
  CHECK(f.missing_grade == 1);
  CHECK(filter_students(std::vector<StudentLog>{}).kept.empty());
}

TEST_CASE("split: sizes, disjointness and determinism") {
  const auto ids = iota_ids(10);
  const auto s = split_students(ids, 0.8, 1);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<std::size_t> input;
    for (std::size_t i = 0; i < n; ++i) input.push_back(i * 3 + 1);
    const auto a = split_students(input, 0.8, seed);
    const auto b = split_students(input, 0.8, seed);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    CHECK(std::is_sorted(a.train.begin(), a.train.end()));
    CHECK(std::is_sorted(a.test.begin(), a.test.end()));
    std::set<std::size_t> all(a.train.begin(), a.train.end());
    for (auto t : a.test) CHECK(all.insert(t).second);
    CHECK(all == std::set<std::size_t>(input.begin(), input.end()));
  }
  CHECK(split_students(ids, 0.8, 1).train != split_students(ids, 0.8, 2).train);
}

TEST_CASE("split: label balance is preserved on 2000 students") {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution high(0.55);
  std::vector<int> labels(2000);
  for (auto& l : labels) l = high(rng) ? 1 : 0;
  const double global = std::accumulate(labels.begin(), labels.end(), 0.0) / 2000.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = split_students(iota_ids(2000), 0.8, seed);
    auto share = [&](const std::vector<std::size_t>& part) {
      double pos = 0;
      for (auto i : part) pos += labels[i];
      return pos / static_cast<double>(part.size());
    };
    CHECK(std::abs(share(s.train) - global) <= 0.05);
    CHECK(std::abs(share(s.test) - global) <= 0.05);
  }
}

TEST_CASE("accuracy fixtures") {
  CHECK(evaluate_accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}) == 1.0);
  std::vector<int> labels(10000, 0);
  std::fill(labels.begin(), labels.begin() + 5510, 1);
  CHECK(evaluate_accuracy(std::vector<int>(10000, 1), labels) == doctest::Approx(0.5510).epsilon(1e-12));
  const std::vector<int> p{1, 0, 0, 1, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1, 0};
  const std::vector<int> y{1, 1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 1, 0};
  CHECK(evaluate_accuracy(p, y) == 14.0 / 20.0);
  CHECK_THROWS_AS(evaluate_accuracy(std::vector<int>{1}, std::vector<int>{}), Error);
}

TEST_CASE("t-test: degenerate and extreme cases") {
  const std::vector<double> a{1, 2, 3};
  const auto same = students_t_test(a, a);
  CHECK(same.t_statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const std::vector<double> b{11, 12, 13.0000001};
  CHECK(students_t_test(a, b).p_value < 0.001);
  const std::vector<double> c{5, 5, 5}, d{7, 7, 7};
  CHECK(students_t_test(c, d).p_value == 0.0);
  CHECK(students_t_test(c, c).p_value == 1.0);
}

TEST_CASE("t-test: pooled statistic and textbook p-values against quadrature") {
  // Hand-computed pooled t for a classic two-group fixture.
  const std::vector<double> a{19.1, 20.4, 21.3, 20.9, 18.6, 21.7, 20.0}, b{17.8, 19.2, 18.4, 19.7, 18.1, 17.9};
  const double ma = 142.0 / 7, mb = 111.1 / 6;
  double sa = 0, sb = 0;
  for (double x : a) sa += (x - ma) * (x - ma);
  for (double x : b) sb += (x - mb) * (x - mb);
  const double sp2 = (sa + sb) / 11;
  const double t = (ma - mb) / std::sqrt(sp2 * (1.0 / 7 + 1.0 / 6));
  const auto r = students_t_test(a, b);
  CHECK(r.degrees_of_freedom == 11);
  CHECK(r.t_statistic == doctest::Approx(t).epsilon(1e-12));
  CHECK(std::abs(r.p_value - oracle::t_two_tailed_quadrature(t, 11)) < 1e-6);

  // Critical values: p(2.228, 10) ~ 0.05 and p(1.96, inf-like) ~ 0.05.
  CHECK(student_t_two_tailed(2.228138851986, 10) == doctest::Approx(0.05).epsilon(1e-8));
  for (double df : {1.0, 2.0, 5.0, 18.0, 60.0}) {
    for (double tv : {0.1, 0.7, 1.5, 2.5, 4.0, 9.0}) {
      CHECK(std::abs(student_t_two_tailed(tv, df) - oracle::t_two_tailed_quadrature(tv, df)) < 1e-6);
    }
  }
}

TEST_CASE("property: swapping samples negates t and keeps p") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(2 + rng() % 10), b(2 + rng() % 10);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng) + 0.5;
    const auto ab = students_t_test(a, b), ba = students_t_test(b, a);
    CHECK(ab.t_statistic == -ba.t_statistic);
    CHECK(std::abs(ab.p_value - ba.p_value) < 1e-12);
    CHECK(ab.p_value >= 0.0);
    CHECK(ab.p_value <= 1.0);
  }
}
