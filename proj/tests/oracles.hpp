#pragma once

// Independent reference implementations used by unit and acceptance tests.
// They avoid the library's numerics on purpose: brute force, long double
// accumulation and plain quadrature.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "clickseq/behavior.hpp"
#include "clickseq/common.hpp"

namespace oracle {

using clickseq::CountVector;
using clickseq::HmmParams;
using clickseq::Matrix;
using clickseq::Vector;

inline long double emission_ll(const CountVector& counts, const Matrix& b, int k) {
  long double s = 0.0L;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) s += counts[c] * std::log(static_cast<long double>(b(k, static_cast<Eigen::Index>(c))));
  }
  return s;
}

inline long double path_ll(const std::vector<CountVector>& seq, const HmmParams& p, const std::vector<int>& path) {
  long double s = std::log(static_cast<long double>(p.initial(path[0]))) + emission_ll(seq[0], p.emission, path[0]);
  for (std::size_t t = 1; t < seq.size(); ++t) {
    s += std::log(static_cast<long double>(p.transition(path[t - 1], path[t])));
    s += emission_ll(seq[t], p.emission, path[t]);
  }
  return s;
}

struct Exhaustive {
  double loglik = 0.0;
  double best = 0.0;
  std::vector<int> best_path;
};

/// Enumerates all K^T state paths.
inline Exhaustive enumerate_paths(const std::vector<CountVector>& seq, const HmmParams& p) {
  const int k = static_cast<int>(p.initial.size());
  const std::size_t t_len = seq.size();
  std::vector<int> path(t_len, 0);
  std::vector<long double> scores;
  Exhaustive out;
  long double best = -std::numeric_limits<long double>::infinity();
  while (true) {
    const long double s = path_ll(seq, p, path);
    scores.push_back(s);
    if (s > best) {
      best = s;
      out.best_path = path;
    }
    std::size_t pos = 0;
    while (pos < t_len && ++path[pos] == k) path[pos++] = 0;
    if (pos == t_len) break;
  }
  long double m = *std::max_element(scores.begin(), scores.end());
  long double acc = 0.0L;
  for (long double s : scores) acc += std::exp(s - m);
  out.loglik = static_cast<double>(m + std::log(acc));
  out.best = static_cast<double>(best);
  return out;
}

inline std::vector<double> dirichlet(int n, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(alpha, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  double s = 0.0;
  for (auto& x : v) s += (x = g(rng) + 1e-6);
  for (auto& x : v) x /= s;
  return v;
}

inline HmmParams random_hmm(int k, int c, std::mt19937_64& rng, double alpha = 1.0) {
  HmmParams p;
  p.initial.resize(k);
  p.transition.resize(k, k);
  p.emission.resize(k, c);
  auto put = [](auto&& row, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) row(static_cast<Eigen::Index>(i)) = v[i];
  };
  put(p.initial, dirichlet(k, alpha, rng));
  for (int i = 0; i < k; ++i) {
    put(p.transition.row(i), dirichlet(k, alpha, rng));
    put(p.emission.row(i), dirichlet(c, alpha, rng));
  }
  return p;
}

inline std::vector<CountVector> random_sequence(int t_len, int c, int max_count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, max_count);
  std::uniform_int_distribution<int> pick(0, c - 1);
  std::vector<CountVector> seq(static_cast<std::size_t>(t_len), CountVector(static_cast<std::size_t>(c), 0));
  for (auto& s : seq) {
    for (auto& x : s) x = count(rng);
    s[static_cast<std::size_t>(pick(rng))] += 1;  // never empty
  }
  return seq;
}

/// Total-variation distance between two rows.
template <typename A, typename B>
double tv(const A& a, const B& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::abs(a(i) - b(i));
  return 0.5 * s;
}

/// State permutation perm (fitted state perm[j] plays true state j) that
/// minimizes the summed emission TV. Brute force over K!.
inline std::vector<int> best_permutation(const Matrix& truth, const Matrix& fitted) {
  std::vector<int> perm(static_cast<std::size_t>(truth.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < perm.size(); ++j) {
      cost += tv(truth.row(static_cast<Eigen::Index>(j)), fitted.row(perm[j]));
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Two-tailed p-value of Student's t by composite Simpson quadrature of the
/// density on [0, |t|].
inline double t_two_tailed_quadrature(double t, double df, int intervals = 200000) {
  const double a = std::abs(t);
  if (a == 0.0) return 1.0;
  const double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto pdf = [&](double x) { return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df)); };
  const double h = a / intervals;
  long double s = pdf(0.0) + pdf(a);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0L : 2.0L) * pdf(i * h);
  const double half_mass = static_cast<double>(s * h / 3.0L);
  return 1.0 - 2.0 * half_mass;
}

}  // namespace oracle
