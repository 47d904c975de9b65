#include <doctest.h>

#include <cmath>
#include <random>

#include "clickseq/behavior.hpp"
#include "clickseq/synthgen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace clickseq;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

double row_ll(std::vector<int> counts, std::vector<double> row) { return emission_loglik(counts, row); }

std::vector<CountSequence> random_corpus(int n, int c, std::mt19937_64& rng) {
  std::vector<CountSequence> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::random_sequence(1 + static_cast<int>(rng() % 6), c, 3, rng));
  return out;
}

}  // namespace

TEST_CASE("emission log-likelihood fixtures") {
  CHECK(row_ll({2, 2}, {0.5, 0.5}) == doctest::Approx(4 * std::log(0.5)).epsilon(1e-15));
  CHECK(row_ll({2, 2}, {0.5, 0.5}) == doctest::Approx(-2.772589).epsilon(1e-6));
  const double eps = 1e-8;
  CHECK(row_ll({3, 0}, {1 - eps, eps}) == doctest::Approx(3 * std::log(1 - eps)).epsilon(1e-12));
  CHECK_THROWS_AS(row_ll({0, 0}, {0.5, 0.5}), Error);
}

TEST_CASE("emission log-likelihood against long double summation") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 40);
    const auto row = oracle::dirichlet(c, 0.5, rng);
    std::vector<int> counts(static_cast<std::size_t>(c));
    for (auto& x : counts) x = static_cast<int>(rng() % 50);
    counts[0] += 1;
    long double ref = 0.0L;
    for (int i = 0; i < c; ++i) ref += counts[static_cast<std::size_t>(i)] * std::log(static_cast<long double>(row[static_cast<std::size_t>(i)]));
    const double got = emission_loglik(counts, row);
    CHECK(std::abs(got - static_cast<double>(ref)) <= 1e-12 * std::max(1.0, std::abs(got)));
  }
}

TEST_CASE("mmm: K=1 closed form") {
  std::vector<CountVector> sessions{{3, 1, 0}, {0, 2, 2}, {1, 0, 1}};
  FitConfig cfg;
  cfg.num_states = 1;
  const auto fit = mmm_fit(sessions, cfg);
  CHECK(fit.params.prior(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.params.theta(0, 0) == doctest::Approx(4.0 / 10).epsilon(1e-7));
  CHECK(fit.params.theta(0, 1) == doctest::Approx(3.0 / 10).epsilon(1e-7));
  CHECK(fit.params.theta(0, 2) == doctest::Approx(3.0 / 10).epsilon(1e-7));
}

TEST_CASE("mmm: one EM step matches hand computation") {
  std::vector<CountVector> sessions{{2, 0}, {0, 1}, {1, 1}};
  MmmParams p{vec({0.6, 0.4}), rows({{0.7, 0.3}, {0.2, 0.8}})};
  // Per-session joint weights prior_k * prod theta_kc^n_c.
  const double w[3][2] = {{0.6 * 0.49, 0.4 * 0.04}, {0.6 * 0.3, 0.4 * 0.8}, {0.6 * 0.21, 0.4 * 0.16}};
  double r[3][2];
  for (int n = 0; n < 3; ++n) {
    const double z = w[n][0] + w[n][1];
    r[n][0] = w[n][0] / z;
    r[n][1] = w[n][1] / z;
  }
  Matrix resp;
  const auto next = mmm_em_step(sessions, p, 1e-12, &resp);
  for (int n = 0; n < 3; ++n) {
    CHECK(resp(n, 0) == doctest::Approx(r[n][0]).epsilon(1e-12));
    CHECK(resp(n, 1) == doctest::Approx(r[n][1]).epsilon(1e-12));
  }
  for (int k = 0; k < 2; ++k) {
    const double prior = (r[0][k] + r[1][k] + r[2][k]) / 3;
    const double c0 = 2 * r[0][k] + r[2][k];
    const double c1 = r[1][k] + r[2][k];
    CHECK(std::abs(next.prior(k) - prior) < 1e-9);
    CHECK(std::abs(next.theta(k, 0) - c0 / (c0 + c1)) < 1e-9);
    CHECK(std::abs(next.theta(k, 1) - c1 / (c0 + c1)) < 1e-9);
  }
}

TEST_CASE("mmm: assignment rules") {
  MmmParams same{vec({0.9, 0.1}), rows({{0.3, 0.7}, {0.3, 0.7}})};
  CHECK(mmm_assign(std::vector<int>{5, 1}, same) == 0);
  CHECK(mmm_assign(std::vector<int>{0, 9}, same) == 0);
  MmmParams disjoint{vec({0.5, 0.5}), rows({{0.5, 0.5, 1e-9, 1e-9}, {1e-9, 1e-9, 0.5, 0.5}})};
  CHECK(mmm_assign(std::vector<int>{0, 0, 3, 1}, disjoint) == 1);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 5);
    const int c = 2 + static_cast<int>(rng() % 6);
    const auto h = oracle::random_hmm(k, c, rng);
    MmmParams m{h.initial, h.emission};
    const auto counts = oracle::random_sequence(1, c, 4, rng)[0];
    int best = 0;
    long double best_s = -INFINITY;
    for (int j = 0; j < k; ++j) {
      const long double s = std::log(static_cast<long double>(m.prior(j))) + oracle::emission_ll(counts, m.theta, j);
      if (s > best_s) best_s = s, best = j;
    }
    CHECK(mmm_assign(counts, m) == best);
  }
}

TEST_CASE("mmm: two disjoint clusters are recovered") {
  std::mt19937_64 rng(21);
  const Matrix truth = rows({{0.5, 0.3, 0.2, 0, 0, 0}, {0, 0, 0, 0.2, 0.2, 0.6}});
  std::vector<CountVector> sessions;
  for (int n = 0; n < 600; ++n) {
    const int k = n % 2;
    std::discrete_distribution<int> pick(truth.row(k).data(), truth.row(k).data() + 6);
    CountVector counts(6, 0);
    for (int i = 0; i < 15; ++i) counts[static_cast<std::size_t>(pick(rng))]++;
    sessions.push_back(counts);
  }
  FitConfig cfg;
  cfg.num_states = 2;
  cfg.seed = 2;
  const auto fit = mmm_fit(sessions, cfg);
  const auto perm = oracle::best_permutation(truth, fit.params.theta);
  for (int k = 0; k < 2; ++k) CHECK(oracle::tv(truth.row(k), fit.params.theta.row(perm[static_cast<std::size_t>(k)])) < 0.05);
  CHECK(fit.params.prior(0) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("hmm: K=1 closed form") {
  std::vector<CountSequence> seqs{{{2, 0}, {1, 1}}, {{0, 3}}};
  FitConfig cfg;
  cfg.num_states = 1;
  const auto fit = hmm_fit(seqs, cfg);
  CHECK(fit.params.initial(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.params.transition(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.params.emission(0, 0) == doctest::Approx(3.0 / 7).epsilon(1e-7));
  CHECK(fit.params.emission(0, 1) == doctest::Approx(4.0 / 7).epsilon(1e-7));
  for (const auto& s : seqs) {
    double ref = 0;
    for (const auto& x : s) ref += emission_loglik(x, std::vector<double>{fit.params.emission(0, 0), fit.params.emission(0, 1)});
    CHECK(hmm_forward_loglik(s, fit.params) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(hmm_viterbi(s, fit.params).path == std::vector<int>(s.size(), 0));
  }
}

TEST_CASE("hmm: one Baum-Welch step matches path enumeration") {
  HmmParams p{vec({0.6, 0.4}), rows({{0.7, 0.3}, {0.4, 0.6}}), rows({{0.9, 0.1}, {0.2, 0.8}})};
  const CountSequence seq{{1, 0}, {0, 1}, {1, 0}};

  // Posterior over all 8 paths.
  double total = 0;
  double gamma[3][2] = {};
  double xi[2][2] = {};
  for (int code = 0; code < 8; ++code) {
    const int s[3] = {code & 1, (code >> 1) & 1, (code >> 2) & 1};
    const double w = p.initial(s[0]) * p.emission(s[0], 0) * p.transition(s[0], s[1]) * p.emission(s[1], 1) *
                     p.transition(s[1], s[2]) * p.emission(s[2], 0);
    total += w;
    for (int t = 0; t < 3; ++t) gamma[t][s[t]] += w;
    xi[s[0]][s[1]] += w;
    xi[s[1]][s[2]] += w;
  }
  const auto fb = hmm_forward_backward(seq, p);
  CHECK(fb.loglik == doctest::Approx(std::log(total)).epsilon(1e-12));
  for (int t = 0; t < 3; ++t) {
    for (int k = 0; k < 2; ++k) CHECK(std::abs(fb.gamma(t, k) - gamma[t][k] / total) < 1e-9);
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(std::abs(fb.xi(i, j) - xi[i][j] / total) < 1e-9);
  }

  const std::vector<CountSequence> corpus{seq};
  const auto next = hmm_em_step(corpus, p, 1e-12);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(next.initial(i) - gamma[0][i] / total) < 1e-9);
    const double row = xi[i][0] + xi[i][1];
    for (int j = 0; j < 2; ++j) CHECK(std::abs(next.transition(i, j) - xi[i][j] / row) < 1e-9);
    const double c0 = gamma[0][i] + gamma[2][i];
    const double c1 = gamma[1][i];
    CHECK(std::abs(next.emission(i, 0) - c0 / (c0 + c1)) < 1e-9);
    CHECK(std::abs(next.emission(i, 1) - c1 / (c0 + c1)) < 1e-9);
  }
}

TEST_CASE("hmm: forward and Viterbi agree with exhaustive enumeration") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 4);
    const int c = 2 + static_cast<int>(rng() % 4);
    const int t = 1 + static_cast<int>(rng() % 7);
    const auto p = oracle::random_hmm(k, c, rng);
    const auto seq = oracle::random_sequence(t, c, 3, rng);
    const auto ex = oracle::enumerate_paths(seq, p);
    CHECK(std::abs(hmm_forward_loglik(seq, p) - ex.loglik) < 1e-9);
    const auto v = hmm_viterbi(seq, p);
    CHECK(std::abs(v.log_prob - ex.best) < 1e-9);
    CHECK(std::abs(static_cast<double>(oracle::path_ll(seq, p, v.path)) - ex.best) < 1e-9);
  }
}

TEST_CASE("hmm: length-1 sequence is a mixture") {
  std::mt19937_64 rng(4);
  const auto p = oracle::random_hmm(3, 4, rng);
  const auto seq = oracle::random_sequence(1, 4, 5, rng);
  std::vector<double> terms;
  for (int k = 0; k < 3; ++k) terms.push_back(std::log(p.initial(k)) + static_cast<double>(oracle::emission_ll(seq[0], p.emission, k)));
  CHECK(hmm_forward_loglik(seq, p) == doctest::Approx(logsumexp(terms)).epsilon(1e-12));
}

TEST_CASE("hmm: deterministic emissions force the Viterbi path") {
  const double e = 1e-8;
  HmmParams p{vec({0.5, 0.5}), rows({{0.5, 0.5}, {0.5, 0.5}}), rows({{1 - e, e}, {e, 1 - e}})};
  const CountSequence seq{{3, 0}, {0, 2}, {0, 1}, {4, 1}, {1, 5}};
  CHECK(hmm_viterbi(seq, p).path == std::vector<int>{0, 1, 1, 0, 1});
}

TEST_CASE("hmm: relabeling states leaves the likelihood unchanged") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = oracle::random_hmm(4, 5, rng);
    std::vector<int> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto q = permute_states(p, perm);
    const auto seq = oracle::random_sequence(1 + static_cast<int>(rng() % 10), 5, 3, rng);
    CHECK(std::abs(hmm_forward_loglik(seq, p) - hmm_forward_loglik(seq, q)) < 1e-12);
  }
}

TEST_CASE("EM iterations keep parameters stochastic and the likelihood monotone") {
  std::mt19937_64 rng(17);
  const auto corpus = random_corpus(80, 5, rng);
  const double eps = 1e-3;  // large floor so the constraint binds
  auto p = oracle::random_hmm(3, 5, rng);
  double prev = -INFINITY;
  for (int it = 0; it < 30; ++it) {
    double ll = 0;
    for (const auto& s : corpus) ll += hmm_forward_loglik(s, p);
    CHECK(ll - prev >= -1e-8);
    prev = ll;
    p = hmm_em_step(corpus, p, eps);
    CHECK_NOTHROW(validate(p, eps));
  }
  std::vector<CountVector> sessions;
  for (const auto& s : corpus) sessions.insert(sessions.end(), s.begin(), s.end());
  MmmParams m{p.initial, p.emission};
  prev = -INFINITY;
  for (int it = 0; it < 30; ++it) {
    double ll = 0;
    for (const auto& x : sessions) {
      std::vector<double> terms;
      for (int k = 0; k < 3; ++k) terms.push_back(std::log(m.prior(k)) + static_cast<double>(oracle::emission_ll(x, m.theta, k)));
      ll += logsumexp(terms);
    }
    CHECK(ll - prev >= -1e-8);
    prev = ll;
    m = mmm_em_step(sessions, m, eps);
    CHECK_NOTHROW(validate(m, eps));
  }
}

TEST_CASE("fits are deterministic and independent of the thread count") {
  std::mt19937_64 rng(31);
  const auto corpus = random_corpus(300, 6, rng);
  FitConfig cfg;
  cfg.num_states = 3;
  cfg.seed = 7;
  cfg.max_iter = 15;
  const auto a = hmm_fit(corpus, cfg);
  cfg.threads = 3;
  const auto b = hmm_fit(corpus, cfg);
  CHECK(a.trace.loglik == b.trace.loglik);
  CHECK(a.params.emission == b.params.emission);
  CHECK(a.params.transition == b.params.transition);
  for (std::size_t i = 1; i < a.trace.loglik.size(); ++i) CHECK(a.trace.loglik[i] - a.trace.loglik[i - 1] >= -1e-8);
}

TEST_CASE("behavior summary aggregates by super group") {
  std::vector<CategoryMap::Entry> entries;
  std::vector<std::string> names;
  std::vector<SuperGroup> groups;
  const int sizes[5] = {10, 10, 10, 8, 8};
  for (int g = 0; g < 5; ++g) {
    for (int i = 0; i < sizes[g]; ++i) {
      names.push_back("c" + std::to_string(names.size()));
      groups.push_back(static_cast<SuperGroup>(g));
      entries.push_back({names.back() + "/", static_cast<int>(names.size() - 1)});
    }
  }
  const CategoryMap map(entries, names, groups, 45);
  Matrix uniform = Matrix::Constant(1, 46, 1.0 / 46);
  const auto s = summarize_behaviors(uniform, map);
  for (int g = 0; g < 5; ++g) CHECK(s(0, g) == doctest::Approx(sizes[g] / 46.0).epsilon(1e-12));

  Matrix lecture = Matrix::Zero(1, 46);
  lecture(0, 3) = 1.0;
  const auto l = summarize_behaviors(lecture, map);
  CHECK(l(0, 0) == 1.0);
  CHECK(l.row(0).sum() == 1.0);

  const auto shipped = CategoryMap::load(test_util::data_path("category_map.csv"));
  std::mt19937_64 rng(1);
  const auto h = oracle::random_hmm(4, 46, rng);
  const auto got = summarize_behaviors(h.emission, shipped);
  for (int k = 0; k < 4; ++k) {
    for (int g = 0; g < kNumSuperGroups; ++g) {
      double ref = 0;
      for (int c = 0; c < 46; ++c) {
        if (static_cast<int>(shipped.super_group(c)) == g) ref += h.emission(k, c);
      }
      CHECK(std::abs(got(k, g) - ref) < 1e-12);
    }
  }
}

TEST_CASE("transition report ranks successors") {
  const double e = 1e-6;
  HmmParams sticky{vec({0.5, 0.3, 0.2}), rows({{1 - 2 * e, e, e}, {e, 1 - 2 * e, e}, {e, e, 1 - 2 * e}}),
                   rows({{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}})};
  const auto r = transition_report(sticky);
  for (int k = 0; k < 3; ++k) CHECK(r.top[static_cast<std::size_t>(k)][0].first == k);

  HmmParams flat{vec({0.5, 0.5}), rows({{0.5, 0.5}, {0.5, 0.5}}), rows({{0.5, 0.5}, {0.5, 0.5}})};
  const auto f = transition_report(flat);
  for (const auto& top : f.top) {
    REQUIRE(top.size() == 2);
    CHECK(top[0].second == 0.5);
    CHECK(top[1].second == 0.5);
  }
}

TEST_CASE("fitted transitions follow the generator's dominant transitions") {
  const auto spec = recovery_spec(5, 300);
  const auto syn = generate_course(spec);
  const auto map = recovery_category_map();
  const Course course = build_course(to_parsed_log(syn), map, to_grade_table(syn));
  std::vector<CountSequence> seqs;
  for (const auto& s : course.students) {
    CountSequence q;
    for (const auto& x : s.sessions) q.push_back(x.counts);
    seqs.push_back(q);
  }
  FitConfig cfg;
  cfg.num_states = 3;
  cfg.seed = 1;
  const auto fit = hmm_fit(seqs, cfg);
  const Matrix& truth_b = spec.archetypes[0].B;
  const Matrix& truth_a = spec.archetypes[0].A;
  const auto perm = oracle::best_permutation(truth_b, fit.params.emission);
  const auto aligned = permute_states(fit.params, perm);
  const auto report = transition_report(aligned);
  for (int k = 0; k < 3; ++k) {
    Eigen::Index dominant;
    truth_a.row(k).maxCoeff(&dominant);
    CHECK(report.top[static_cast<std::size_t>(k)][0].first == dominant);
  }
}

TEST_CASE("behavior model json round trip is exact") {
  std::mt19937_64 rng(2);
  BehaviorModel m;
  m.params = oracle::random_hmm(3, 4, rng);
  m.category_names = {"a", "b", "c", "d"};
  m.seed = 9;
  m.final_loglik = -123.456789012345;
  const auto back = parse_behavior_model(behavior_model_json(m));
  CHECK(back.is_hmm());
  CHECK(std::get<HmmParams>(back.params).emission == std::get<HmmParams>(m.params).emission);
  CHECK(std::get<HmmParams>(back.params).transition == std::get<HmmParams>(m.params).transition);
  CHECK(back.final_loglik == m.final_loglik);
  CHECK(behavior_model_json(back) == behavior_model_json(m));

  BehaviorModel mm;
  mm.params = MmmParams{vec({0.25, 0.75}), rows({{0.1, 0.9}, {0.6, 0.4}})};
  mm.category_names = {"x", "y"};
  const auto mb = parse_behavior_model(behavior_model_json(mm));
  CHECK(!mb.is_hmm());
  CHECK(mb.num_states() == 2);
  CHECK(std::get<MmmParams>(mb.params).theta == std::get<MmmParams>(mm.params).theta);
  CHECK_THROWS_AS(parse_behavior_model("{\"kind\":\"hmm\"}"), Error);
}

TEST_CASE("decode_states: K=1 gives all zeros") {
  BehaviorModel m;
  m.params = HmmParams{vec({1.0}), rows({{1.0}}), rows({{0.5, 0.5}})};
  m.category_names = {"a", "b"};
  std::vector<Session> sessions(3);
  for (auto& s : sessions) s.counts = {1, 2};
  CHECK(decode_states(m, sessions) == std::vector<int>{0, 0, 0});
}
