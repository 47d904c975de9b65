#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "clickseq/evaluation.hpp"
#include "clickseq/synthgen.hpp"
#include "test_util.hpp"

using namespace clickseq;

namespace {

std::string clicks_csv(const SyntheticCourse& c) {
  std::ostringstream out;
  write_clicks_csv(out, c);
  return out.str();
}

Course ingest(const SyntheticCourse& syn, const CategoryMap& map, std::int64_t gap = kDefaultSessionGap) {
  IngestOptions opts;
  opts.gap_seconds = gap;
  return build_course(to_parsed_log(syn), map, to_grade_table(syn), opts);
}

GeneratorSpec two_category_spec(int n) {
  GeneratorSpec spec = recovery_spec(1, n);
  spec.category_names = {"a", "b"};
  spec.raw_prefixes = {{"a/"}, {"b/"}};
  spec.items_per_category = {3, 3};
  Archetype arch = spec.archetypes.front();
  arch.pi = Vector::Ones(1);
  arch.A = Matrix::Ones(1, 1);
  arch.B = Matrix::Constant(1, 2, 0.5);
  spec.archetypes = {arch};
  return spec;
}

CategoryMap two_category_map() {
  return CategoryMap({{"a/", 0}, {"b/", 1}}, {"a", "b", "other"},
                     {SuperGroup::lecture, SuperGroup::quiz, SuperGroup::klass}, 2);
}

}  // namespace

TEST_CASE("generator output is byte-deterministic under a seed") {
  const auto map = CategoryMap::load(test_util::data_path("category_map.csv"));
  const auto a = generate_course(default_spec(map, 7, 50));
  const auto b = generate_course(default_spec(map, 7, 50));
  const auto c = generate_course(default_spec(map, 8, 50));
  CHECK(clicks_csv(a) == clicks_csv(b));
  CHECK(clicks_csv(a) != clicks_csv(c));
  std::ostringstream ta, tb;
  write_truth_json(ta, a, default_spec(map, 7, 50));
  write_truth_json(tb, b, default_spec(map, 7, 50));
  CHECK(ta.str() == tb.str());
  CHECK(spec_json(default_spec(map, 7, 50)) == spec_json(default_spec(map, 7, 50)));
}

TEST_CASE("default course: shape and label balance") {
  const auto map = CategoryMap::load(test_util::data_path("category_map.csv"));
  const auto spec = default_spec(map, 1, 2000);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.num_states() == 10);
  const auto syn = generate_course(spec);
  CHECK(syn.truth.size() == 2000);
  const auto earliest = std::min_element(syn.events.begin(), syn.events.end(),
                                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  CHECK(earliest->timestamp == spec.start_ts);
  int positive = 0;
  for (const auto& t : syn.truth) positive += t.grade > 0.0;
  const double share = positive / 2000.0;
  CHECK(share > 0.45);
  CHECK(share < 0.65);
}

TEST_CASE("one uniform state over two categories yields balanced clicks") {
  auto spec = two_category_spec(2000);
  spec.archetypes[0].sessions_median = 8;
  const auto syn = generate_course(spec);
  const auto map = two_category_map();
  std::map<int, long> counts;
  for (const auto& e : syn.events) counts[map.lookup(e.raw_type)]++;
  const double total = static_cast<double>(syn.events.size());
  CHECK(total >= 1e5);
  CHECK(counts[2] == 0);
  CHECK(std::abs(counts[0] / total - 0.5) < 0.02);
}

TEST_CASE("a gap threshold below every click gap makes each click its own session") {
  const auto spec = recovery_spec(3, 20);
  const auto syn = generate_course(spec);
  const Course c = ingest(syn, recovery_category_map(), 4);
  for (const auto& s : c.students) CHECK(s.sessions.size() == s.events.size());
}

TEST_CASE("ingestion reproduces the generator's session boundaries") {
  const auto syn = generate_course(recovery_spec(4, 200));
  const Course c = ingest(syn, recovery_category_map());
  REQUIRE(c.students.size() == syn.truth.size());
  for (std::size_t i = 0; i < c.students.size(); ++i) {
    REQUIRE(c.students[i].sessions.size() == syn.truth[i].session_starts.size());
    for (std::size_t s = 0; s < c.students[i].sessions.size(); ++s) {
      CHECK(c.students[i].sessions[s].start_ts == syn.truth[i].session_starts[s]);
    }
  }
}

TEST_CASE("true paths score near the generator's analytic per-session log-likelihood") {
  const auto spec = recovery_spec(9, 500);
  const auto syn = generate_course(spec);
  const Course c = ingest(syn, recovery_category_map());
  const Matrix& b = spec.archetypes[0].B;
  double total = 0;
  long sessions = 0;
  std::vector<long> occupancy(3, 0);
  for (std::size_t i = 0; i < c.students.size(); ++i) {
    for (std::size_t s = 0; s < c.students[i].sessions.size(); ++s) {
      const int k = syn.truth[i].states[s];
      const auto row = b.row(k);
      total += emission_loglik(c.students[i].sessions[s].counts, std::span<const double>(row.data(), 6));
      occupancy[static_cast<std::size_t>(k)]++;
      ++sessions;
    }
  }
  const double empirical = total / static_cast<double>(sessions);
  // Expected clicks per session times the occupancy-weighted negative entropy.
  double analytic = 0;
  for (int k = 0; k < 3; ++k) {
    double neg_entropy = 0;
    for (int col = 0; col < 6; ++col) neg_entropy += b(k, col) * std::log(b(k, col));
    analytic += static_cast<double>(occupancy[static_cast<std::size_t>(k)]) / static_cast<double>(sessions) * neg_entropy;
  }
  analytic *= 1.0 + spec.archetypes[0].clicks_lambda;
  CHECK(std::abs(empirical - analytic) <= 0.05 * std::abs(analytic));
}

TEST_CASE("order-only pairs share count vectors and differ only in order") {
  const auto map = CategoryMap::load(test_util::data_path("category_map.csv"));
  const auto base = default_spec(map, 2, 10);
  OrderOnlySpec os;
  os.seed = 3;
  os.pairs = 50;
  const auto syn = generate_order_only_pair(base, os);
  REQUIRE(syn.truth.size() == 100);
  const Course c = ingest(syn, map);
  const auto samples = truth_state_samples(syn, c.start_ts);
  for (std::size_t p = 0; p < 50; ++p) {
    const auto& hi = samples[2 * p];
    const auto& lo = samples[2 * p + 1];
    CHECK(hi.label == 1);
    CHECK(lo.label == 0);
    CHECK(count_vector(hi, 10) == count_vector(lo, 10));
    CHECK(hi.tokens != lo.tokens);
    CHECK((hi.tokens.front() == 5 || hi.tokens.front() == 8));
    CHECK((lo.tokens.front() == 0 || lo.tokens.front() == 1));

    // Category counts of the clickstream agree too.
    const auto& a = c.students[2 * p];
    const auto& b = c.students[2 * p + 1];
    std::vector<int> ca(map.size(), 0), cb(map.size(), 0);
    for (const auto& e : a.events) ca[static_cast<std::size_t>(e.category_id)]++;
    for (const auto& e : b.events) cb[static_cast<std::size_t>(e.category_id)]++;
    CHECK(ca == cb);
  }
}

TEST_CASE("permuting categories moves emission columns") {
  const auto spec = recovery_spec(1, 10);
  const auto perm = permute_categories(spec, 4);
  const Matrix& a = spec.archetypes[0].B;
  const Matrix& b = perm.archetypes[0].B;
  CHECK(a != b);
  for (int k = 0; k < 3; ++k) {
    std::vector<double> ra(a.row(k).begin(), a.row(k).end()), rb(b.row(k).begin(), b.row(k).end());
    std::sort(ra.begin(), ra.end());
    std::sort(rb.begin(), rb.end());
    CHECK(ra == rb);
  }
}

TEST_CASE("an infeasible spec is rejected") {
  auto spec = recovery_spec(1, 10);
  spec.archetypes[0].B = Matrix::Constant(3, 2, 0.5);
  CHECK_THROWS_AS(spec.validate(), Error);
  CHECK_THROWS_AS(generate_course(spec), Error);
}

TEST_CASE("synthetic files are written") {
  const auto spec = recovery_spec(1, 5);
  const auto syn = generate_course(spec);
  const auto dir = test_util::temp_dir("synth_files");
  write_synthetic_course(dir, syn, spec, LogFormat::jsonl);
  CHECK(std::filesystem::exists(dir / "clicks.jsonl"));
  CHECK(std::filesystem::exists(dir / "grades.csv"));
  CHECK(std::filesystem::exists(dir / "truth.json"));
  CHECK(std::filesystem::exists(dir / "spec.json"));
  const auto log = parse_log_file(dir / "clicks.jsonl", LogFormat::jsonl);
  std::size_t events = 0;
  for (const auto& s : log.students) events += s.events.size();
  CHECK(events == syn.events.size());
}
