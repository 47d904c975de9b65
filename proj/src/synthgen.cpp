#include "clickseq/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

namespace clickseq {
namespace {

using ojson = nlohmann::ordered_json;

// Hand-rolled draws so that output bytes do not depend on the standard
// library's distribution implementations.
double u01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double std_normal(Rng& rng) {
  double u = u01(rng);
  while (u <= 0.0) u = u01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * u01(rng));
}

double exponential(Rng& rng, double mean) { return -mean * std::log1p(-u01(rng)); }

int poisson(Rng& rng, double lambda) {
  if (lambda <= 0.0) return 0;
  const double limit = std::exp(-lambda);
  int k = 0;
  double p = u01(rng);
  while (p > limit) {
    ++k;
    p *= u01(rng);
  }
  return k;
}

double gamma_draw(Rng& rng, double shape) {
  if (shape < 1.0) return gamma_draw(rng, shape + 1.0) * std::pow(u01(rng), 1.0 / shape);
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = std_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = u01(rng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_draw(Rng& rng, double a, double b) {
  const double x = gamma_draw(rng, a);
  const double y = gamma_draw(rng, b);
  return x / (x + y);
}

template <typename Row>
int categorical(Rng& rng, const Row& probs) {
  const double u = u01(rng);
  double acc = 0.0;
  const auto n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

int uniform_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(std::floor(u01(rng) * (hi - lo + 1)));
}

std::string student_name(const std::string& prefix, int i, int n) {
  const int width = std::max(5, static_cast<int>(std::to_string(std::max(n, 1)).size()));
  std::string digits = std::to_string(i);
  return prefix + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, digits.size()), '0') +
         digits;
}

std::string raw_type_for(const GeneratorSpec& spec, int category, Rng& rng) {
  const auto c = static_cast<std::size_t>(category);
  const auto& prefixes = spec.raw_prefixes[c];
  const int item = uniform_int(rng, 0, spec.items_per_category[c] - 1);
  if (prefixes.empty()) return "misc/" + spec.category_names[c] + "?id=" + std::to_string(item);
  const auto& p = prefixes[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(prefixes.size()) - 1))];
  return p + "?id=" + std::to_string(item);
}

double draw_grade(const Archetype& a, Rng& rng) {
  if (u01(rng) < a.zero_grade_prob) return 0.0;
  const double g = std::round(100.0 * beta_draw(rng, a.grade_alpha, a.grade_beta) * 100.0) / 100.0;
  return std::clamp(g, 0.01, 100.0);
}

int draw_sessions(const Archetype& a, Rng& rng) {
  const double n = a.sessions_median * std::exp(a.sessions_log_sd * std_normal(rng));
  return std::clamp(static_cast<int>(std::lround(n)), a.min_sessions, a.max_sessions);
}

double gap_mean_seconds(const GeneratorSpec& spec, int sessions) {
  const double days = std::max(spec.min_gap_mean_days,
                               std::min(spec.session_gap_mean_days, spec.course_span_days / std::max(sessions, 1)));
  return days * static_cast<double>(kSecondsPerDay);
}

std::int64_t click_gap(const GeneratorSpec& spec, Rng& rng) {
  if (u01(rng) < spec.long_click_gap_prob) return uniform_int(rng, 601, static_cast<int>(spec.gap_seconds));
  return uniform_int(rng, 5, 600);
}

/// Emits one session's clicks starting at `t` and returns the last timestamp.
std::int64_t emit_session(const GeneratorSpec& spec, const std::string& sid, std::span<const int> categories,
                          std::int64_t t, Rng& rng, std::vector<ClickEvent>& out) {
  for (std::size_t k = 0; k < categories.size(); ++k) {
    if (k > 0) t += click_gap(spec, rng);
    out.push_back({sid, t, raw_type_for(spec, categories[k], rng), kUnmappedCategory});
  }
  return t;
}

std::vector<int> draw_clicks(const Archetype& a, int state, Rng& rng) {
  const int n = 1 + poisson(rng, a.clicks_lambda);
  std::vector<int> cats(static_cast<std::size_t>(n));
  const auto row = a.B.row(state);
  for (auto& c : cats) c = categorical(rng, row);
  return cats;
}

/// Shifts every student's timeline so the earliest join lands on start_ts.
void anchor_timestamps(SyntheticCourse& course, std::int64_t start_ts) {
  if (course.events.empty()) return;
  std::int64_t earliest = course.events.front().timestamp;
  for (const auto& e : course.events) earliest = std::min(earliest, e.timestamp);
  const std::int64_t shift = start_ts - earliest;
  for (auto& e : course.events) e.timestamp += shift;
  for (auto& t : course.truth) {
    for (auto& s : t.session_starts) s += shift;
  }
}

std::vector<std::vector<int>> group_members(const CategoryMap& map) {
  std::vector<std::vector<int>> g(kNumSuperGroups);
  for (int c = 0; c < static_cast<int>(map.size()); ++c) g[static_cast<std::size_t>(map.super_group(c))].push_back(c);
  return g;
}

struct Focus {
  SuperGroup group;
  int start;
  int length;
  double weight;
};

Matrix build_emissions(const CategoryMap& map, const std::vector<std::vector<Focus>>& states, double background) {
  const auto groups = group_members(map);
  const auto c_count = static_cast<Eigen::Index>(map.size());
  Matrix b = Matrix::Constant(static_cast<Eigen::Index>(states.size()), c_count, background / c_count);
  for (std::size_t k = 0; k < states.size(); ++k) {
    double placed = 0.0;
    for (const auto& f : states[k]) {
      const auto& members = groups[static_cast<std::size_t>(f.group)];
      if (members.empty()) continue;
      std::vector<int> picked;
      for (int j = 0; j < f.length; ++j) {
        const int c = members[static_cast<std::size_t>((f.start + j) % static_cast<int>(members.size()))];
        if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
      }
      for (int c : picked) b(static_cast<Eigen::Index>(k), c) += f.weight / static_cast<double>(picked.size());
      placed += f.weight;
    }
    b.row(static_cast<Eigen::Index>(k)) /= (background + placed);
  }
  return b;
}

Matrix preference_transitions(int k, const std::vector<int>& preferred, double stay, double focus) {
  Matrix a = Matrix::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double p = (1.0 - stay) * (1.0 - focus) / k;
      if (std::find(preferred.begin(), preferred.end(), j) != preferred.end()) {
        p += (1.0 - stay) * focus / static_cast<double>(preferred.size());
      }
      if (i == j) p += stay;
      a(i, j) = p;
    }
  }
  return a;
}

ojson matrix_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int GeneratorSpec::num_states() const {
  return archetypes.empty() ? 0 : static_cast<int>(archetypes.front().pi.size());
}

void GeneratorSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_argument, "generator spec: " + msg); };
  const int c = num_categories();
  const int k = num_states();
  if (n_students < 1) fail("n_students must be positive");
  if (c < 2) fail("need at least two categories");
  if (raw_prefixes.size() != static_cast<std::size_t>(c) || items_per_category.size() != static_cast<std::size_t>(c)) {
    fail("raw_prefixes and items_per_category need one entry per category");
  }
  for (int n : items_per_category) {
    if (n < 1) fail("items_per_category entries must be positive");
  }
  if (gap_seconds < 601) fail("gap_seconds must be at least 601");
  if (!(join_mean_days >= 0.0) || !(session_gap_mean_days > 0.0) || !(course_span_days > 0.0) ||
      !(min_gap_mean_days > 0.0)) {
    fail("time scales must be positive");
  }
  if (!(long_click_gap_prob >= 0.0 && long_click_gap_prob <= 1.0)) fail("long_click_gap_prob outside [0,1]");
  if (archetypes.empty() || k < 1) fail("at least one archetype with one state is required");
  double shares = 0.0;
  auto stochastic = [&](auto row, const std::string& what) {
    if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-9) fail(what + " is not a distribution");
  };
  for (const auto& a : archetypes) {
    if (!(a.share > 0.0)) fail("archetype shares must be positive");
    shares += a.share;
    if (a.pi.size() != k || a.A.rows() != k || a.A.cols() != k || a.B.rows() != k || a.B.cols() != c) {
      fail("archetype " + a.name + " has inconsistent shapes");
    }
    stochastic(a.pi.transpose(), a.name + " pi");
    for (int i = 0; i < k; ++i) {
      stochastic(a.A.row(i), a.name + " A row");
      stochastic(a.B.row(i), a.name + " B row");
    }
    if (a.min_sessions < 1 || a.max_sessions < a.min_sessions) fail("session count bounds are infeasible");
    if (!(a.clicks_lambda >= 0.0)) fail("clicks_lambda must be nonnegative");
    if (!(a.zero_grade_prob >= 0.0 && a.zero_grade_prob <= 1.0)) fail("zero_grade_prob outside [0,1]");
    if (!(a.grade_alpha > 0.0 && a.grade_beta > 0.0)) fail("grade beta parameters must be positive");
    if (!(a.sessions_median > 0.0 && a.sessions_log_sd >= 0.0)) fail("session count distribution is invalid");
  }
  if (std::abs(shares - 1.0) > 1e-9) fail("archetype shares must sum to 1");
}

GeneratorSpec default_spec(const CategoryMap& map, std::uint64_t seed, int n_students) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.n_students = n_students;
  spec.category_names = map.categories();
  spec.raw_prefixes.assign(map.size(), {});
  for (const auto& e : map.entries()) spec.raw_prefixes[static_cast<std::size_t>(e.category)].push_back(e.prefix);
  for (auto& p : spec.raw_prefixes) std::sort(p.begin(), p.end());
  for (std::size_t c = 0; c < map.size(); ++c) {
    switch (map.super_group(static_cast<int>(c))) {
      case SuperGroup::lecture: spec.items_per_category.push_back(40); break;
      case SuperGroup::quiz: spec.items_per_category.push_back(15); break;
      case SuperGroup::forum: spec.items_per_category.push_back(30); break;
      case SuperGroup::klass: spec.items_per_category.push_back(3); break;
      case SuperGroup::wiki: spec.items_per_category.push_back(10); break;
    }
  }

  using G = SuperGroup;
  const std::vector<std::vector<Focus>> states{
      {{G::lecture, 0, 4, 0.9}},                                                 // watching lectures
      {{G::lecture, 4, 4, 0.9}},                                                 // downloading material
      {{G::lecture, 8, 4, 0.6}, {G::quiz, 0, 3, 0.3}},                           // lectures with inline quizzes
      {{G::lecture, 0, 6, 0.5}, {G::klass, 0, 3, 0.4}},                          // lectures and course pages
      {{G::lecture, 2, 4, 0.45}, {G::quiz, 3, 4, 0.45}},                         // lecture then quiz
      {{G::quiz, 0, 6, 0.9}},                                                    // quiz attempts
      {{G::lecture, 0, 3, 0.3}, {G::quiz, 6, 4, 0.3}, {G::forum, 0, 4, 0.3}},   // review and discussion
      {{G::klass, 0, 7, 0.6}, {G::lecture, 0, 2, 0.15}, {G::forum, 0, 2, 0.15}}, // browsing
      {{G::quiz, 4, 8, 0.9}},                                                    // quiz feedback
      {{G::forum, 0, 10, 0.6}, {G::wiki, 0, 5, 0.3}},                            // forum and wiki
  };
  const Matrix b = build_emissions(map, states, 0.1);
  const int k = static_cast<int>(states.size());

  Vector pi = Vector::Constant(k, 0.2 / 7.0);
  pi(7) = 0.4;
  pi(0) = 0.25;
  pi(3) = 0.15;

  Archetype high;
  high.name = "high";
  high.share = 0.55;
  high.pi = pi;
  high.A = preference_transitions(k, {4, 5, 6, 8, 9}, 0.3, 0.75);
  high.B = b;
  high.zero_grade_prob = 0.04;
  high.grade_alpha = 2.5;
  high.grade_beta = 1.5;
  high.sessions_median = 18.0;
  high.sessions_log_sd = 1.0;

  Archetype low = high;
  low.name = "low";
  low.share = 0.45;
  low.A = preference_transitions(k, {0, 1, 3, 7}, 0.3, 0.75);
  low.zero_grade_prob = 0.9;
  low.grade_alpha = 1.0;
  low.grade_beta = 6.0;
  low.sessions_median = 9.0;
  low.sessions_log_sd = 0.9;

  spec.archetypes = {high, low};
  spec.validate();
  return spec;
}

CategoryMap recovery_category_map() {
  std::vector<CategoryMap::Entry> entries;
  std::vector<std::string> names;
  for (int c = 0; c < 6; ++c) {
    names.push_back("c" + std::to_string(c));
    if (c < 5) entries.push_back({"c" + std::to_string(c) + "/", c});
  }
  const std::vector<SuperGroup> groups{SuperGroup::lecture, SuperGroup::lecture, SuperGroup::quiz,
                                       SuperGroup::quiz,    SuperGroup::forum,   SuperGroup::klass};
  return CategoryMap(entries, names, groups, 5);
}

GeneratorSpec recovery_spec(std::uint64_t seed, int n_sequences) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.n_students = n_sequences;
  for (int c = 0; c < 6; ++c) {
    spec.category_names.push_back("c" + std::to_string(c));
    spec.raw_prefixes.push_back(c < 5 ? std::vector<std::string>{"c" + std::to_string(c) + "/"}
                                      : std::vector<std::string>{});
    spec.items_per_category.push_back(5);
  }
  Archetype a;
  a.name = "single";
  a.pi = Vector(3);
  a.pi << 0.5, 0.3, 0.2;
  a.A = Matrix(3, 3);
  a.A << 0.8, 0.1, 0.1, 0.15, 0.7, 0.15, 0.1, 0.2, 0.7;
  a.B = Matrix::Constant(3, 6, 0.05);
  for (int k = 0; k < 3; ++k) a.B(k, 2 * k) = a.B(k, 2 * k + 1) = 0.4;
  a.zero_grade_prob = 0.5;
  a.sessions_median = 20.0;
  a.sessions_log_sd = 0.2;
  a.min_sessions = 5;
  a.max_sessions = 60;
  spec.archetypes = {a};
  spec.validate();
  return spec;
}

GeneratorSpec permute_categories(GeneratorSpec spec, std::uint64_t perm_seed) {
  const int c = spec.num_categories();
  std::vector<int> perm(static_cast<std::size_t>(c));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(perm_seed, 0x9E7));
  for (int i = c - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(uniform_int(rng, 0, i))]);
  for (auto& a : spec.archetypes) {
    Matrix b(a.B.rows(), a.B.cols());
    for (int j = 0; j < c; ++j) b.col(j) = a.B.col(perm[static_cast<std::size_t>(j)]);
    a.B = b;
  }
  return spec;
}

SyntheticCourse generate_course(const GeneratorSpec& spec) {
  spec.validate();
  SyntheticCourse out;
  std::vector<double> shares;
  for (const auto& a : spec.archetypes) shares.push_back(a.share);
  for (int i = 0; i < spec.n_students; ++i) {
    Rng rng(derive_seed(spec.seed, 0x10000 + static_cast<std::uint64_t>(i)));
    const auto& arch = spec.archetypes[static_cast<std::size_t>(categorical(rng, shares))];
    StudentTruth truth;
    truth.student_id = student_name("s", i, spec.n_students);
    truth.archetype = arch.name;
    truth.grade = draw_grade(arch, rng);
    const int n_sessions = draw_sessions(arch, rng);
    const double gap_mean = gap_mean_seconds(spec, n_sessions);
    auto t = static_cast<std::int64_t>(exponential(rng, spec.join_mean_days * kSecondsPerDay));
    int state = categorical(rng, arch.pi);
    for (int s = 0; s < n_sessions; ++s) {
      if (s > 0) state = categorical(rng, arch.A.row(state));
      truth.states.push_back(state);
      truth.session_starts.push_back(t);
      const auto cats = draw_clicks(arch, state, rng);
      t = emit_session(spec, truth.student_id, cats, t, rng, out.events);
      t += spec.gap_seconds + 1 + static_cast<std::int64_t>(exponential(rng, gap_mean));
    }
    out.grades[truth.student_id] = truth.grade;
    out.truth.push_back(std::move(truth));
  }
  anchor_timestamps(out, spec.start_ts);
  return out;
}

SyntheticCourse generate_order_only_pair(const GeneratorSpec& base, const OrderOnlySpec& spec) {
  base.validate();
  const int k = base.num_states();
  for (int s : spec.early_states) {
    if (s < 0 || s >= k) throw Error(ErrorKind::invalid_argument, "order-only early state out of range");
  }
  for (int s : spec.late_states) {
    if (s < 0 || s >= k) throw Error(ErrorKind::invalid_argument, "order-only late state out of range");
  }
  if (spec.pairs < 1 || spec.min_block < 1 || spec.max_block < spec.min_block || spec.early_states.empty() ||
      spec.late_states.empty()) {
    throw Error(ErrorKind::invalid_argument, "order-only spec is infeasible");
  }
  const Archetype& arch = base.archetypes.front();
  SyntheticCourse out;
  const int n = 2 * spec.pairs;
  for (int p = 0; p < spec.pairs; ++p) {
    Rng rng(derive_seed(spec.seed, 0x20000 + static_cast<std::uint64_t>(p)));
    struct Block {
      std::vector<int> states;
      std::vector<std::vector<int>> clicks;
    };
    auto make_block = [&](const std::vector<int>& pool) {
      Block b;
      const int len = uniform_int(rng, spec.min_block, spec.max_block);
      for (int j = 0; j < len; ++j) {
        const int s = pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))];
        b.states.push_back(s);
        b.clicks.push_back(draw_clicks(arch, s, rng));
      }
      return b;
    };
    const Block early = make_block(spec.early_states);
    const Block late = make_block(spec.late_states);
    for (int member = 0; member < 2; ++member) {
      // member 0 is class 1 (early block first), member 1 is class 0.
      const Block& first = member == 0 ? early : late;
      const Block& second = member == 0 ? late : early;
      StudentTruth truth;
      truth.student_id = student_name("p", 2 * p + member, n);
      truth.archetype = member == 0 ? "early_first" : "late_first";
      truth.grade = member == 0 ? std::round(100.0 * (0.2 + 0.8 * u01(rng))) : 0.0;
      const double gap_mean = gap_mean_seconds(base, static_cast<int>(early.states.size() + late.states.size()));
      auto t = static_cast<std::int64_t>(exponential(rng, base.join_mean_days * kSecondsPerDay));
      for (const Block* b : {&first, &second}) {
        for (std::size_t j = 0; j < b->states.size(); ++j) {
          truth.states.push_back(b->states[j]);
          truth.session_starts.push_back(t);
          t = emit_session(base, truth.student_id, b->clicks[j], t, rng, out.events);
          t += base.gap_seconds + 1 + static_cast<std::int64_t>(exponential(rng, gap_mean));
        }
      }
      out.grades[truth.student_id] = truth.grade;
      out.truth.push_back(std::move(truth));
    }
  }
  anchor_timestamps(out, base.start_ts);
  return out;
}

std::vector<SequenceSample> truth_state_samples(const SyntheticCourse& course, std::int64_t course_start_ts) {
  std::vector<SequenceSample> out;
  for (const auto& t : course.truth) {
    if (t.states.empty()) continue;
    SequenceSample s;
    s.student_id = t.student_id;
    s.feature_set = FeatureSet::state;
    s.tokens = t.states;
    s.token_ts = t.session_starts;
    s.label = t.grade > 0.0 ? 1 : 0;
    s.course_start_ts = course_start_ts;
    s.first_click_ts = t.session_starts.front();
    out.push_back(std::move(s));
  }
  return out;
}

ParsedLog to_parsed_log(const SyntheticCourse& course) {
  ParsedLog log;
  for (const auto& e : course.events) {
    if (log.students.empty() || log.students.back().student_id != e.student_id) {
      log.students.push_back({e.student_id, {}});
    }
    log.students.back().events.push_back(e);
  }
  std::stable_sort(log.students.begin(), log.students.end(),
                   [](const auto& a, const auto& b) { return a.student_id < b.student_id; });
  return log;
}

GradeTable to_grade_table(const SyntheticCourse& course) { return {course.grades, 0}; }

void write_clicks_csv(std::ostream& out, const SyntheticCourse& course) {
  out << "student_id,timestamp,click_type\n";
  for (const auto& e : course.events) out << csv_escape(e.student_id) << ',' << e.timestamp << ',' << csv_escape(e.raw_type) << '\n';
}

void write_clicks_jsonl(std::ostream& out, const SyntheticCourse& course) {
  for (const auto& e : course.events) {
    ojson j;
    j["student_id"] = e.student_id;
    j["timestamp"] = e.timestamp;
    j["click_type"] = e.raw_type;
    out << j.dump() << '\n';
  }
}

void write_grades_csv(std::ostream& out, const SyntheticCourse& course) {
  out << "student_id,grade\n";
  for (const auto& [id, g] : course.grades) out << csv_escape(id) << ',' << format_double(g) << '\n';
}

std::string spec_json(const GeneratorSpec& spec) {
  ojson j;
  j["format"] = "clickseq-synth-spec/1";
  j["seed"] = spec.seed;
  j["n_students"] = spec.n_students;
  j["start_ts"] = spec.start_ts;
  j["gap_seconds"] = spec.gap_seconds;
  j["join_mean_days"] = spec.join_mean_days;
  j["session_gap_mean_days"] = spec.session_gap_mean_days;
  j["course_span_days"] = spec.course_span_days;
  j["min_gap_mean_days"] = spec.min_gap_mean_days;
  j["long_click_gap_prob"] = spec.long_click_gap_prob;
  j["category_names"] = spec.category_names;
  j["raw_prefixes"] = spec.raw_prefixes;
  j["items_per_category"] = spec.items_per_category;
  ojson archs = ojson::array();
  for (const auto& a : spec.archetypes) {
    ojson x;
    x["name"] = a.name;
    x["share"] = a.share;
    x["pi"] = std::vector<double>(a.pi.data(), a.pi.data() + a.pi.size());
    x["A"] = matrix_json(a.A);
    x["B"] = matrix_json(a.B);
    x["zero_grade_prob"] = a.zero_grade_prob;
    x["grade_alpha"] = a.grade_alpha;
    x["grade_beta"] = a.grade_beta;
    x["sessions_median"] = a.sessions_median;
    x["sessions_log_sd"] = a.sessions_log_sd;
    x["min_sessions"] = a.min_sessions;
    x["max_sessions"] = a.max_sessions;
    x["clicks_lambda"] = a.clicks_lambda;
    archs.push_back(std::move(x));
  }
  j["archetypes"] = std::move(archs);
  return j.dump(1);
}

void write_truth_json(std::ostream& out, const SyntheticCourse& course, const GeneratorSpec& spec) {
  ojson j;
  j["format"] = "clickseq-synth-truth/1";
  j["seed"] = spec.seed;
  j["start_ts"] = spec.start_ts;
  j["num_states"] = spec.num_states();
  ojson students = ojson::array();
  for (const auto& t : course.truth) {
    ojson s;
    s["student_id"] = t.student_id;
    s["archetype"] = t.archetype;
    s["grade"] = t.grade;
    s["states"] = t.states;
    s["session_starts"] = t.session_starts;
    students.push_back(std::move(s));
  }
  j["students"] = std::move(students);
  out << j.dump() << '\n';
}

void write_synthetic_course(const std::filesystem::path& dir, const SyntheticCourse& course,
                            const GeneratorSpec& spec, LogFormat format) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open(format == LogFormat::csv ? "clicks.csv" : "clicks.jsonl");
    if (format == LogFormat::csv) write_clicks_csv(f, course);
    else write_clicks_jsonl(f, course);
  }
  {
    auto f = open("grades.csv");
    write_grades_csv(f, course);
  }
  {
    auto f = open("truth.json");
    write_truth_json(f, course, spec);
  }
  {
    auto f = open("spec.json");
    f << spec_json(spec) << '\n';
  }
}

}  // namespace clickseq
