#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "clickseq/common.hpp"
#include "clickseq/features.hpp"
#include "clickseq/ingest.hpp"

namespace clickseq {

struct Archetype {
  std::string name;
  double share = 1.0;
  Vector pi;  // K
  Matrix A;   // K x K
  Matrix B;   // K x C
  // Grade: 0 with probability zero_grade_prob, else 100 * Beta(grade_alpha, grade_beta).
  double zero_grade_prob = 0.0;
  double grade_alpha = 2.0;
  double grade_beta = 2.0;
  // Sessions per student: lognormal with this median and log-sd, clamped.
  double sessions_median = 13.0;
  double sessions_log_sd = 1.0;
  int min_sessions = 5;
  int max_sessions = 277;
  // Clicks per session: 1 + Poisson(clicks_lambda).
  double clicks_lambda = 7.0;
};

/// Everything the generator needs. Between-session gaps are
/// gap_seconds + 1 + Exp(mean), where the mean is the smaller of
/// session_gap_mean_days and course_span_days / sessions, floored at
/// min_gap_mean_days. In-session gaps are uniform on [5, 600] seconds, or on
/// [601, gap_seconds] with probability long_click_gap_prob.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  int n_students = 2000;
  std::int64_t start_ts = 1357516800;
  std::int64_t gap_seconds = kDefaultSessionGap;
  double join_mean_days = 3.0;
  double session_gap_mean_days = 3.5;
  double course_span_days = 70.0;
  double min_gap_mean_days = 0.1;
  double long_click_gap_prob = 0.1;
  std::vector<std::string> category_names;
  /// Raw-type prefixes per category; an empty list yields unmapped
  /// "misc/<name>" types that land in the fallback category.
  std::vector<std::vector<std::string>> raw_prefixes;
  std::vector<int> items_per_category;  // distinct ?id= values per category
  std::vector<Archetype> archetypes;

  int num_categories() const { return static_cast<int>(category_names.size()); }
  int num_states() const;
  /// Throws invalid_argument on an infeasible or inconsistent spec.
  void validate() const;
};

/// The benchmark course over the categories of `map`: two archetypes (high
/// and low graders) sharing ten behavior states.
GeneratorSpec default_spec(const CategoryMap& map, std::uint64_t seed, int n_students = 2000);

/// A well separated three-state course over six categories, one archetype.
GeneratorSpec recovery_spec(std::uint64_t seed, int n_sequences = 500);
/// Category map matching recovery_spec's raw types.
CategoryMap recovery_category_map();

/// Same spec with emission columns permuted in every archetype, which
/// scrambles what each category means.
GeneratorSpec permute_categories(GeneratorSpec spec, std::uint64_t perm_seed);

struct StudentTruth {
  std::string student_id;
  std::string archetype;
  std::vector<int> states;                  // one per session
  std::vector<std::int64_t> session_starts;
  double grade = 0.0;
};

struct SyntheticCourse {
  std::vector<ClickEvent> events;  // student order, then time order
  std::map<std::string, double> grades;
  std::vector<StudentTruth> truth;
};

SyntheticCourse generate_course(const GeneratorSpec& spec);

struct OrderOnlySpec {
  std::uint64_t seed = 0;
  int pairs = 2500;
  int min_block = 3;  // sessions per block
  int max_block = 8;
  std::vector<int> early_states{5, 8};   // class 1 opens with these
  std::vector<int> late_states{0, 1};    // class 0 opens with these
};

/// Matched pairs that share one multiset of sessions. The class-1 member
/// sees the early_states block first, the class-0 member sees the other
/// block first; per-session clicks are copied verbatim between the pair.
SyntheticCourse generate_order_only_pair(const GeneratorSpec& base, const OrderOnlySpec& spec);

/// Samples whose tokens are the true state paths, labelled grade > 0.
std::vector<SequenceSample> truth_state_samples(const SyntheticCourse& course, std::int64_t course_start_ts);

ParsedLog to_parsed_log(const SyntheticCourse& course);
GradeTable to_grade_table(const SyntheticCourse& course);

void write_clicks_csv(std::ostream& out, const SyntheticCourse& course);
void write_clicks_jsonl(std::ostream& out, const SyntheticCourse& course);
void write_grades_csv(std::ostream& out, const SyntheticCourse& course);
void write_truth_json(std::ostream& out, const SyntheticCourse& course, const GeneratorSpec& spec);
std::string spec_json(const GeneratorSpec& spec);

/// Writes clicks.csv (or clicks.jsonl), grades.csv, truth.json, spec.json.
void write_synthetic_course(const std::filesystem::path& dir, const SyntheticCourse& course,
                            const GeneratorSpec& spec, LogFormat format);

}  // namespace clickseq
