#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clickseq/behavior.hpp"
#include "clickseq/ingest.hpp"

namespace clickseq {

enum class FeatureSet { raw, category, state };

std::string_view to_string(FeatureSet fs);
FeatureSet parse_feature_set(std::string_view name);

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct SequenceSample {
  std::string student_id;
  FeatureSet feature_set = FeatureSet::category;
  std::vector<int> tokens;
  std::vector<std::int64_t> token_ts;  // session start times for state tokens
  int label = 0;
  std::int64_t course_start_ts = 0;
  std::int64_t first_click_ts = 0;
};

enum class PrefixDimension { course_days, student_days, n_clicks, n_states };

std::string_view to_string(PrefixDimension dim);
PrefixDimension parse_prefix_dimension(std::string_view name);

struct PrefixSpec {
  PrefixDimension dimension = PrefixDimension::course_days;
  std::optional<int> value;  // nullopt means the whole sequence

  bool is_all() const { return !value.has_value(); }
  std::string value_string() const { return value ? std::to_string(*value) : "All"; }
};

/// n_states applies only to state features; n_clicks only to click features.
bool prefix_valid(PrefixDimension dim, FeatureSet fs);

/// Keeps the leading tokens allowed by `spec`. Returns nullopt when nothing
/// survives. Throws on a spec that is invalid for the sample's feature set.
std::optional<SequenceSample> truncate_prefix(const SequenceSample& sample, const PrefixSpec& spec);

/// Raw click vocabulary of a course, ids in first-occurrence order over
/// students (sorted by id) and their time-ordered events.
Vocabulary build_raw_vocabulary(const Course& course);

struct SequenceContext {
  std::int64_t course_start_ts = 0;
  const Vocabulary* raw_vocab = nullptr;      // raw features
  const BehaviorModel* behavior = nullptr;    // state features
};

/// One token per click (raw/category) or per decoded session (state).
/// Returns nullopt for a student without sessions.
std::optional<SequenceSample> build_sequence(const StudentLog& student, FeatureSet fs, const SequenceContext& ctx,
                                             int label);

/// State features for a prefix cell: the click stream is cut first, then
/// re-segmented and decoded, so no session after the cut influences the
/// decoded states. For n_states the first n sessions are decoded.
std::optional<SequenceSample> build_state_prefix(const StudentLog& student, const BehaviorModel& model,
                                                 const PrefixSpec& spec, std::int64_t course_start_ts,
                                                 std::int64_t gap_seconds, int label);

std::vector<int> count_vector(const SequenceSample& sample, std::size_t vocab_size);
int length_feature(const SequenceSample& sample);

struct NgramEntry {
  std::vector<int> ngram;
  long frequency = 0;
  double rate_per_student = 0.0;
  double other_class_rate = 0.0;

  double rate_difference() const { return rate_per_student - other_class_rate; }
};

struct NgramReport {
  int n = 1;
  std::array<std::size_t, 2> class_sizes{0, 0};
  std::array<std::vector<NgramEntry>, 2> by_class;  // index = label
};

/// Total n-gram frequencies over every window of every sequence.
std::map<std::vector<int>, long> ngram_counts(std::span<const SequenceSample> samples, int n);

/// Ranks n-grams within each label class by total frequency (ties by n-gram
/// order) and keeps the top `top_k`; also records the other class's rate.
NgramReport ngram_indicative(std::span<const SequenceSample> samples, int n, int top_k);

/// Category unigram rankings restricted to sessions decoded as each state.
std::vector<NgramReport> per_state_unigrams(std::span<const StudentLog> students,
                                            std::span<const std::vector<int>> states,
                                            std::span<const int> labels, int num_states, int top_k);

using TokenNamer = std::function<std::string(int)>;

void write_ngram_csv(std::ostream& out, const NgramReport& report, const TokenNamer& name);
void write_state_ngram_csv(std::ostream& out, const std::vector<NgramReport>& reports, const TokenNamer& name);

/// Feature dump: student_id,label,length,tokens
void write_feature_csv(std::ostream& out, std::span<const SequenceSample> samples);
std::vector<SequenceSample> read_feature_csv(std::istream& in, FeatureSet fs);

}  // namespace clickseq
