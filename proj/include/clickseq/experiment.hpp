#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clickseq/classifier.hpp"
#include "clickseq/evaluation.hpp"
#include "clickseq/features.hpp"

namespace clickseq {

/// A feature family as it appears in results. State features carry the
/// behavior model that decodes them and are labelled hmm_state or mmm_state.
struct FeatureSpec {
  FeatureSet feature_set = FeatureSet::category;
  const BehaviorModel* behavior = nullptr;
  std::string label;

  static FeatureSpec clicks(FeatureSet fs);
  static FeatureSpec states(const BehaviorModel& model);
};

/// Default prefix values per dimension; nullopt stands for All.
std::vector<std::optional<int>> default_prefix_values(PrefixDimension dim);

struct GridConfig {
  std::vector<ModelKind> models{ModelKind::lstm, ModelKind::svm_c};
  std::vector<PrefixDimension> dimensions{PrefixDimension::course_days, PrefixDimension::student_days,
                                          PrefixDimension::n_clicks, PrefixDimension::n_states};
  /// Missing dimensions use default_prefix_values.
  std::map<PrefixDimension, std::vector<std::optional<int>>> values;
  double label_threshold = 0.0;
  int min_clicks = kDefaultMinClicks;
  double train_frac = 0.8;
  std::uint64_t seed = 0;
  /// Training repetitions per cell with seeds seed, seed+1, ...; a
  /// significance table is produced when this is at least 2.
  int repeats = 1;
  bool emit_train_rows = true;
  ClassifierConfig classifier;
  std::function<void(const std::string&)> log;

  std::vector<std::optional<int>> values_for(PrefixDimension dim) const;
};

struct ExperimentCell {
  std::string course;
  std::string dimension;
  std::string value;
  std::string feature_set;
  std::string model;
  std::string split;  // train, test or transfer
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t n = 0;
};

struct SkippedCell {
  std::string dimension;
  std::string value;
  std::string feature_set;
  std::string model;
  std::string reason;
};

struct Exclusion {
  std::string dimension;
  std::string value;
  std::string feature_set;
  std::string split;
  std::size_t excluded = 0;
};

struct SignificanceRow {
  std::string config_a;
  std::string config_b;
  SignificanceResult result;
};

struct GridResult {
  std::vector<ExperimentCell> cells;
  std::vector<SkippedCell> skipped;
  std::vector<Exclusion> exclusions;
  std::vector<SignificanceRow> significance;
  FilterResult filter;
  std::size_t train_students = 0;
  std::size_t test_students = 0;
};

/// Students eligible for experiments, their labels and the frozen split.
struct PreparedCourse {
  const Course* course = nullptr;
  std::vector<int> labels;  // per course student, -1 when filtered out
  FilterResult filter;
  Split split;
  Vocabulary raw_vocab;
};

PreparedCourse prepare_course(const Course& course, double label_threshold, int min_clicks, double train_frac,
                              std::uint64_t seed);

/// Samples of `students` for one prefix cell; students whose prefix is empty
/// are dropped and counted in `excluded`.
std::vector<SequenceSample> cell_samples(const PreparedCourse& prep, std::span<const std::size_t> students,
                                         const FeatureSpec& feature, const PrefixSpec& prefix,
                                         std::size_t* excluded = nullptr);

int feature_vocab_size(const PreparedCourse& prep, const FeatureSpec& feature);
std::uint64_t feature_vocab_hash(const PreparedCourse& prep, const FeatureSpec& feature);

/// Classifier settings with every model seed set to `seed`.
ClassifierConfig with_seed(ClassifierConfig cfg, std::uint64_t seed);

/// Every (dimension, value, feature, model) combination allowed by
/// prefix_valid is trained on the train split and scored on both splits.
GridResult run_experiment_grid(const Course& course, std::span<const FeatureSpec> features, const GridConfig& cfg);

struct TransferConfig {
  double label_threshold = 0.0;
  int min_clicks = kDefaultMinClicks;
  PrefixSpec prefix{PrefixDimension::course_days, std::nullopt};
  std::string feature_label = "state";
};

/// Decodes every eligible student of course B with A's behavior model and
/// scores A's state classifier on all of them.
ExperimentCell transfer_evaluate(const TrainedClassifier& classifier, const BehaviorModel& behavior,
                                 const Course& course_b, const TransferConfig& cfg);

}  // namespace clickseq
