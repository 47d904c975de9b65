#include "clickseq/experiment.hpp"

#include <algorithm>

namespace clickseq {
namespace {

std::vector<std::string> state_tokens(int k) {
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) out.push_back("state" + std::to_string(i));
  return out;
}

std::string config_name(const ExperimentCell& c) {
  return c.dimension + "=" + c.value + "/" + c.feature_set + "/" + c.model;
}

void note(const GridConfig& cfg, const std::string& msg) {
  if (cfg.log) cfg.log(msg);
}

bool has_both_classes(std::span<const SequenceSample> samples) {
  bool has0 = false, has1 = false;
  for (const auto& s : samples) (s.label ? has1 : has0) = true;
  return has0 && has1;
}

}  // namespace

FeatureSpec FeatureSpec::clicks(FeatureSet fs) {
  if (fs == FeatureSet::state) throw Error(ErrorKind::invalid_argument, "state features need a behavior model");
  return {fs, nullptr, std::string(to_string(fs))};
}

FeatureSpec FeatureSpec::states(const BehaviorModel& model) {
  return {FeatureSet::state, &model, std::string(model.kind()) + "_state"};
}

std::vector<std::optional<int>> default_prefix_values(PrefixDimension dim) {
  switch (dim) {
    case PrefixDimension::course_days:
    case PrefixDimension::student_days: return {7, 18, 35, std::nullopt};
    case PrefixDimension::n_clicks: return {100, 1000, 1959, std::nullopt};
    case PrefixDimension::n_states: return {10, 25, 50, std::nullopt};
  }
  return {std::nullopt};
}

std::vector<std::optional<int>> GridConfig::values_for(PrefixDimension dim) const {
  const auto it = values.find(dim);
  return it == values.end() ? default_prefix_values(dim) : it->second;
}

PreparedCourse prepare_course(const Course& course, double label_threshold, int min_clicks, double train_frac,
                              std::uint64_t seed) {
  PreparedCourse p;
  p.course = &course;
  p.filter = filter_students(course.students, min_clicks);
  p.labels.assign(course.students.size(), -1);
  for (std::size_t i : p.filter.kept) p.labels[i] = make_label(*course.students[i].grade, label_threshold);
  p.split = split_students(p.filter.kept, train_frac, seed);
  p.raw_vocab = build_raw_vocabulary(course);
  return p;
}

std::vector<SequenceSample> cell_samples(const PreparedCourse& prep, std::span<const std::size_t> students,
                                         const FeatureSpec& feature, const PrefixSpec& prefix, std::size_t* excluded) {
  const Course& course = *prep.course;
  if (!prefix_valid(prefix.dimension, feature.feature_set)) {
    throw Error(ErrorKind::invalid_argument, "prefix dimension " + std::string(to_string(prefix.dimension)) +
                                                 " does not apply to " + feature.label + " features");
  }
  const SequenceContext ctx{course.start_ts, &prep.raw_vocab, feature.behavior};
  std::vector<SequenceSample> out;
  out.reserve(students.size());
  std::size_t dropped = 0;
  for (std::size_t idx : students) {
    const StudentLog& st = course.students.at(idx);
    const int label = prep.labels.at(idx);
    if (label < 0) throw Error(ErrorKind::invalid_argument, "student " + st.student_id + " is not eligible");
    std::optional<SequenceSample> s;
    if (feature.feature_set == FeatureSet::state) {
      s = build_state_prefix(st, *feature.behavior, prefix, course.start_ts, course.gap_seconds, label);
    } else {
      const auto full = build_sequence(st, feature.feature_set, ctx, label);
      if (full) s = truncate_prefix(*full, prefix);
    }
    if (s) out.push_back(std::move(*s));
    else ++dropped;
  }
  if (excluded) *excluded = dropped;
  return out;
}

int feature_vocab_size(const PreparedCourse& prep, const FeatureSpec& feature) {
  switch (feature.feature_set) {
    case FeatureSet::raw: return static_cast<int>(prep.raw_vocab.size());
    case FeatureSet::category: return static_cast<int>(prep.course->category_names.size());
    case FeatureSet::state: return feature.behavior->num_states();
  }
  return 0;
}

std::uint64_t feature_vocab_hash(const PreparedCourse& prep, const FeatureSpec& feature) {
  switch (feature.feature_set) {
    case FeatureSet::raw: return vocabulary_hash(prep.raw_vocab.tokens());
    case FeatureSet::category: return vocabulary_hash(prep.course->category_names);
    case FeatureSet::state: return vocabulary_hash(state_tokens(feature.behavior->num_states()));
  }
  return 0;
}

ClassifierConfig with_seed(ClassifierConfig cfg, std::uint64_t seed) {
  cfg.lstm.seed = seed;
  cfg.svm.seed = seed;
  cfg.mlp.seed = seed;
  return cfg;
}

GridResult run_experiment_grid(const Course& course, std::span<const FeatureSpec> features, const GridConfig& cfg) {
  if (cfg.repeats < 1) throw Error(ErrorKind::invalid_argument, "repeats must be at least 1");
  const PreparedCourse prep = prepare_course(course, cfg.label_threshold, cfg.min_clicks, cfg.train_frac, cfg.seed);
  GridResult result;
  result.filter = prep.filter;
  result.train_students = prep.split.train.size();
  result.test_students = prep.split.test.size();
  note(cfg, "eligible students: " + std::to_string(prep.filter.kept.size()) + " (missing grade " +
                std::to_string(prep.filter.missing_grade) + ", below click minimum " +
                std::to_string(prep.filter.too_few_clicks) + ")");

  for (PrefixDimension dim : cfg.dimensions) {
    for (const auto& value : cfg.values_for(dim)) {
      const PrefixSpec prefix{dim, value};
      if (value && *value < 1) throw Error(ErrorKind::invalid_argument, "prefix values must be positive");
      for (const auto& feature : features) {
        if (!prefix_valid(dim, feature.feature_set)) {
          for (ModelKind m : cfg.models) {
            result.skipped.push_back({std::string(to_string(dim)), prefix.value_string(), feature.label,
                                      std::string(to_string(m)), "dimension does not apply to this feature set"});
          }
          note(cfg, "skip " + std::string(to_string(dim)) + "=" + prefix.value_string() + " " + feature.label +
                        ": dimension does not apply");
          continue;
        }
        std::size_t ex_train = 0, ex_test = 0;
        const auto train = cell_samples(prep, prep.split.train, feature, prefix, &ex_train);
        const auto test = cell_samples(prep, prep.split.test, feature, prefix, &ex_test);
        result.exclusions.push_back({std::string(to_string(dim)), prefix.value_string(), feature.label, "train", ex_train});
        result.exclusions.push_back({std::string(to_string(dim)), prefix.value_string(), feature.label, "test", ex_test});
        const int vocab = feature_vocab_size(prep, feature);
        const auto vhash = feature_vocab_hash(prep, feature);

        for (ModelKind m : cfg.models) {
          const std::string tag = std::string(to_string(dim)) + "=" + prefix.value_string() + " " + feature.label +
                                  " " + std::string(to_string(m));
          std::string reason;
          if (train.size() < 2 || !has_both_classes(train)) reason = "training prefix set lacks one class";
          else if (test.empty()) reason = "no test student has a non-empty prefix";
          if (!reason.empty()) {
            result.skipped.push_back({std::string(to_string(dim)), prefix.value_string(), feature.label,
                                      std::string(to_string(m)), reason});
            note(cfg, "skip " + tag + ": " + reason);
            continue;
          }
          for (int r = 0; r < cfg.repeats; ++r) {
            const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
            const auto model = train_classifier(m, train, vocab, vhash, with_seed(cfg.classifier, seed));
            auto score = [&](const std::vector<SequenceSample>& set, const char* split) {
              std::vector<int> labels;
              for (const auto& s : set) labels.push_back(s.label);
              const double acc = evaluate_accuracy(predict_labels(model, set), labels);
              result.cells.push_back({course.name, std::string(to_string(dim)), prefix.value_string(), feature.label,
                                      std::string(to_string(m)), split, seed, acc, set.size()});
              return acc;
            };
            if (cfg.emit_train_rows) score(train, "train");
            const double acc = score(test, "test");
            note(cfg, tag + " seed " + std::to_string(seed) + ": test accuracy " + format_double(acc) + " (n=" +
                          std::to_string(test.size()) + ")");
          }
        }
      }
    }
  }

  if (cfg.repeats >= 2) {
    // Test accuracies grouped per configuration, in emission order.
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    std::vector<std::string> cell_keys;
    for (const auto& c : result.cells) {
      if (c.split != "test") continue;
      const std::string name = config_name(c);
      auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == name; });
      if (it == groups.end()) {
        groups.push_back({name, {}});
        cell_keys.push_back(c.dimension + "=" + c.value + "/" + c.feature_set);
        it = groups.end() - 1;
      }
      it->second.push_back(c.accuracy);
    }
    // Models are compared within the same prefix cell and feature set.
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        if (cell_keys[i] != cell_keys[j]) continue;
        result.significance.push_back(
            {groups[i].first, groups[j].first, students_t_test(groups[i].second, groups[j].second)});
      }
    }
  }
  return result;
}

ExperimentCell transfer_evaluate(const TrainedClassifier& classifier, const BehaviorModel& behavior,
                                 const Course& course_b, const TransferConfig& cfg) {
  if (classifier.feature_set != FeatureSet::state) {
    throw Error(ErrorKind::invalid_argument, "transfer needs a classifier trained on state features");
  }
  if (classifier.vocab_size != behavior.num_states()) {
    throw Error(ErrorKind::schema, "classifier state count does not match the behavior model");
  }
  if (course_b.category_names.size() != behavior.num_categories()) {
    throw Error(ErrorKind::schema, "category dimension mismatch");
  }
  PreparedCourse prep;
  prep.course = &course_b;
  prep.filter = filter_students(course_b.students, cfg.min_clicks);
  prep.labels.assign(course_b.students.size(), -1);
  for (std::size_t i : prep.filter.kept) prep.labels[i] = make_label(*course_b.students[i].grade, cfg.label_threshold);
  FeatureSpec feature{FeatureSet::state, &behavior, cfg.feature_label};
  const auto samples = cell_samples(prep, prep.filter.kept, feature, cfg.prefix);
  if (samples.empty()) throw Error(ErrorKind::invalid_argument, "course " + course_b.name + " has no eligible student");
  std::vector<int> labels;
  for (const auto& s : samples) labels.push_back(s.label);
  const double acc = evaluate_accuracy(predict_labels(classifier, samples), labels);
  return {course_b.name,
          std::string(to_string(cfg.prefix.dimension)),
          cfg.prefix.value_string(),
          cfg.feature_label,
          std::string(to_string(classifier.kind)),
          "transfer",
          classifier.config.lstm.seed,
          acc,
          samples.size()};
}

}  // namespace clickseq
