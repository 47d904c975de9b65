#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "clickseq/baselines.hpp"
#include "clickseq/features.hpp"
#include "clickseq/lstm.hpp"

namespace clickseq {

/// svm_l sees only the sequence length, svm_c and mlp see token counts.
enum class ModelKind { lstm, svm_l, svm_c, mlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ClassifierConfig {
  TrainConfig lstm;
  SvmConfig svm;
  MlpConfig mlp;
};

struct TrainedClassifier {
  ModelKind kind = ModelKind::lstm;
  FeatureSet feature_set = FeatureSet::category;
  int vocab_size = 0;
  std::uint64_t vocab_hash = 0;
  std::variant<LstmParams, LinearModel, MlpParams> model;
  ClassifierConfig config;
  std::vector<EpochStats> trace;  // LSTM only
};

/// Hash of an ordered token list, stored with a model so that inputs built
/// from a different vocabulary are rejected.
std::uint64_t vocabulary_hash(const std::vector<std::string>& tokens);

TrainedClassifier train_classifier(ModelKind kind, std::span<const SequenceSample> samples, int vocab_size,
                                   std::uint64_t vocab_hash, const ClassifierConfig& cfg,
                                   std::span<const SequenceSample> validation = {});

/// Dense feature rows for the non-sequential models.
Matrix baseline_features(ModelKind kind, std::span<const SequenceSample> samples, int vocab_size);

/// Probability of label 1 for sigmoid models, margin for the SVM.
double classifier_score(const TrainedClassifier& model, const SequenceSample& sample);

inline int label_from_probability(double p) { return p >= 0.5 ? 1 : 0; }
inline int label_from_margin(double m) { return m >= 0.0 ? 1 : 0; }

int predict_label(const TrainedClassifier& model, const SequenceSample& sample);
std::vector<int> predict_labels(const TrainedClassifier& model, std::span<const SequenceSample> samples);

std::string classifier_json(const TrainedClassifier& model);
TrainedClassifier parse_classifier(std::string_view json_text);
void save_classifier(const TrainedClassifier& model, const std::filesystem::path& path);
TrainedClassifier load_classifier(const std::filesystem::path& path);

/// Training log: epoch,mean_loss,train_acc,val_acc
void write_training_log(std::ostream& out, std::span<const EpochStats> trace);

}  // namespace clickseq
