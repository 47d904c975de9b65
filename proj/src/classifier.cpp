#include "clickseq/classifier.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace clickseq {
namespace {

using ojson = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr const char* kFormat = "clickseq-classifier/1";

void check_samples(const TrainedClassifier& model, const SequenceSample& s) {
  if (s.feature_set != model.feature_set) {
    throw Error(ErrorKind::schema, "sample feature set " + std::string(to_string(s.feature_set)) +
                                       " does not match the model's " + std::string(to_string(model.feature_set)));
  }
  if (s.tokens.empty()) throw Error(ErrorKind::invalid_argument, "empty input sequence");
  for (int t : s.tokens) {
    if (t < 0 || t >= model.vocab_size) throw Error(ErrorKind::schema, "token id outside the model vocabulary");
  }
}

std::vector<int> labels_of(std::span<const SequenceSample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

ojson vec_json(const Vector& v) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Vector vec_from(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorKind::schema, std::string("classifier file: ") + what + " is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

ojson scaler_json(const Standardizer& s) {
  ojson j;
  j["mean"] = vec_json(s.mean);
  j["std"] = vec_json(s.stddev);
  return j;
}

Standardizer scaler_from(const json& j) {
  Standardizer s;
  s.mean = vec_from(j.at("mean"), "scaler mean");
  s.stddev = vec_from(j.at("std"), "scaler std");
  if (s.mean.size() != s.stddev.size()) throw Error(ErrorKind::schema, "classifier file: scaler size mismatch");
  return s;
}

ojson config_json(const ClassifierConfig& c) {
  ojson j;
  const auto& l = c.lstm;
  j["lstm"] = {{"learning_rate", l.learning_rate}, {"beta1", l.beta1},       {"beta2", l.beta2},
               {"adam_eps", l.adam_eps},           {"epochs", l.epochs},     {"batch_size", l.batch_size},
               {"dropout_p", l.dropout_p},         {"seed", l.seed},         {"max_seq_len", l.max_seq_len},
               {"deterministic", l.deterministic}, {"threads", l.threads},   {"embed_dim", l.embed_dim},
               {"hidden_dim", l.hidden_dim}};
  j["svm"] = {{"lambda", c.svm.lambda}, {"epochs", c.svm.epochs}, {"seed", c.svm.seed}};
  const auto& m = c.mlp;
  j["mlp"] = {{"hidden", m.hidden},     {"epochs", m.epochs},     {"batch_size", m.batch_size},
              {"learning_rate", m.learning_rate}, {"beta1", m.beta1}, {"beta2", m.beta2},
              {"adam_eps", m.adam_eps}, {"seed", m.seed}};
  return j;
}

ClassifierConfig config_from(const json& j) {
  ClassifierConfig c;
  const auto& l = j.at("lstm");
  c.lstm.learning_rate = l.at("learning_rate");
  c.lstm.beta1 = l.at("beta1");
  c.lstm.beta2 = l.at("beta2");
  c.lstm.adam_eps = l.at("adam_eps");
  c.lstm.epochs = l.at("epochs");
  c.lstm.batch_size = l.at("batch_size");
  c.lstm.dropout_p = l.at("dropout_p");
  c.lstm.seed = l.at("seed");
  c.lstm.max_seq_len = l.at("max_seq_len");
  c.lstm.deterministic = l.at("deterministic");
  c.lstm.threads = l.at("threads");
  c.lstm.embed_dim = l.at("embed_dim");
  c.lstm.hidden_dim = l.at("hidden_dim");
  const auto& s = j.at("svm");
  c.svm.lambda = s.at("lambda");
  c.svm.epochs = s.at("epochs");
  c.svm.seed = s.at("seed");
  const auto& m = j.at("mlp");
  c.mlp.hidden = m.at("hidden");
  c.mlp.epochs = m.at("epochs");
  c.mlp.batch_size = m.at("batch_size");
  c.mlp.learning_rate = m.at("learning_rate");
  c.mlp.beta1 = m.at("beta1");
  c.mlp.beta2 = m.at("beta2");
  c.mlp.adam_eps = m.at("adam_eps");
  c.mlp.seed = m.at("seed");
  return c;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lstm: return "lstm";
    case ModelKind::svm_l: return "svm_l";
    case ModelKind::svm_c: return "svm_c";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "lstm") return ModelKind::lstm;
  if (name == "svm_l") return ModelKind::svm_l;
  if (name == "svm_c") return ModelKind::svm_c;
  if (name == "mlp") return ModelKind::mlp;
  throw Error(ErrorKind::invalid_argument, "unknown model kind '" + std::string(name) + "'");
}

std::uint64_t vocabulary_hash(const std::vector<std::string>& tokens) {
  std::string buf;
  for (const auto& t : tokens) {
    buf += t;
    buf.push_back('\n');
  }
  return fnv1a64(buf);
}

Matrix baseline_features(ModelKind kind, std::span<const SequenceSample> samples, int vocab_size) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (kind == ModelKind::svm_l) {
    Matrix x(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = length_feature(samples[static_cast<std::size_t>(i)]);
    return x;
  }
  if (kind == ModelKind::lstm) throw Error(ErrorKind::invalid_argument, "the LSTM has no dense feature view");
  Matrix x = Matrix::Zero(n, vocab_size);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto counts = count_vector(samples[static_cast<std::size_t>(i)], static_cast<std::size_t>(vocab_size));
    for (int v = 0; v < vocab_size; ++v) x(i, v) = counts[static_cast<std::size_t>(v)];
  }
  return x;
}

TrainedClassifier train_classifier(ModelKind kind, std::span<const SequenceSample> samples, int vocab_size,
                                   std::uint64_t vocab_hash, const ClassifierConfig& cfg,
                                   std::span<const SequenceSample> validation) {
  if (samples.empty()) throw Error(ErrorKind::invalid_argument, "no training samples");
  if (vocab_size < 1) throw Error(ErrorKind::invalid_argument, "vocabulary is empty");
  TrainedClassifier out;
  out.kind = kind;
  out.feature_set = samples.front().feature_set;
  out.vocab_size = vocab_size;
  out.vocab_hash = vocab_hash;
  out.config = cfg;
  for (const auto& s : samples) check_samples(out, s);
  const auto labels = labels_of(samples);

  switch (kind) {
    case ModelKind::lstm: {
      std::vector<std::vector<int>> seqs;
      seqs.reserve(samples.size());
      for (const auto& s : samples) seqs.push_back(s.tokens);
      std::vector<std::vector<int>> val_seqs;
      std::vector<int> val_labels;
      for (const auto& s : validation) {
        check_samples(out, s);
        val_seqs.push_back(s.tokens);
        val_labels.push_back(s.label);
      }
      const ValidationSet vset{val_seqs, val_labels};
      auto result = lstm_train(seqs, labels, vocab_size, cfg.lstm, validation.empty() ? nullptr : &vset);
      out.model = std::move(result.params);
      out.trace = std::move(result.trace);
      break;
    }
    case ModelKind::svm_l:
    case ModelKind::svm_c: {
      const auto fk = kind == ModelKind::svm_l ? LinearFeature::length : LinearFeature::counts;
      out.model = linear_svm_train(baseline_features(kind, samples, vocab_size), labels, fk, cfg.svm);
      break;
    }
    case ModelKind::mlp:
      out.model = mlp_train(baseline_features(kind, samples, vocab_size), labels, cfg.mlp);
      break;
  }
  return out;
}

double classifier_score(const TrainedClassifier& model, const SequenceSample& sample) {
  check_samples(model, sample);
  if (const auto* p = std::get_if<LstmParams>(&model.model)) {
    const std::size_t len = std::min(sample.tokens.size(), model.config.lstm.max_seq_len);
    return lstm_forward(std::span<const int>(sample.tokens.data(), len), *p);
  }
  const Matrix x = baseline_features(model.kind, std::span<const SequenceSample>(&sample, 1), model.vocab_size);
  if (const auto* lin = std::get_if<LinearModel>(&model.model)) return lin->margins(x)(0);
  return std::get<MlpParams>(model.model).predict_proba(x)(0);
}

int predict_label(const TrainedClassifier& model, const SequenceSample& sample) {
  const double s = classifier_score(model, sample);
  return std::holds_alternative<LinearModel>(model.model) ? label_from_margin(s) : label_from_probability(s);
}

std::vector<int> predict_labels(const TrainedClassifier& model, std::span<const SequenceSample> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(predict_label(model, s));
  return out;
}

std::string classifier_json(const TrainedClassifier& model) {
  ojson doc;
  doc["format"] = kFormat;
  doc["kind"] = std::string(to_string(model.kind));
  doc["feature_set"] = std::string(to_string(model.feature_set));
  doc["vocab_size"] = model.vocab_size;
  doc["vocab_hash"] = model.vocab_hash;
  if (const auto* p = std::get_if<LstmParams>(&model.model)) {
    doc["shape"] = {{"V", p->vocab_size()}, {"E", p->embed_dim()}, {"H", p->hidden_dim()}};
    doc["layout"] = "embedding,input_weights,recurrent_weights,gate_bias,output_weights,output_bias";
    doc["weights"] = vec_json(p->flat());
  } else if (const auto* lin = std::get_if<LinearModel>(&model.model)) {
    doc["feature_kind"] = std::string(to_string(lin->feature_kind));
    doc["standardized"] = true;
    doc["scaler"] = scaler_json(lin->scaler);
    doc["w"] = vec_json(lin->w);
    doc["b"] = lin->b;
  } else {
    const auto& m = std::get<MlpParams>(model.model);
    doc["feature_kind"] = "counts";
    doc["standardized"] = true;
    doc["scaler"] = scaler_json(m.scaler);
    doc["shape"] = {{"D", m.input_dim()}, {"hidden", m.hidden()}};
    doc["layout"] = "w1,b1,w2,b2";
    doc["weights"] = vec_json(m.flat());
  }
  doc["config"] = config_json(model.config);
  return doc.dump(1);
}

TrainedClassifier parse_classifier(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("classifier file: ") + e.what());
  }
  try {
    if (doc.value("format", "") != kFormat) throw Error(ErrorKind::schema, "classifier file: unknown format");
    TrainedClassifier out;
    out.kind = parse_model_kind(doc.at("kind").get<std::string>());
    out.feature_set = parse_feature_set(doc.at("feature_set").get<std::string>());
    out.vocab_size = doc.at("vocab_size");
    out.vocab_hash = doc.at("vocab_hash");
    out.config = config_from(doc.at("config"));
    if (out.kind == ModelKind::lstm) {
      const auto& sh = doc.at("shape");
      LstmParams p(sh.at("V"), sh.at("E"), sh.at("H"));
      const Vector w = vec_from(doc.at("weights"), "weights");
      if (w.size() != p.size()) throw Error(ErrorKind::schema, "classifier file: weight count mismatch");
      if (p.vocab_size() != out.vocab_size) throw Error(ErrorKind::schema, "classifier file: vocabulary mismatch");
      p.flat() = w;
      out.model = std::move(p);
    } else if (out.kind == ModelKind::mlp) {
      const auto& sh = doc.at("shape");
      MlpParams m(sh.at("D"), sh.at("hidden"));
      const Vector w = vec_from(doc.at("weights"), "weights");
      if (w.size() != m.flat().size()) throw Error(ErrorKind::schema, "classifier file: weight count mismatch");
      m.flat() = w;
      m.scaler = scaler_from(doc.at("scaler"));
      if (m.scaler.mean.size() != m.input_dim()) throw Error(ErrorKind::schema, "classifier file: scaler mismatch");
      out.model = std::move(m);
    } else {
      LinearModel lin;
      lin.feature_kind = out.kind == ModelKind::svm_l ? LinearFeature::length : LinearFeature::counts;
      lin.scaler = scaler_from(doc.at("scaler"));
      lin.w = vec_from(doc.at("w"), "w");
      lin.b = doc.at("b");
      if (lin.w.size() != lin.scaler.mean.size()) throw Error(ErrorKind::schema, "classifier file: scaler mismatch");
      out.model = std::move(lin);
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, std::string("classifier file: ") + e.what());
  }
}

void save_classifier(const TrainedClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << classifier_json(model) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
}

TrainedClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_classifier(buf.str());
}

void write_training_log(std::ostream& out, std::span<const EpochStats> trace) {
  out << "epoch,mean_loss,train_acc,val_acc\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << format_double(e.mean_loss) << ',' << format_double(e.train_acc) << ','
        << (e.val_acc ? format_double(*e.val_acc) : std::string()) << '\n';
  }
}

}  // namespace clickseq
