#include "clickseq/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace clickseq {
namespace {

const ConfigKey* find_key(std::string_view name) {
  const auto& keys = config_keys();
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
  return it == keys.end() ? nullptr : &*it;
}

[[noreturn]] void bad_value(std::string_view key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::invalid_argument,
              "config key " + std::string(key) + ": '" + value + "' is not " + expected);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      // general
      {"seed", "0", "base seed for fitting, splitting, training and generation"},
      {"threads", "1", "worker threads; results do not depend on this value"},
      {"deterministic", "true", "fixed-order reductions (always on; recorded for provenance)"},
      {"out", "", "output directory; empty means runs/<command>-<config hash>"},
      // ingest
      {"clicks", "", "clickstream file (CSV student_id,timestamp,click_type or JSONL)"},
      {"format", "csv", "clickstream format: csv or jsonl"},
      {"grades", "", "grades CSV student_id,grade"},
      {"category_map", "data/category_map.csv", "category map CSV raw_prefix,category,super_group"},
      {"course_name", "course", "course label used in results"},
      {"gap_seconds", "3600", "a gap strictly longer than this starts a new session"},
      {"course_start", "", "course start (epoch seconds); empty means the earliest click"},
      {"course", "", "ingested course directory"},
      // behavior
      {"K", "10", "number of behavior states"},
      {"max_iter", "200", "maximum EM iterations"},
      {"tol", "1e-6", "relative log-likelihood change that stops EM"},
      {"epsilon", "1e-8", "probability floor for every fitted parameter"},
      {"max_restarts", "3", "empty-state re-seeds allowed per fit"},
      {"behavior_model", "", "behavior model JSON used for state features"},
      // features
      {"feature_set", "category", "raw, category or state"},
      {"dimension", "course_days", "prefix dimension: course_days, student_days, n_clicks, n_states"},
      {"value", "All", "prefix value: positive integer or All"},
      {"label_threshold", "0", "label is 1 when grade > threshold"},
      {"min_clicks", "101", "students with fewer clicks are excluded"},
      {"train_frac", "0.8", "share of eligible students in the train split"},
      {"ngram_orders", "1,3", "n-gram orders for analyze-ngrams"},
      {"top_k", "5", "n-grams reported per class"},
      // classifiers
      {"classifier", "lstm", "model kind: lstm, svm_l, svm_c, mlp"},
      {"lstm_learning_rate", "1e-3", "Adam step size"},
      {"lstm_beta1", "0.9", "Adam first-moment decay"},
      {"lstm_beta2", "0.999", "Adam second-moment decay"},
      {"lstm_eps", "1e-8", "Adam denominator constant"},
      {"lstm_epochs", "20", "training epochs"},
      {"lstm_batch_size", "32", "sequences per gradient step"},
      {"lstm_dropout", "0.5", "dropout on the pooled hidden vector during training"},
      {"lstm_max_seq_len", "2000", "sequences are cut to their first N tokens"},
      {"lstm_embed_dim", "32", "token embedding width"},
      {"lstm_hidden_dim", "64", "LSTM hidden width"},
      {"svm_lambda", "1e-4", "L2 weight of the linear SVM"},
      {"svm_epochs", "30", "SGD passes of the linear SVM"},
      {"mlp_hidden", "100", "hidden width of the MLP"},
      {"mlp_epochs", "100", "MLP training epochs"},
      {"mlp_batch_size", "32", "MLP minibatch size"},
      {"mlp_learning_rate", "1e-3", "MLP Adam step size"},
      {"classifier_model", "", "trained classifier JSON"},
      // evaluation
      {"eval_split", "test", "students scored by evaluate: train, test or all"},
      {"grid_models", "lstm,svm_c", "models in the grid"},
      {"grid_feature_sets", "raw,category,state", "feature sets in the grid; state expands per behavior model"},
      {"behavior_models", "", "comma-separated behavior model files for grid state features"},
      {"grid_dimensions", "course_days,student_days,n_clicks,n_states", "prefix dimensions in the grid"},
      {"values_course_days", "7,18,35,All", "course_days values"},
      {"values_student_days", "7,18,35,All", "student_days values"},
      {"values_n_clicks", "100,1000,1959,All", "n_clicks values"},
      {"values_n_states", "10,25,50,All", "n_states values (prefix length in sessions, not K)"},
      {"repeats", "1", "seeded repetitions per grid cell; 2 or more adds a t-test table"},
      {"grid_train_rows", "true", "also report training-split accuracy in the grid"},
      {"target_course", "", "course directory scored by transfer"},
      // synthetic data
      {"synth_preset", "default", "default, order_only or recovery"},
      {"synth_students", "2000", "students (default) or sequences (recovery)"},
      {"synth_pairs", "2500", "matched pairs for order_only"},
      {"synth_format", "csv", "clickstream format written by synth"},
      {"synth_permute_categories", "false", "scramble category semantics (negative control)"},
      {"synth_permute_seed", "1", "seed of the category permutation"},
      // plots
      {"results", "", "results CSV rendered by plot"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  parse(in, path.string());
}

void RunConfig::parse(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::parse, origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
}

void RunConfig::set(std::string_view key, std::string value) {
  if (!find_key(key)) throw Error(ErrorKind::invalid_argument, "unknown config key '" + std::string(key) + "'");
  values_[std::string(key)] = std::move(value);
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorKind::invalid_argument, "unknown config key '" + std::string(key) + "'");
  return it->second;
}

std::int64_t RunConfig::get_int(std::string_view key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::uint64_t RunConfig::get_uint(std::string_view key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a nonnegative integer");
  return out;
}

double RunConfig::get_double(std::string_view key) const {
  const auto& v = get(key);
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool RunConfig::get_bool(std::string_view key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& part : split(get(key), ',')) {
    auto t = trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<std::string> RunConfig::get_optional(std::string_view key) const {
  const auto& v = get(key);
  if (v.empty()) return std::nullopt;
  return v;
}

std::string RunConfig::echo() const {
  std::ostringstream out;
  for (const auto& k : config_keys()) out << k.name << '=' << values_.at(k.name) << '\n';
  return out.str();
}

std::uint64_t RunConfig::hash(std::string_view command) const {
  // The output location does not change what a run computes.
  std::string text = std::string(command) + '\n';
  for (const auto& k : config_keys()) {
    if (k.name != "out") text += k.name + '=' + values_.at(k.name) + '\n';
  }
  return fnv1a64(text);
}

FitConfig RunConfig::fit_config() const {
  FitConfig f;
  f.num_states = static_cast<int>(get_int("K"));
  f.max_iter = static_cast<int>(get_int("max_iter"));
  f.tol = get_double("tol");
  f.seed = get_uint("seed");
  f.epsilon = get_double("epsilon");
  f.threads = static_cast<int>(get_int("threads"));
  f.max_restarts = static_cast<int>(get_int("max_restarts"));
  return f;
}

ClassifierConfig RunConfig::classifier_config() const {
  ClassifierConfig c;
  auto& l = c.lstm;
  l.learning_rate = get_double("lstm_learning_rate");
  l.beta1 = get_double("lstm_beta1");
  l.beta2 = get_double("lstm_beta2");
  l.adam_eps = get_double("lstm_eps");
  l.epochs = static_cast<int>(get_int("lstm_epochs"));
  l.batch_size = static_cast<int>(get_int("lstm_batch_size"));
  l.dropout_p = get_double("lstm_dropout");
  l.seed = get_uint("seed");
  l.max_seq_len = static_cast<std::size_t>(get_uint("lstm_max_seq_len"));
  l.deterministic = get_bool("deterministic");
  l.threads = static_cast<int>(get_int("threads"));
  l.embed_dim = static_cast<int>(get_int("lstm_embed_dim"));
  l.hidden_dim = static_cast<int>(get_int("lstm_hidden_dim"));
  l.validate();
  c.svm.lambda = get_double("svm_lambda");
  c.svm.epochs = static_cast<int>(get_int("svm_epochs"));
  c.svm.seed = get_uint("seed");
  c.mlp.hidden = static_cast<int>(get_int("mlp_hidden"));
  c.mlp.epochs = static_cast<int>(get_int("mlp_epochs"));
  c.mlp.batch_size = static_cast<int>(get_int("mlp_batch_size"));
  c.mlp.learning_rate = get_double("mlp_learning_rate");
  c.mlp.seed = get_uint("seed");
  return c;
}

GridConfig RunConfig::grid_config() const {
  GridConfig g;
  g.models.clear();
  for (const auto& m : get_list("grid_models")) g.models.push_back(parse_model_kind(m));
  g.dimensions.clear();
  for (const auto& d : get_list("grid_dimensions")) {
    const auto dim = parse_prefix_dimension(d);
    g.dimensions.push_back(dim);
    std::vector<std::optional<int>> values;
    for (const auto& v : get_list("values_" + std::string(to_string(dim)))) values.push_back(parse_prefix_value(v));
    g.values[dim] = values;
  }
  g.label_threshold = get_double("label_threshold");
  g.min_clicks = static_cast<int>(get_int("min_clicks"));
  g.train_frac = get_double("train_frac");
  g.seed = get_uint("seed");
  g.repeats = static_cast<int>(get_int("repeats"));
  g.emit_train_rows = get_bool("grid_train_rows");
  g.classifier = classifier_config();
  return g;
}

std::optional<int> parse_prefix_value(std::string_view text) {
  const std::string t = trim(text);
  if (t == "All" || t == "all") return std::nullopt;
  int v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || v < 1) {
    throw Error(ErrorKind::invalid_argument, "prefix value '" + t + "' is neither a positive integer nor All");
  }
  return v;
}

}  // namespace clickseq
