// Command-line front end. Every command reads flat key=value settings (from
// --config and --key value flags), writes into one output directory and
// echoes the resolved settings there as config.txt.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "clickseq/behavior.hpp"
#include "clickseq/classifier.hpp"
#include "clickseq/config.hpp"
#include "clickseq/evaluation.hpp"
#include "clickseq/experiment.hpp"
#include "clickseq/features.hpp"
#include "clickseq/ingest.hpp"
#include "clickseq/report.hpp"
#include "clickseq/synthgen.hpp"

#ifndef CLICKSEQ_SOURCE_DIR
#define CLICKSEQ_SOURCE_DIR "."
#endif

namespace fs = std::filesystem;
using namespace clickseq;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Context {
  std::string command;
  RunConfig cfg;
  fs::path out;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string require(const RunConfig& cfg, const char* key) {
  const auto v = cfg.get_optional(key);
  if (!v) throw Error(ErrorKind::invalid_argument, std::string("missing required setting '") + key + "'");
  return *v;
}

fs::path existing(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw Error(ErrorKind::io, std::string(what) + " not found: " + path);
  return path;
}

/// The shipped map is also found when running outside the source tree.
fs::path resolve_category_map(const RunConfig& cfg) {
  const fs::path p = cfg.get("category_map");
  if (fs::exists(p)) return p;
  if (p.is_relative() && fs::exists(fs::path(CLICKSEQ_SOURCE_DIR) / p)) return fs::path(CLICKSEQ_SOURCE_DIR) / p;
  throw Error(ErrorKind::io, "category map not found: " + p.string());
}

/// Writes via a temporary file and a rename so readers never see partial output.
void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::io, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

template <typename Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream buf;
  fn(buf);
  write_file(path, buf.str());
}

CategoryMap course_category_map(const RunConfig& cfg, const fs::path& course_dir) {
  const fs::path local = course_dir / "category_map.csv";
  return CategoryMap::load(fs::exists(local) ? local : resolve_category_map(cfg));
}

Course load_course_key(const RunConfig& cfg, const char* key) {
  return read_course(existing(require(cfg, key), "course directory"));
}

std::optional<BehaviorModel> optional_behavior(const RunConfig& cfg) {
  const auto p = cfg.get_optional("behavior_model");
  if (!p) return std::nullopt;
  return load_behavior_model(existing(*p, "behavior model"));
}

FeatureSpec feature_spec(FeatureSet fs_kind, const std::optional<BehaviorModel>& behavior) {
  if (fs_kind != FeatureSet::state) return FeatureSpec::clicks(fs_kind);
  if (!behavior) throw Error(ErrorKind::invalid_argument, "state features need behavior_model");
  return FeatureSpec::states(*behavior);
}

PrefixSpec prefix_from(const RunConfig& cfg) {
  return {parse_prefix_dimension(cfg.get("dimension")), parse_prefix_value(cfg.get("value"))};
}

PreparedCourse prepare(const RunConfig& cfg, const Course& course) {
  return prepare_course(course, cfg.get_double("label_threshold"), static_cast<int>(cfg.get_int("min_clicks")),
                        cfg.get_double("train_frac"), cfg.get_uint("seed"));
}

std::vector<int> labels_of(const std::vector<SequenceSample>& samples) {
  std::vector<int> out;
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

// ---------------------------------------------------------------- commands

void cmd_ingest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto map = CategoryMap::load(resolve_category_map(cfg));
  auto log = parse_log_file(existing(require(cfg, "clicks"), "clickstream"), parse_log_format(cfg.get("format")));
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << '\n';
  GradeTable grades;
  if (const auto g = cfg.get_optional("grades")) grades = load_grades(existing(*g, "grades file"));
  IngestOptions opts;
  opts.name = cfg.get("course_name");
  opts.gap_seconds = cfg.get_int("gap_seconds");
  if (cfg.get_optional("course_start")) opts.start_ts = cfg.get_int("course_start");
  const Course course = build_course(std::move(log), map, grades, opts);
  write_course(course, ctx.out);
  write_with(ctx.out / "category_map.csv", [&](std::ostream& o) { map.write(o); });
  std::size_t events = 0, sessions = 0, graded = 0;
  for (const auto& s : course.students) {
    events += s.events.size();
    sessions += s.sessions.size();
    graded += s.grade.has_value();
  }
  std::cout << "students " << course.students.size() << ", events " << events << ", sessions " << sessions
            << ", graded " << graded << ", malformed rows " << course.malformed_rows << ", malformed grade rows "
            << grades.malformed_rows << '\n';
}

void write_trace(const fs::path& path, const FitTrace& trace) {
  write_with(path, [&](std::ostream& o) {
    o << "iteration,loglik,restart\n";
    for (std::size_t i = 0; i < trace.loglik.size(); ++i) {
      const bool restart = std::find(trace.restart_iterations.begin(), trace.restart_iterations.end(),
                                     static_cast<int>(i)) != trace.restart_iterations.end();
      o << i << ',' << format_double(trace.loglik[i]) << ',' << (restart ? 1 : 0) << '\n';
    }
  });
}

void cmd_fit(Context& ctx, bool hmm) {
  const auto& cfg = ctx.cfg;
  const fs::path course_dir = existing(require(cfg, "course"), "course directory");
  const Course course = read_course(course_dir);
  const auto map = course_category_map(cfg, course_dir);
  const FitConfig fit = cfg.fit_config();
  BehaviorModel model;
  model.category_names = course.category_names;
  model.seed = fit.seed;
  FitTrace trace;
  if (hmm) {
    std::vector<CountSequence> seqs;
    for (const auto& s : course.students) {
      if (s.sessions.empty()) continue;
      CountSequence seq;
      for (const auto& sess : s.sessions) seq.push_back(sess.counts);
      seqs.push_back(std::move(seq));
    }
    auto result = hmm_fit(seqs, fit);
    model.params = result.params;
    trace = std::move(result.trace);
  } else {
    std::vector<CountVector> sessions;
    for (const auto& s : course.students) {
      for (const auto& sess : s.sessions) sessions.push_back(sess.counts);
    }
    auto result = mmm_fit(sessions, fit);
    model.params = result.params;
    trace = std::move(result.trace);
  }
  model.final_loglik = trace.loglik.empty() ? 0.0 : trace.loglik.back();
  write_file(ctx.out / "model.json", behavior_model_json(model) + "\n");
  write_trace(ctx.out / "trace.csv", trace);
  const Matrix& emission = hmm ? std::get<HmmParams>(model.params).emission : std::get<MmmParams>(model.params).theta;
  write_with(ctx.out / "behaviors.csv", [&](std::ostream& o) { write_behavior_csv(o, summarize_behaviors(emission, map)); });
  if (hmm) {
    write_with(ctx.out / "transitions.csv",
               [&](std::ostream& o) { write_transition_csv(o, transition_report(std::get<HmmParams>(model.params))); });
  }
  std::cout << model.kind() << " K=" << model.num_states() << ": " << trace.iterations << " iterations, "
            << (trace.converged ? "converged" : "not converged") << ", restarts " << trace.restart_iterations.size()
            << ", final loglik " << format_double(model.final_loglik) << '\n';
}

void cmd_decode(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  const auto model = load_behavior_model(existing(require(cfg, "behavior_model"), "behavior model"));
  write_with(ctx.out / "states.csv", [&](std::ostream& o) {
    o << "student_id,session,start_ts,state\n";
    for (const auto& s : course.students) {
      const auto states = decode_states(model, s.sessions);
      for (std::size_t i = 0; i < states.size(); ++i) {
        o << csv_escape(s.student_id) << ',' << i << ',' << s.sessions[i].start_ts << ',' << states[i] << '\n';
      }
    }
  });
  std::cout << "decoded " << course.students.size() << " students with the " << model.kind() << " model\n";
}

void cmd_extract(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  const auto behavior = optional_behavior(cfg);
  const auto feature = feature_spec(parse_feature_set(cfg.get("feature_set")), behavior);
  const PreparedCourse prep = prepare(cfg, course);
  std::size_t excluded = 0;
  const auto samples = cell_samples(prep, prep.filter.kept, feature, prefix_from(cfg), &excluded);
  write_with(ctx.out / "features.csv", [&](std::ostream& o) { write_feature_csv(o, samples); });
  if (feature.feature_set == FeatureSet::raw) {
    write_with(ctx.out / "vocabulary.csv", [&](std::ostream& o) {
      o << "id,token\n";
      for (std::size_t i = 0; i < prep.raw_vocab.size(); ++i) o << i << ',' << csv_escape(prep.raw_vocab.tokens()[i]) << '\n';
    });
  }
  std::cout << samples.size() << " samples written, " << excluded << " excluded by an empty prefix, "
            << prep.filter.missing_grade << " without grade, " << prep.filter.too_few_clicks
            << " below the click minimum\n";
}

TokenNamer namer_for(const FeatureSpec& feature, const PreparedCourse& prep) {
  switch (feature.feature_set) {
    case FeatureSet::raw: return [&prep](int t) { return prep.raw_vocab.token(t); };
    case FeatureSet::category:
      return [&prep](int t) { return prep.course->category_names.at(static_cast<std::size_t>(t)); };
    case FeatureSet::state: return [](int t) { return "state" + std::to_string(t); };
  }
  return {};
}

void cmd_ngrams(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  const auto behavior = optional_behavior(cfg);
  const auto feature = feature_spec(parse_feature_set(cfg.get("feature_set")), behavior);
  const PreparedCourse prep = prepare(cfg, course);
  const auto samples = cell_samples(prep, prep.filter.kept, feature, {PrefixDimension::course_days, std::nullopt});
  const int top_k = static_cast<int>(cfg.get_int("top_k"));
  const auto namer = namer_for(feature, prep);
  for (const auto& n_text : cfg.get_list("ngram_orders")) {
    const int n = std::stoi(n_text);
    const auto report = ngram_indicative(samples, n, top_k);
    write_with(ctx.out / ("ngrams_n" + std::to_string(n) + ".csv"),
               [&](std::ostream& o) { write_ngram_csv(o, report, namer); });
  }
  if (behavior) {
    std::vector<StudentLog> students;
    std::vector<std::vector<int>> states;
    std::vector<int> labels;
    for (std::size_t i : prep.filter.kept) {
      students.push_back(course.students[i]);
      states.push_back(decode_states(*behavior, course.students[i].sessions));
      labels.push_back(prep.labels[i]);
    }
    const auto reports = per_state_unigrams(students, states, labels, behavior->num_states(), top_k);
    write_with(ctx.out / "state_unigrams.csv", [&](std::ostream& o) {
      write_state_ngram_csv(o, reports, [&](int c) { return course.category_names.at(static_cast<std::size_t>(c)); });
    });
  }
  std::cout << "n-gram tables written for " << samples.size() << " students\n";
}

void cmd_train(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  const auto behavior = optional_behavior(cfg);
  const auto feature = feature_spec(parse_feature_set(cfg.get("feature_set")), behavior);
  const PreparedCourse prep = prepare(cfg, course);
  const PrefixSpec prefix = prefix_from(cfg);
  const auto train = cell_samples(prep, prep.split.train, feature, prefix);
  const auto test = cell_samples(prep, prep.split.test, feature, prefix);
  const auto kind = parse_model_kind(cfg.get("classifier"));
  const auto model = train_classifier(kind, train, feature_vocab_size(prep, feature), feature_vocab_hash(prep, feature),
                                      cfg.classifier_config(), test);
  save_classifier(model, ctx.out / "classifier.json");
  if (!model.trace.empty()) {
    write_with(ctx.out / "training_log.csv", [&](std::ostream& o) { write_training_log(o, model.trace); });
  }
  write_with(ctx.out / "split.csv", [&](std::ostream& o) {
    o << "student_id,split\n";
    for (std::size_t i : prep.split.train) o << csv_escape(course.students[i].student_id) << ",train\n";
    for (std::size_t i : prep.split.test) o << csv_escape(course.students[i].student_id) << ",test\n";
  });
  std::vector<ExperimentCell> cells;
  for (const auto* part : {&train, &test}) {
    if (part->empty()) continue;
    const double acc = evaluate_accuracy(predict_labels(model, *part), labels_of(*part));
    cells.push_back({course.name, std::string(to_string(prefix.dimension)), prefix.value_string(), feature.label,
                     std::string(to_string(kind)), part == &train ? "train" : "test", cfg.get_uint("seed"), acc,
                     part->size()});
    std::cout << cells.back().split << " accuracy " << format_double(acc) << " (n=" << part->size() << ")\n";
  }
  write_with(ctx.out / "results.csv", [&](std::ostream& o) { write_results_csv(o, cells); });
}

void cmd_evaluate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  const auto model = load_classifier(existing(require(cfg, "classifier_model"), "classifier"));
  const auto behavior = optional_behavior(cfg);
  const auto feature = feature_spec(model.feature_set, behavior);
  const PreparedCourse prep = prepare(cfg, course);
  if (feature_vocab_hash(prep, feature) != model.vocab_hash) {
    throw Error(ErrorKind::schema, "the course vocabulary differs from the one the classifier was trained on");
  }
  const std::string which = cfg.get("eval_split");
  std::vector<std::size_t> ids;
  if (which == "train") ids = prep.split.train;
  else if (which == "test") ids = prep.split.test;
  else if (which == "all") ids = prep.filter.kept;
  else throw Error(ErrorKind::invalid_argument, "eval_split must be train, test or all");
  const PrefixSpec prefix = prefix_from(cfg);
  std::size_t excluded = 0;
  const auto samples = cell_samples(prep, ids, feature, prefix, &excluded);
  if (samples.empty()) throw Error(ErrorKind::invalid_argument, "no student to evaluate");
  const auto preds = predict_labels(model, samples);
  write_with(ctx.out / "predictions.csv", [&](std::ostream& o) {
    o << "student_id,label,score,prediction\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      o << csv_escape(samples[i].student_id) << ',' << samples[i].label << ','
        << format_double(classifier_score(model, samples[i])) << ',' << preds[i] << '\n';
    }
  });
  const double acc = evaluate_accuracy(preds, labels_of(samples));
  const std::vector<ExperimentCell> cells{{course.name, std::string(to_string(prefix.dimension)), prefix.value_string(),
                                           feature.label, std::string(to_string(model.kind)), which,
                                           model.config.lstm.seed, acc, samples.size()}};
  write_with(ctx.out / "results.csv", [&](std::ostream& o) { write_results_csv(o, cells); });
  std::cout << which << " accuracy " << format_double(acc) << " (n=" << samples.size() << ", excluded " << excluded
            << ")\n";
}

void cmd_grid(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Course course = load_course_key(cfg, "course");
  std::vector<BehaviorModel> behaviors;
  for (const auto& p : cfg.get_list("behavior_models")) behaviors.push_back(load_behavior_model(existing(p, "behavior model")));
  if (behaviors.empty()) {
    if (const auto b = optional_behavior(cfg)) behaviors.push_back(*b);
  }
  std::vector<FeatureSpec> features;
  for (const auto& name : cfg.get_list("grid_feature_sets")) {
    const auto fs_kind = parse_feature_set(name);
    if (fs_kind != FeatureSet::state) {
      features.push_back(FeatureSpec::clicks(fs_kind));
      continue;
    }
    if (behaviors.empty()) throw Error(ErrorKind::invalid_argument, "state features need behavior_models");
    for (const auto& b : behaviors) features.push_back(FeatureSpec::states(b));
  }
  GridConfig grid = cfg.grid_config();
  std::ofstream log_file(ctx.out / "grid_log.txt");
  grid.log = [&](const std::string& line) {
    std::cerr << line << '\n';
    log_file << line << '\n';
  };
  const GridResult result = run_experiment_grid(course, features, grid);
  write_with(ctx.out / "results.csv", [&](std::ostream& o) { write_results_csv(o, result.cells); });
  write_with(ctx.out / "skipped.csv", [&](std::ostream& o) { write_skipped_csv(o, result.skipped); });
  write_with(ctx.out / "exclusions.csv", [&](std::ostream& o) { write_exclusions_csv(o, result.exclusions); });
  if (grid.repeats >= 2) {
    write_with(ctx.out / "significance.csv", [&](std::ostream& o) { write_significance_csv(o, result.significance); });
  }
  std::cout << result.cells.size() << " result rows, " << result.skipped.size() << " skipped combinations\n";
}

void cmd_transfer(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto model = load_classifier(existing(require(cfg, "classifier_model"), "classifier"));
  const auto behavior = load_behavior_model(existing(require(cfg, "behavior_model"), "behavior model"));
  const Course target = load_course_key(cfg, "target_course");
  TransferConfig tc;
  tc.label_threshold = cfg.get_double("label_threshold");
  tc.min_clicks = static_cast<int>(cfg.get_int("min_clicks"));
  tc.prefix = prefix_from(cfg);
  tc.feature_label = std::string(behavior.kind()) + "_state";
  const auto cell = transfer_evaluate(model, behavior, target, tc);
  write_with(ctx.out / "results.csv", [&](std::ostream& o) { write_results_csv(o, std::span(&cell, 1)); });
  std::cout << "transfer accuracy on " << target.name << ": " << format_double(cell.accuracy) << " (n=" << cell.n
            << ")\n";
}

void cmd_synth(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string preset = cfg.get("synth_preset");
  const auto seed = cfg.get_uint("seed");
  const auto format = parse_log_format(cfg.get("synth_format"));
  const int n = static_cast<int>(cfg.get_int("synth_students"));
  GeneratorSpec spec;
  SyntheticCourse course;
  std::optional<CategoryMap> map;
  if (preset == "recovery") {
    spec = recovery_spec(seed, n);
    map = recovery_category_map();
  } else {
    map = CategoryMap::load(resolve_category_map(cfg));
    spec = default_spec(*map, seed, n);
  }
  if (cfg.get_bool("synth_permute_categories")) spec = permute_categories(spec, cfg.get_uint("synth_permute_seed"));
  if (preset == "order_only") {
    OrderOnlySpec os;
    os.seed = seed;
    os.pairs = static_cast<int>(cfg.get_int("synth_pairs"));
    course = generate_order_only_pair(spec, os);
  } else if (preset == "default" || preset == "recovery") {
    course = generate_course(spec);
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown synth_preset '" + preset + "'");
  }
  write_synthetic_course(ctx.out, course, spec, format);
  write_with(ctx.out / "category_map.csv", [&](std::ostream& o) { map->write(o); });
  std::cout << "generated " << course.truth.size() << " students, " << course.events.size() << " clicks\n";
}

void cmd_plot(Context& ctx) {
  const auto cells = load_results_csv(existing(require(ctx.cfg, "results"), "results file"));
  const auto paths = write_plots(cells, ctx.out);
  for (const auto& p : paths) std::cout << p.string() << '\n';
}

void cmd_version() {
  std::cout << "clickseq " << kVersion << '\n'
            << "course-directory clickseq-course/1\n"
            << "behavior-model json kind|K|C|pi|A|B|theta|category_names|seed|final_loglik\n"
            << "classifier clickseq-classifier/1\n"
            << "results-csv course,dimension,value,feature_set,model,split,seed,accuracy,n\n"
            << "significance-csv config_a,config_b,t,df,p,significant@0.05\n"
            << "features-csv student_id,label,length,tokens\n"
            << "ngram-csv class,rank,ngram,frequency,rate_per_student,rate_difference\n"
            << "training-log-csv epoch,mean_loss,train_acc,val_acc\n"
            << "synth-spec clickseq-synth-spec/1\n"
            << "synth-truth clickseq-synth-truth/1\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clickseq: session behavior models and outcome prediction from clickstreams"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  const std::vector<std::pair<std::string, std::string>> commands{
      {"ingest", "parse a clickstream, categorize clicks and segment sessions"},
      {"fit-mmm", "fit a multinomial mixture over sessions"},
      {"fit-hmm", "fit a hidden Markov model over session sequences"},
      {"decode", "assign a behavior state to every session"},
      {"extract", "dump prefix feature sequences"},
      {"analyze-ngrams", "rank indicative n-grams per outcome class"},
      {"train", "train one classifier on the train split"},
      {"evaluate", "score a trained classifier"},
      {"grid", "run the prefix-dimension experiment grid"},
      {"transfer", "score a classifier on another course"},
      {"synth", "generate a synthetic course"},
      {"plot", "render accuracy curves from a results CSV"},
      {"version", "print file format identifiers"},
  };

  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::map<std::string, CLI::Option*> options;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    subs.push_back(sub);
    if (name == "version") continue;
    sub->add_option("--config", config_path, "key=value settings file");
    for (const auto& key : config_keys()) {
      auto* opt = sub->add_option("--" + key.name, overrides[key.name], key.doc);
      opt->default_str(key.default_value.empty() ? "\"\"" : key.default_value);
      options[name + "/" + key.name] = opt;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid_argument: " << e.what() << '\n';
    return 2;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs) {
    if (s->parsed()) chosen = s;
  }
  const std::string command = chosen->get_name();
  if (command == "version") {
    cmd_version();
    return 0;
  }

  try {
    Context ctx{command, {}, {}};
    if (!config_path.empty()) ctx.cfg.load_file(config_path);
    for (const auto& key : config_keys()) {
      if (options.at(command + "/" + key.name)->count() > 0) ctx.cfg.set(key.name, overrides[key.name]);
    }
    const auto out = ctx.cfg.get_optional("out");
    ctx.out = out ? fs::path(*out) : fs::path("runs") / (command + "-" + hex(ctx.cfg.hash(command)));
    fs::create_directories(ctx.out);
    write_file(ctx.out / "config.txt", ctx.cfg.echo());

    if (command == "ingest") cmd_ingest(ctx);
    else if (command == "fit-mmm") cmd_fit(ctx, false);
    else if (command == "fit-hmm") cmd_fit(ctx, true);
    else if (command == "decode") cmd_decode(ctx);
    else if (command == "extract") cmd_extract(ctx);
    else if (command == "analyze-ngrams") cmd_ngrams(ctx);
    else if (command == "train") cmd_train(ctx);
    else if (command == "evaluate") cmd_evaluate(ctx);
    else if (command == "grid") cmd_grid(ctx);
    else if (command == "transfer") cmd_transfer(ctx);
    else if (command == "synth") cmd_synth(ctx);
    else if (command == "plot") cmd_plot(ctx);
    std::cerr << "output: " << ctx.out.string() << '\n';
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 3;
  }
}
