#include "clickseq/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace clickseq {

std::string_view to_string(FeatureSet fs) {
  switch (fs) {
    case FeatureSet::raw: return "raw";
    case FeatureSet::category: return "category";
    case FeatureSet::state: return "state";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
  if (name == "raw") return FeatureSet::raw;
  if (name == "category") return FeatureSet::category;
  if (name == "state") return FeatureSet::state;
  throw Error(ErrorKind::invalid_argument, "unknown feature set: " + std::string(name));
}

std::string_view to_string(PrefixDimension dim) {
  switch (dim) {
    case PrefixDimension::course_days: return "course_days";
    case PrefixDimension::student_days: return "student_days";
    case PrefixDimension::n_clicks: return "n_clicks";
    case PrefixDimension::n_states: return "n_states";
  }
  return "?";
}

PrefixDimension parse_prefix_dimension(std::string_view name) {
  if (name == "course_days") return PrefixDimension::course_days;
  if (name == "student_days") return PrefixDimension::student_days;
  if (name == "n_clicks") return PrefixDimension::n_clicks;
  if (name == "n_states") return PrefixDimension::n_states;
  throw Error(ErrorKind::invalid_argument, "unknown prefix dimension: " + std::string(name));
}

bool prefix_valid(PrefixDimension dim, FeatureSet fs) {
  if (dim == PrefixDimension::n_states) return fs == FeatureSet::state;
  if (dim == PrefixDimension::n_clicks) return fs != FeatureSet::state;
  return true;
}

namespace {

void check_spec(const PrefixSpec& spec, FeatureSet fs) {
  if (!prefix_valid(spec.dimension, fs)) {
    throw Error(ErrorKind::invalid_argument, std::string(to_string(spec.dimension)) + " is not valid for " +
                                                 std::string(to_string(fs)) + " features");
  }
  if (spec.value && *spec.value < 1) throw Error(ErrorKind::invalid_argument, "prefix value must be >= 1");
}

std::int64_t time_bound(const PrefixSpec& spec, std::int64_t course_start, std::int64_t first_click) {
  const std::int64_t anchor = spec.dimension == PrefixDimension::course_days ? course_start : first_click;
  return anchor + kSecondsPerDay * static_cast<std::int64_t>(*spec.value);
}

bool is_time_dimension(PrefixDimension d) {
  return d == PrefixDimension::course_days || d == PrefixDimension::student_days;
}

}  // namespace

std::optional<SequenceSample> truncate_prefix(const SequenceSample& sample, const PrefixSpec& spec) {
  check_spec(spec, sample.feature_set);
  if (spec.is_all()) {
    if (sample.tokens.empty()) return std::nullopt;
    return sample;
  }
  std::size_t keep = 0;
  if (is_time_dimension(spec.dimension)) {
    const auto bound = time_bound(spec, sample.course_start_ts, sample.first_click_ts);
    keep = static_cast<std::size_t>(
        std::upper_bound(sample.token_ts.begin(), sample.token_ts.end(), bound) - sample.token_ts.begin());
  } else {
    keep = std::min(sample.tokens.size(), static_cast<std::size_t>(*spec.value));
  }
  if (keep == 0) return std::nullopt;
  SequenceSample out = sample;
  out.tokens.resize(keep);
  out.token_ts.resize(keep);
  return out;
}

Vocabulary build_raw_vocabulary(const Course& course) {
  Vocabulary v;
  for (const auto& s : course.students) {
    for (const auto& ev : s.events) v.add(ev.raw_type);
  }
  return v;
}

namespace {

SequenceSample sample_header(const StudentLog& student, FeatureSet fs, std::int64_t course_start, int label) {
  SequenceSample s;
  s.student_id = student.student_id;
  s.feature_set = fs;
  s.label = label;
  s.course_start_ts = course_start;
  return s;
}

}  // namespace

std::optional<SequenceSample> build_sequence(const StudentLog& student, FeatureSet fs, const SequenceContext& ctx,
                                             int label) {
  if (student.sessions.empty() || student.events.empty()) return std::nullopt;
  SequenceSample s = sample_header(student, fs, ctx.course_start_ts, label);
  switch (fs) {
    case FeatureSet::raw: {
      if (!ctx.raw_vocab) throw Error(ErrorKind::invalid_argument, "raw features need a vocabulary");
      for (const auto& ev : student.events) {
        const auto id = ctx.raw_vocab->id(ev.raw_type);
        if (!id) throw Error(ErrorKind::invalid_argument, "raw click type outside the vocabulary: " + ev.raw_type);
        s.tokens.push_back(*id);
        s.token_ts.push_back(ev.timestamp);
      }
      break;
    }
    case FeatureSet::category:
      for (const auto& ev : student.events) {
        if (ev.category_id < 0) throw Error(ErrorKind::invalid_argument, "uncategorized event");
        s.tokens.push_back(ev.category_id);
        s.token_ts.push_back(ev.timestamp);
      }
      break;
    case FeatureSet::state: {
      if (!ctx.behavior) throw Error(ErrorKind::invalid_argument, "state features need a behavior model");
      s.tokens = decode_states(*ctx.behavior, student.sessions);
      for (const auto& sess : student.sessions) s.token_ts.push_back(sess.start_ts);
      break;
    }
  }
  s.first_click_ts = s.token_ts.front();
  return s;
}

std::optional<SequenceSample> build_state_prefix(const StudentLog& student, const BehaviorModel& model,
                                                 const PrefixSpec& spec, std::int64_t course_start_ts,
                                                 std::int64_t gap_seconds, int label) {
  check_spec(spec, FeatureSet::state);
  if (student.events.empty()) return std::nullopt;
  std::vector<Session> sessions;
  if (is_time_dimension(spec.dimension) && !spec.is_all()) {
    const auto bound = time_bound(spec, course_start_ts, student.events.front().timestamp);
    const auto end = std::upper_bound(student.events.begin(), student.events.end(), bound,
                                      [](std::int64_t b, const ClickEvent& ev) { return b < ev.timestamp; });
    const std::span<const ClickEvent> kept(student.events.data(), static_cast<std::size_t>(end - student.events.begin()));
    sessions = segment_sessions(kept, model.num_categories(), gap_seconds);
  } else {
    sessions = student.sessions;
    if (spec.dimension == PrefixDimension::n_states && spec.value) {
      sessions.resize(std::min(sessions.size(), static_cast<std::size_t>(*spec.value)));
    }
  }
  if (sessions.empty()) return std::nullopt;
  SequenceSample s = sample_header(student, FeatureSet::state, course_start_ts, label);
  s.tokens = decode_states(model, sessions);
  for (const auto& sess : sessions) s.token_ts.push_back(sess.start_ts);
  s.first_click_ts = s.token_ts.front();
  return s;
}

std::vector<int> count_vector(const SequenceSample& sample, std::size_t vocab_size) {
  std::vector<int> counts(vocab_size, 0);
  for (int t : sample.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      throw Error(ErrorKind::invalid_argument, "token id outside the vocabulary");
    }
    ++counts[static_cast<std::size_t>(t)];
  }
  return counts;
}

int length_feature(const SequenceSample& sample) { return static_cast<int>(sample.tokens.size()); }

std::map<std::vector<int>, long> ngram_counts(std::span<const SequenceSample> samples, int n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "n-gram order must be >= 1");
  std::map<std::vector<int>, long> counts;
  const auto nn = static_cast<std::size_t>(n);
  for (const auto& s : samples) {
    if (s.tokens.size() < nn) continue;
    for (std::size_t i = 0; i + nn <= s.tokens.size(); ++i) {
      ++counts[std::vector<int>(s.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                s.tokens.begin() + static_cast<std::ptrdiff_t>(i + nn))];
    }
  }
  return counts;
}

NgramReport ngram_indicative(std::span<const SequenceSample> samples, int n, int top_k) {
  NgramReport report;
  report.n = n;
  std::array<std::vector<SequenceSample>, 2> split;
  for (const auto& s : samples) {
    if (s.label != 0 && s.label != 1) throw Error(ErrorKind::invalid_argument, "label must be 0 or 1");
    if (!samples.empty() && s.feature_set != samples.front().feature_set) {
      throw Error(ErrorKind::invalid_argument, "n-gram samples must share a feature set");
    }
    split[static_cast<std::size_t>(s.label)].push_back(s);
  }
  std::array<std::map<std::vector<int>, long>, 2> counts;
  for (std::size_t c = 0; c < 2; ++c) {
    report.class_sizes[c] = split[c].size();
    counts[c] = ngram_counts(split[c], n);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::pair<std::vector<int>, long>> ranked(counts[c].begin(), counts[c].end());
    // map order is lexicographic, so the stable sort breaks ties by n-gram
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t other = 1 - c;
    for (std::size_t r = 0; r < ranked.size() && r < static_cast<std::size_t>(top_k); ++r) {
      NgramEntry e;
      e.ngram = ranked[r].first;
      e.frequency = ranked[r].second;
      e.rate_per_student = static_cast<double>(e.frequency) / static_cast<double>(report.class_sizes[c]);
      const auto it = counts[other].find(e.ngram);
      const long of = it == counts[other].end() ? 0 : it->second;
      e.other_class_rate =
          report.class_sizes[other] ? static_cast<double>(of) / static_cast<double>(report.class_sizes[other]) : 0.0;
      report.by_class[c].push_back(std::move(e));
    }
  }
  return report;
}

std::vector<NgramReport> per_state_unigrams(std::span<const StudentLog> students,
                                            std::span<const std::vector<int>> states,
                                            std::span<const int> labels, int num_states, int top_k) {
  if (students.size() != states.size() || students.size() != labels.size()) {
    throw Error(ErrorKind::invalid_argument, "students, states and labels differ in length");
  }
  std::vector<NgramReport> out;
  for (int k = 0; k < num_states; ++k) {
    std::vector<SequenceSample> per_student;
    for (std::size_t i = 0; i < students.size(); ++i) {
      SequenceSample s;
      s.student_id = students[i].student_id;
      s.feature_set = FeatureSet::category;
      s.label = labels[i];
      const auto& sess = students[i].sessions;
      if (sess.size() != states[i].size()) throw Error(ErrorKind::invalid_argument, "state path length mismatch");
      for (std::size_t j = 0; j < sess.size(); ++j) {
        if (states[i][j] != k) continue;
        s.tokens.insert(s.tokens.end(), sess[j].clicks.begin(), sess[j].clicks.end());
      }
      per_student.push_back(std::move(s));
    }
    out.push_back(ngram_indicative(per_student, 1, top_k));
  }
  return out;
}

namespace {

std::string ngram_name(const std::vector<int>& ngram, const TokenNamer& name) {
  std::string out;
  for (std::size_t i = 0; i < ngram.size(); ++i) {
    if (i) out += ' ';
    out += name(ngram[i]);
  }
  return out;
}

void write_rows(std::ostream& out, const NgramReport& report, const TokenNamer& name, const std::string& prefix) {
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& rows = report.by_class[c];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out << prefix << c << ',' << (r + 1) << ',' << csv_escape(ngram_name(rows[r].ngram, name)) << ','
          << rows[r].frequency << ',' << format_double(rows[r].rate_per_student) << ','
          << format_double(rows[r].rate_difference()) << '\n';
    }
  }
}

}  // namespace

void write_ngram_csv(std::ostream& out, const NgramReport& report, const TokenNamer& name) {
  out << "class,rank,ngram,frequency,rate_per_student,rate_difference\n";
  write_rows(out, report, name, "");
}

void write_state_ngram_csv(std::ostream& out, const std::vector<NgramReport>& reports, const TokenNamer& name) {
  out << "state,class,rank,ngram,frequency,rate_per_student,rate_difference\n";
  for (std::size_t k = 0; k < reports.size(); ++k) write_rows(out, reports[k], name, std::to_string(k) + ",");
}

void write_feature_csv(std::ostream& out, std::span<const SequenceSample> samples) {
  out << "student_id,label,length,tokens\n";
  for (const auto& s : samples) {
    out << csv_escape(s.student_id) << ',' << s.label << ',' << s.tokens.size() << ',';
    for (std::size_t i = 0; i < s.tokens.size(); ++i) out << (i ? " " : "") << s.tokens[i];
    out << '\n';
  }
}

std::vector<SequenceSample> read_feature_csv(std::istream& in, FeatureSet fs) {
  std::vector<SequenceSample> out;
  std::string line;
  if (!std::getline(in, line) || trim(line) != "student_id,label,length,tokens") {
    throw Error(ErrorKind::schema, "feature dump header must be student_id,label,length,tokens");
  }
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorKind::schema, "feature dump: expected 4 fields");
    SequenceSample s;
    s.student_id = f[0];
    s.feature_set = fs;
    s.label = std::stoi(f[1]);
    for (const auto& tok : split(f[3], ' ')) {
      if (!tok.empty()) s.tokens.push_back(std::stoi(tok));
    }
    if (static_cast<std::size_t>(std::stoul(f[2])) != s.tokens.size()) {
      throw Error(ErrorKind::schema, "feature dump: length column disagrees with tokens");
    }
    s.token_ts.assign(s.tokens.size(), 0);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace clickseq
