#include "clickseq/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "clickseq/common.hpp"

namespace clickseq {
namespace {

constexpr std::size_t kMaxWarnings = 20;

std::optional<std::int64_t> parse_int64(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

std::optional<double> parse_real(std::string_view text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

void warn(ParsedLog& log, std::size_t line_no, std::string_view why) {
  ++log.malformed_rows;
  if (log.warnings.size() < kMaxWarnings) {
    log.warnings.push_back("line " + std::to_string(line_no) + ": " + std::string(why));
  }
}

void finalize(ParsedLog& log, std::vector<ClickEvent> events) {
  std::stable_sort(events.begin(), events.end(), [](const ClickEvent& a, const ClickEvent& b) {
    if (a.student_id != b.student_id) return a.student_id < b.student_id;
    return a.timestamp < b.timestamp;
  });
  for (auto& ev : events) {
    if (log.students.empty() || log.students.back().student_id != ev.student_id) {
      log.students.push_back({ev.student_id, {}});
    }
    log.students.back().events.push_back(std::move(ev));
  }
}

}  // namespace

LogFormat parse_log_format(std::string_view name) {
  if (name == "csv") return LogFormat::csv;
  if (name == "jsonl") return LogFormat::jsonl;
  throw Error(ErrorKind::invalid_argument, "unknown log format: " + std::string(name));
}

ParsedLog parse_log(std::istream& source, LogFormat format) {
  ParsedLog log;
  std::vector<ClickEvent> events;
  std::string line;
  std::size_t line_no = 0;

  if (format == LogFormat::csv) {
    if (!std::getline(source, line)) return log;
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() != 3 || trim(header[0]) != "student_id" || trim(header[1]) != "timestamp" ||
        trim(header[2]) != "click_type") {
      throw Error(ErrorKind::schema, "clickstream header must be student_id,timestamp,click_type");
    }
    while (std::getline(source, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 3) {
        warn(log, line_no, "expected 3 fields");
        continue;
      }
      const auto ts = parse_int64(fields[1]);
      if (!ts || *ts < 0) {
        warn(log, line_no, "timestamp is not a nonnegative integer");
        continue;
      }
      if (fields[0].empty() || fields[2].empty()) {
        warn(log, line_no, "empty student_id or click_type");
        continue;
      }
      events.push_back({fields[0], *ts, fields[2], kUnmappedCategory});
    }
  } else {
    while (std::getline(source, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto doc = nlohmann::json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.is_object()) {
        warn(log, line_no, "not a JSON object");
        continue;
      }
      const auto sid = doc.find("student_id");
      const auto ts = doc.find("timestamp");
      const auto ct = doc.find("click_type");
      if (sid == doc.end() || ts == doc.end() || ct == doc.end() || !sid->is_string() ||
          !ts->is_number_integer() || !ct->is_string()) {
        warn(log, line_no, "missing or mistyped key");
        continue;
      }
      const auto t = ts->get<std::int64_t>();
      auto student = sid->get<std::string>();
      auto click = ct->get<std::string>();
      if (t < 0 || student.empty() || click.empty()) {
        warn(log, line_no, "negative timestamp or empty field");
        continue;
      }
      events.push_back({std::move(student), t, std::move(click), kUnmappedCategory});
    }
  }
  if (source.bad()) throw Error(ErrorKind::io, "read error on clickstream source");
  finalize(log, std::move(events));
  return log;
}

ParsedLog parse_log_file(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open clickstream: " + path.string());
  return parse_log(in, format);
}

std::string_view to_string(SuperGroup group) {
  switch (group) {
    case SuperGroup::lecture: return "lecture";
    case SuperGroup::quiz: return "quiz";
    case SuperGroup::forum: return "forum";
    case SuperGroup::klass: return "class";
    case SuperGroup::wiki: return "wiki";
  }
  return "?";
}

SuperGroup parse_super_group(std::string_view name) {
  if (name == "lecture") return SuperGroup::lecture;
  if (name == "quiz") return SuperGroup::quiz;
  if (name == "forum") return SuperGroup::forum;
  if (name == "class") return SuperGroup::klass;
  if (name == "wiki") return SuperGroup::wiki;
  throw Error(ErrorKind::schema, "unknown super group: " + std::string(name));
}

CategoryMap::CategoryMap(std::vector<Entry> entries, std::vector<std::string> categories,
                         std::vector<SuperGroup> super_groups, int fallback)
    : entries_(std::move(entries)),
      categories_(std::move(categories)),
      super_groups_(std::move(super_groups)),
      fallback_(fallback) {
  if (categories_.empty()) throw Error(ErrorKind::schema, "category map has no categories");
  if (super_groups_.size() != categories_.size()) {
    throw Error(ErrorKind::schema, "every category needs exactly one super group");
  }
  std::set<std::string> seen(categories_.begin(), categories_.end());
  if (seen.size() != categories_.size()) throw Error(ErrorKind::schema, "duplicate category names");
  const int c = static_cast<int>(categories_.size());
  if (fallback_ < 0 || fallback_ >= c) throw Error(ErrorKind::schema, "fallback category out of range");
  std::set<std::string> prefixes;
  for (const auto& e : entries_) {
    if (e.category < 0 || e.category >= c) throw Error(ErrorKind::schema, "entry target out of range");
    if (e.prefix.empty()) throw Error(ErrorKind::schema, "empty raw prefix");
    if (!prefixes.insert(e.prefix).second) throw Error(ErrorKind::schema, "duplicate raw prefix: " + e.prefix);
  }
  std::stable_sort(entries_.begin(), entries_.end(),
                   [](const Entry& a, const Entry& b) { return a.prefix.size() > b.prefix.size(); });
}

CategoryMap CategoryMap::parse(std::istream& source) {
  std::vector<Entry> entries;
  std::vector<std::string> categories;
  std::vector<SuperGroup> groups;
  std::optional<int> fallback;
  std::string line;
  std::size_t line_no = 0;

  auto category_of = [&](const std::string& name, SuperGroup group) {
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (categories[i] == name) {
        if (groups[i] != group) {
          throw Error(ErrorKind::schema, "category " + name + " assigned to two super groups");
        }
        return static_cast<int>(i);
      }
    }
    categories.push_back(name);
    groups.push_back(group);
    return static_cast<int>(categories.size() - 1);
  };

  while (std::getline(source, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_csv_line(t);
    if (fields.size() != 3) {
      throw Error(ErrorKind::schema, "category map line " + std::to_string(line_no) + ": expected 3 fields");
    }
    const auto prefix = trim(fields[0]);
    const auto name = trim(fields[1]);
    const auto group_name = trim(fields[2]);
    if (prefix == "raw_prefix" && name == "category") continue;  // header
    if (name.empty()) throw Error(ErrorKind::schema, "empty category name");
    const int id = category_of(name, parse_super_group(group_name));
    if (prefix == "__fallback__") {
      if (fallback) throw Error(ErrorKind::schema, "more than one __fallback__ line");
      fallback = id;
    } else {
      entries.push_back({prefix, id});
    }
  }
  if (!fallback) throw Error(ErrorKind::schema, "category map lacks a __fallback__ line");
  return CategoryMap(std::move(entries), std::move(categories), std::move(groups), *fallback);
}

CategoryMap CategoryMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open category map: " + path.string());
  return parse(in);
}

int CategoryMap::lookup(std::string_view raw_type) const {
  for (const auto& e : entries_) {
    if (raw_type.substr(0, e.prefix.size()) == e.prefix) return e.category;
  }
  return fallback_;
}

std::optional<int> CategoryMap::category_index(std::string_view name) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

void CategoryMap::write(std::ostream& out) const {
  out << "raw_prefix,category,super_group\n";
  // Entries in category order for a stable, readable file.
  std::vector<Entry> sorted = entries_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) {
    return a.category != b.category ? a.category < b.category : a.prefix < b.prefix;
  });
  for (const auto& e : sorted) {
    const auto c = static_cast<std::size_t>(e.category);
    out << csv_escape(e.prefix) << ',' << csv_escape(categories_[c]) << ',' << to_string(super_groups_[c])
        << '\n';
  }
  const auto f = static_cast<std::size_t>(fallback_);
  out << "__fallback__," << csv_escape(categories_[f]) << ',' << to_string(super_groups_[f]) << '\n';
}

void apply_categories(std::span<ClickEvent> events, const CategoryMap& map) {
  std::unordered_map<std::string, int> cache;
  for (auto& ev : events) {
    auto it = cache.find(ev.raw_type);
    if (it == cache.end()) it = cache.emplace(ev.raw_type, map.lookup(ev.raw_type)).first;
    ev.category_id = it->second;
  }
}

std::vector<Session> segment_sessions(std::span<const ClickEvent> events, std::size_t num_categories,
                                      std::int64_t gap_seconds) {
  if (gap_seconds <= 0) throw Error(ErrorKind::invalid_argument, "gap_seconds must be positive");
  std::vector<Session> sessions;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    if (ev.category_id < 0 || static_cast<std::size_t>(ev.category_id) >= num_categories) {
      throw Error(ErrorKind::invalid_argument, "event without a valid category id");
    }
    if (i > 0 && ev.timestamp < events[i - 1].timestamp) {
      throw Error(ErrorKind::invalid_argument, "events are not sorted by time");
    }
    if (i == 0 || ev.timestamp - events[i - 1].timestamp > gap_seconds) {
      Session s;
      s.student_id = ev.student_id;
      s.start_ts = ev.timestamp;
      s.counts.assign(num_categories, 0);
      sessions.push_back(std::move(s));
    }
    auto& cur = sessions.back();
    cur.end_ts = ev.timestamp;
    cur.clicks.push_back(ev.category_id);
    ++cur.counts[static_cast<std::size_t>(ev.category_id)];
  }
  return sessions;
}

int Vocabulary::add(std::string_view token) {
  const std::string key(token);
  const auto it = ids_.find(key);
  if (it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  ids_.emplace(key, id);
  tokens_.push_back(key);
  return id;
}

std::optional<int> Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

GradeTable parse_grades(std::istream& source) {
  GradeTable table;
  std::string line;
  if (!std::getline(source, line)) return table;
  const auto header = split_csv_line(line);
  if (header.size() != 2 || trim(header[0]) != "student_id" || trim(header[1]) != "grade") {
    throw Error(ErrorKind::schema, "grades header must be student_id,grade");
  }
  while (std::getline(source, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2 || fields[0].empty()) {
      ++table.malformed_rows;
      continue;
    }
    const auto g = parse_real(fields[1]);
    if (!g || *g < 0.0 || *g > 100.0) {
      ++table.malformed_rows;
      continue;
    }
    table.grades[fields[0]] = *g;
  }
  return table;
}

GradeTable load_grades(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open grades: " + path.string());
  return parse_grades(in);
}

Course build_course(ParsedLog log, const CategoryMap& map, const GradeTable& grades,
                    const IngestOptions& options) {
  Course course;
  course.name = options.name;
  course.category_names = map.categories();
  course.gap_seconds = options.gap_seconds;
  course.malformed_rows = log.malformed_rows + grades.malformed_rows;

  std::int64_t earliest = std::numeric_limits<std::int64_t>::max();
  for (auto& st : log.students) {
    StudentLog s;
    s.student_id = st.student_id;
    s.events = std::move(st.events);
    apply_categories(s.events, map);
    s.sessions = segment_sessions(s.events, map.size(), options.gap_seconds);
    if (!s.events.empty()) earliest = std::min(earliest, s.events.front().timestamp);
    if (const auto it = grades.grades.find(s.student_id); it != grades.grades.end()) s.grade = it->second;
    course.students.push_back(std::move(s));
  }
  if (options.start_ts) course.start_ts = *options.start_ts;
  else course.start_ts = course.students.empty() ? 0 : earliest;
  return course;
}

void write_course(const Course& course, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "events.csv");
    if (!out) throw Error(ErrorKind::io, "cannot write events.csv in " + dir.string());
    out << "student_id,timestamp,click_type,category_id\n";
    for (const auto& s : course.students) {
      for (const auto& ev : s.events) {
        out << csv_escape(ev.student_id) << ',' << ev.timestamp << ',' << csv_escape(ev.raw_type) << ','
            << ev.category_id << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "sessions.csv");
    if (!out) throw Error(ErrorKind::io, "cannot write sessions.csv in " + dir.string());
    out << "student_id,session,start_ts,end_ts,clicks\n";
    for (const auto& s : course.students) {
      for (std::size_t i = 0; i < s.sessions.size(); ++i) {
        const auto& sess = s.sessions[i];
        out << csv_escape(s.student_id) << ',' << i << ',' << sess.start_ts << ',' << sess.end_ts << ',';
        for (std::size_t j = 0; j < sess.clicks.size(); ++j) out << (j ? " " : "") << sess.clicks[j];
        out << '\n';
      }
    }
  }
  nlohmann::ordered_json meta;
  meta["format"] = "clickseq-course/1";
  meta["name"] = course.name;
  meta["start_ts"] = course.start_ts;
  meta["gap_seconds"] = course.gap_seconds;
  meta["malformed_rows"] = course.malformed_rows;
  meta["category_names"] = course.category_names;
  nlohmann::ordered_json grades = nlohmann::ordered_json::object();
  for (const auto& s : course.students) {
    if (s.grade) grades[s.student_id] = *s.grade;
  }
  meta["grades"] = grades;
  std::ofstream out(dir / "course.json");
  if (!out) throw Error(ErrorKind::io, "cannot write course.json in " + dir.string());
  out << meta.dump(1) << '\n';
}

Course read_course(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "course.json");
  if (!meta_in) throw Error(ErrorKind::io, "not an ingested course directory: " + dir.string());
  const auto meta = nlohmann::json::parse(meta_in, nullptr, false);
  if (meta.is_discarded() || meta.value("format", "") != "clickseq-course/1") {
    throw Error(ErrorKind::schema, "bad course.json in " + dir.string());
  }
  Course course;
  course.name = meta.at("name").get<std::string>();
  course.start_ts = meta.at("start_ts").get<std::int64_t>();
  course.gap_seconds = meta.at("gap_seconds").get<std::int64_t>();
  course.malformed_rows = meta.at("malformed_rows").get<std::size_t>();
  course.category_names = meta.at("category_names").get<std::vector<std::string>>();
  const auto& grades = meta.at("grades");
  const std::size_t c = course.category_names.size();

  std::ifstream ev_in(dir / "events.csv");
  if (!ev_in) throw Error(ErrorKind::io, "missing events.csv in " + dir.string());
  std::string line;
  std::getline(ev_in, line);
  while (std::getline(ev_in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw Error(ErrorKind::schema, "events.csv: expected 4 fields");
    ClickEvent ev{f[0], std::stoll(f[1]), f[2], std::stoi(f[3])};
    if (ev.category_id < 0 || static_cast<std::size_t>(ev.category_id) >= c) {
      throw Error(ErrorKind::schema, "events.csv: category id out of range");
    }
    if (course.students.empty() || course.students.back().student_id != ev.student_id) {
      StudentLog s;
      s.student_id = ev.student_id;
      if (grades.contains(s.student_id)) s.grade = grades.at(s.student_id).get<double>();
      course.students.push_back(std::move(s));
    }
    course.students.back().events.push_back(std::move(ev));
  }

  std::ifstream se_in(dir / "sessions.csv");
  if (!se_in) throw Error(ErrorKind::io, "missing sessions.csv in " + dir.string());
  std::getline(se_in, line);
  std::size_t idx = 0;
  while (std::getline(se_in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw Error(ErrorKind::schema, "sessions.csv: expected 5 fields");
    while (idx < course.students.size() && course.students[idx].student_id != f[0]) ++idx;
    if (idx == course.students.size()) throw Error(ErrorKind::schema, "sessions.csv: unknown or unordered student");
    Session s;
    s.student_id = f[0];
    s.start_ts = std::stoll(f[2]);
    s.end_ts = std::stoll(f[3]);
    s.counts.assign(c, 0);
    for (const auto& tok : split(f[4], ' ')) {
      if (tok.empty()) continue;
      const int cat = std::stoi(tok);
      if (cat < 0 || static_cast<std::size_t>(cat) >= c) throw Error(ErrorKind::schema, "sessions.csv: bad category");
      s.clicks.push_back(cat);
      ++s.counts[static_cast<std::size_t>(cat)];
    }
    if (s.clicks.empty()) throw Error(ErrorKind::schema, "sessions.csv: empty session");
    course.students[idx].sessions.push_back(std::move(s));
  }
  return course;
}

}  // namespace clickseq
