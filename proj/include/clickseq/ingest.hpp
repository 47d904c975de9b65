#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clickseq {

inline constexpr int kUnmappedCategory = -1;
inline constexpr std::int64_t kDefaultSessionGap = 3600;

struct ClickEvent {
  std::string student_id;
  std::int64_t timestamp = 0;
  std::string raw_type;
  int category_id = kUnmappedCategory;
};

struct StudentEvents {
  std::string student_id;
  std::vector<ClickEvent> events;
};

enum class LogFormat { csv, jsonl };

LogFormat parse_log_format(std::string_view name);

struct ParsedLog {
  /// Students in ascending student_id order; events stably sorted by time.
  std::vector<StudentEvents> students;
  std::size_t malformed_rows = 0;
  std::vector<std::string> warnings;  // first few diagnostics only
};

ParsedLog parse_log(std::istream& source, LogFormat format);
ParsedLog parse_log_file(const std::filesystem::path& path, LogFormat format);

enum class SuperGroup { lecture, quiz, forum, klass, wiki };
inline constexpr int kNumSuperGroups = 5;

std::string_view to_string(SuperGroup group);
SuperGroup parse_super_group(std::string_view name);

/// Maps raw click identifiers (URL-like paths) onto a fixed category list by
/// longest matching prefix. Unmatched identifiers fall back to a designated
/// category.
class CategoryMap {
 public:
  struct Entry {
    std::string prefix;
    int category = 0;
  };

  static CategoryMap parse(std::istream& source);
  static CategoryMap load(const std::filesystem::path& path);

  /// Builds and validates a map from its parts.
  CategoryMap(std::vector<Entry> entries, std::vector<std::string> categories,
              std::vector<SuperGroup> super_groups, int fallback);

  int lookup(std::string_view raw_type) const;

  std::size_t size() const { return categories_.size(); }
  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<Entry>& entries() const { return entries_; }
  SuperGroup super_group(int category) const { return super_groups_.at(static_cast<std::size_t>(category)); }
  int fallback() const { return fallback_; }
  std::optional<int> category_index(std::string_view name) const;

  void write(std::ostream& out) const;

 private:
  std::vector<Entry> entries_;  // longest prefix first
  std::vector<std::string> categories_;
  std::vector<SuperGroup> super_groups_;
  int fallback_ = 0;
};

/// Sets category_id on every event. Pure function of raw_type.
void apply_categories(std::span<ClickEvent> events, const CategoryMap& map);

struct Session {
  std::string student_id;
  std::int64_t start_ts = 0;
  std::int64_t end_ts = 0;
  std::vector<int> clicks;  // category ids in time order
  std::vector<int> counts;  // length C
};

/// Splits one student's time-sorted events wherever the gap to the next click
/// strictly exceeds `gap_seconds`. Events must carry category ids.
std::vector<Session> segment_sessions(std::span<const ClickEvent> events, std::size_t num_categories,
                                      std::int64_t gap_seconds = kDefaultSessionGap);

/// Token to dense id, ids assigned in first-occurrence order.
class Vocabulary {
 public:
  Vocabulary() = default;

  template <typename Range>
  static Vocabulary build(const Range& tokens) {
    Vocabulary v;
    for (const auto& t : tokens) v.add(t);
    return v;
  }

  int add(std::string_view token);
  std::optional<int> id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> tokens_;
};

struct GradeTable {
  std::map<std::string, double> grades;
  std::size_t malformed_rows = 0;
};

GradeTable parse_grades(std::istream& source);
GradeTable load_grades(const std::filesystem::path& path);

struct StudentLog {
  std::string student_id;
  std::vector<ClickEvent> events;
  std::vector<Session> sessions;
  std::optional<double> grade;

  std::size_t total_clicks() const { return events.size(); }
};

/// One ingested course: categorized, sessionized clickstreams plus grades.
struct Course {
  std::string name;
  std::vector<std::string> category_names;
  std::int64_t start_ts = 0;
  std::int64_t gap_seconds = kDefaultSessionGap;
  std::vector<StudentLog> students;
  std::size_t malformed_rows = 0;
};

struct IngestOptions {
  std::string name = "course";
  std::int64_t gap_seconds = kDefaultSessionGap;
  /// Course start; defaults to the earliest click in the log.
  std::optional<std::int64_t> start_ts;
};

Course build_course(ParsedLog log, const CategoryMap& map, const GradeTable& grades,
                    const IngestOptions& options = {});

/// Writes events.csv, sessions.csv and course.json into `dir`.
void write_course(const Course& course, const std::filesystem::path& dir);
Course read_course(const std::filesystem::path& dir);

}  // namespace clickseq
