#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtltr/timeutil.hpp"

namespace mtltr {

enum class LocationType {
  library_gate,
  library_borrow,
  water_dispenser,
  printer,
  cafeteria,
  supermarket,
  shower,
  dormitory_gate,
};

constexpr int kNumLocationTypes = 8;

std::optional<LocationType> parse_location_type(const std::string& s);
const char* location_type_name(LocationType t);

struct BehaviorEvent {
  std::string student_id;
  Instant timestamp = 0;
  std::string location_id;
  LocationType location_type = LocationType::cafeteria;
  double amount = 0.0;
};

struct StudentInfo {
  std::string major_id;
  std::string grade_id;
};

// student_id -> (major, grade); majors partition students.
class StudentRegistry {
 public:
  void add(const std::string& student_id, const std::string& major_id,
           const std::string& grade_id);
  const StudentInfo* find(const std::string& student_id) const;
  const std::map<std::string, StudentInfo>& students() const { return by_id_; }
  // Majors in sorted order with their member student ids (sorted).
  std::map<std::string, std::vector<std::string>> majors() const;

 private:
  std::map<std::string, StudentInfo> by_id_;
};

struct Semester {
  int semester_id = 0;
  Instant start = 0;       // midnight of start_date
  Instant end = 0;         // midnight of end_date; semester covers [start, end+1d)
  Instant exam_start = 0;  // midnight of exam_start_date
};

class SemesterCalendar {
 public:
  void add(Semester s);
  // Validates ordering/disjointness; throws std::runtime_error on violation.
  void finalize();
  // Semester containing t, or nullopt.
  std::optional<int> semester_of(Instant t) const;
  const Semester* find(int semester_id) const;
  const std::vector<Semester>& semesters() const { return semesters_; }
  // True iff t falls in [exam_start - 20 days, exam_start).
  bool before_exams(Instant t, int semester_id) const;

 private:
  std::vector<Semester> semesters_;
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t out_of_semester = 0;
  std::size_t exact_duplicates = 0;  // kept, surfaced for audit
  std::map<std::string, std::size_t> reject_reasons;
};

struct IngestResult;

// Immutable after ingestion; indexed by (student, semester) and by location.
class EventLog {
 public:
  // Chronologically sorted events for one student in one semester, optionally
  // restricted to a location type. Throws on unknown student/semester.
  std::vector<BehaviorEvent> events_for(const std::string& student_id,
                                        int semester_id) const;
  std::vector<BehaviorEvent> events_for(const std::string& student_id,
                                        int semester_id,
                                        LocationType type) const;

  // All events of a given type, grouped by location_id, each group sorted by
  // (timestamp, student_id). Used by co-occurrence counting.
  std::map<std::string, std::vector<BehaviorEvent>> by_location(
      LocationType type) const;

  std::size_t total_events() const { return total_; }
  const StudentRegistry& registry() const { return registry_; }
  const SemesterCalendar& calendar() const { return calendar_; }

 private:
  friend IngestResult ingest_events(const std::string&, const std::string&,
                                    const std::string&);
  StudentRegistry registry_;
  SemesterCalendar calendar_;
  // (student_id, semester_id) -> sorted events
  std::map<std::pair<std::string, int>, std::vector<BehaviorEvent>> by_student_;
  std::size_t total_ = 0;
};

struct IngestResult {
  EventLog log;
  IngestReport report;
};

// Reads the three CSV inputs and builds the indexed log. Throws
// std::runtime_error on unreadable files, malformed headers, or when more
// than half of the event rows are malformed.
IngestResult ingest_events(const std::string& events_path,
                           const std::string& roster_path,
                           const std::string& calendar_path);

StudentRegistry load_roster(const std::string& path);
SemesterCalendar load_calendar(const std::string& path);

// Ground-truth ranks: (student_id, semester_id) -> normalized rank in [0,1].
using RankTable = std::map<std::pair<std::string, int>, double>;
RankTable load_ranks(const std::string& path);

}  // namespace mtltr
