#include "mtltr/event_store.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "mtltr/csv.hpp"

namespace mtltr {

namespace {

const char* const kLocationNames[kNumLocationTypes] = {
    "library_gate", "library_borrow", "water_dispenser", "printer",
    "cafeteria",    "supermarket",    "shower",          "dormitory_gate"};

}  // namespace

std::optional<LocationType> parse_location_type(const std::string& s) {
  for (int i = 0; i < kNumLocationTypes; ++i)
    if (s == kLocationNames[i]) return static_cast<LocationType>(i);
  return std::nullopt;
}

const char* location_type_name(LocationType t) {
  return kLocationNames[static_cast<int>(t)];
}

void StudentRegistry::add(const std::string& student_id,
                          const std::string& major_id,
                          const std::string& grade_id) {
  auto [it, inserted] = by_id_.try_emplace(student_id, StudentInfo{major_id, grade_id});
  if (!inserted && (it->second.major_id != major_id || it->second.grade_id != grade_id))
    throw std::runtime_error("conflicting roster rows for student " + student_id);
}

const StudentInfo* StudentRegistry::find(const std::string& student_id) const {
  auto it = by_id_.find(student_id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::map<std::string, std::vector<std::string>> StudentRegistry::majors() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, info] : by_id_) out[info.major_id].push_back(id);
  return out;
}

void SemesterCalendar::add(Semester s) { semesters_.push_back(s); }

void SemesterCalendar::finalize() {
  std::sort(semesters_.begin(), semesters_.end(),
            [](const Semester& a, const Semester& b) {
              return a.semester_id < b.semester_id;
            });
  for (std::size_t i = 0; i < semesters_.size(); ++i) {
    const Semester& s = semesters_[i];
    if (s.end < s.start || s.exam_start < s.start || s.exam_start > s.end)
      throw std::runtime_error("semester " + std::to_string(s.semester_id) +
                               ": dates out of order");
    if (i > 0 && semesters_[i - 1].end + kSecondsPerDay > s.start)
      throw std::runtime_error("semesters overlap or are not chronological");
  }
}

std::optional<int> SemesterCalendar::semester_of(Instant t) const {
  for (const Semester& s : semesters_)
    if (t >= s.start && t < s.end + kSecondsPerDay) return s.semester_id;
  return std::nullopt;
}

const Semester* SemesterCalendar::find(int semester_id) const {
  for (const Semester& s : semesters_)
    if (s.semester_id == semester_id) return &s;
  return nullptr;
}

bool SemesterCalendar::before_exams(Instant t, int semester_id) const {
  const Semester* s = find(semester_id);
  if (!s) return false;
  return t >= s->exam_start - 20 * kSecondsPerDay && t < s->exam_start;
}

std::vector<BehaviorEvent> EventLog::events_for(const std::string& student_id,
                                                int semester_id) const {
  if (!registry_.find(student_id))
    throw std::runtime_error("unknown student: " + student_id);
  if (!calendar_.find(semester_id))
    throw std::runtime_error("unknown semester: " + std::to_string(semester_id));
  auto it = by_student_.find({student_id, semester_id});
  if (it == by_student_.end()) return {};
  return it->second;
}

std::vector<BehaviorEvent> EventLog::events_for(const std::string& student_id,
                                                int semester_id,
                                                LocationType type) const {
  std::vector<BehaviorEvent> all = events_for(student_id, semester_id);
  std::vector<BehaviorEvent> out;
  for (const BehaviorEvent& e : all)
    if (e.location_type == type) out.push_back(e);
  return out;
}

std::map<std::string, std::vector<BehaviorEvent>> EventLog::by_location(
    LocationType type) const {
  std::map<std::string, std::vector<BehaviorEvent>> out;
  for (const auto& [key, events] : by_student_)
    for (const BehaviorEvent& e : events)
      if (e.location_type == type) out[e.location_id].push_back(e);
  for (auto& [id, events] : out)
    std::sort(events.begin(), events.end(),
              [](const BehaviorEvent& a, const BehaviorEvent& b) {
                return std::tie(a.timestamp, a.student_id) <
                       std::tie(b.timestamp, b.student_id);
              });
  return out;
}

StudentRegistry load_roster(const std::string& path) {
  CsvReader csv(path);
  int c_id = csv.col("student_id"), c_major = csv.col("major_id"),
      c_grade = csv.col("grade_id");
  StudentRegistry reg;
  std::vector<std::string> f;
  while (csv.next(f)) {
    if (static_cast<int>(f.size()) <= std::max({c_id, c_major, c_grade}))
      throw std::runtime_error(path + ": short row at line " +
                               std::to_string(csv.line_number()));
    reg.add(f[c_id], f[c_major], f[c_grade]);
  }
  return reg;
}

SemesterCalendar load_calendar(const std::string& path) {
  CsvReader csv(path);
  int c_sem = csv.col("semester_id"), c_start = csv.col("start_date"),
      c_end = csv.col("end_date"), c_exam = csv.col("exam_start_date");
  SemesterCalendar cal;
  std::vector<std::string> f;
  while (csv.next(f)) {
    Semester s;
    s.semester_id = std::atoi(f[c_sem].c_str());
    auto start = parse_date(f[c_start]);
    auto end = parse_date(f[c_end]);
    auto exam = parse_date(f[c_exam]);
    if (!start || !end || !exam || s.semester_id <= 0)
      throw std::runtime_error(path + ": bad calendar row at line " +
                               std::to_string(csv.line_number()));
    s.start = *start;
    s.end = *end;
    s.exam_start = *exam;
    cal.add(s);
  }
  cal.finalize();
  return cal;
}

RankTable load_ranks(const std::string& path) {
  CsvReader csv(path);
  int c_id = csv.col("student_id"), c_sem = csv.col("semester_id"),
      c_rank = csv.col("normalized_rank");
  RankTable out;
  std::vector<std::string> f;
  while (csv.next(f)) {
    double r = std::atof(f[c_rank].c_str());
    if (r < 0.0 || r > 1.0)
      throw std::runtime_error(path + ": normalized_rank outside [0,1] at line " +
                               std::to_string(csv.line_number()));
    out[{f[c_id], std::atoi(f[c_sem].c_str())}] = r;
  }
  return out;
}

IngestResult ingest_events(const std::string& events_path,
                           const std::string& roster_path,
                           const std::string& calendar_path) {
  IngestResult res;
  res.log.registry_ = load_roster(roster_path);
  res.log.calendar_ = load_calendar(calendar_path);

  CsvReader csv(events_path);
  int c_id = csv.col("student_id"), c_ts = csv.col("timestamp"),
      c_loc = csv.col("location_id"), c_type = csv.col("location_type"),
      c_amt = csv.col("amount");
  int max_col = std::max({c_id, c_ts, c_loc, c_type, c_amt});

  IngestReport& rep = res.report;
  std::set<std::tuple<std::string, Instant, std::string, int, double>> seen;
  std::vector<std::string> f;
  std::size_t rows = 0;
  while (csv.next(f)) {
    ++rows;
    if (static_cast<int>(f.size()) <= max_col) {
      ++rep.rejected;
      ++rep.reject_reasons["short row"];
      continue;
    }
    auto ts = parse_instant(f[c_ts]);
    if (!ts) {
      ++rep.rejected;
      ++rep.reject_reasons["bad timestamp"];
      continue;
    }
    auto type = parse_location_type(f[c_type]);
    if (!type) {
      ++rep.rejected;
      ++rep.reject_reasons["unknown location_type"];
      continue;
    }
    char* endp = nullptr;
    double amount = std::strtod(f[c_amt].c_str(), &endp);
    if (endp == f[c_amt].c_str() || amount < 0.0) {
      ++rep.rejected;
      ++rep.reject_reasons["bad amount"];
      continue;
    }
    if (!res.log.registry_.find(f[c_id])) {
      ++rep.rejected;
      ++rep.reject_reasons["student not in roster"];
      continue;
    }
    // accepted = well-formed; out-of-semester rows are accepted but not stored,
    // so sum over events_for + out_of_semester == accepted.
    ++rep.accepted;
    if (!seen.insert({f[c_id], *ts, f[c_loc], static_cast<int>(*type), amount})
             .second)
      ++rep.exact_duplicates;  // kept anyway
    auto sem = res.log.calendar_.semester_of(*ts);
    if (!sem) {
      ++rep.out_of_semester;
      continue;
    }
    BehaviorEvent e{f[c_id], *ts, f[c_loc], *type, amount};
    res.log.by_student_[{f[c_id], *sem}].push_back(std::move(e));
  }
  if (rows > 0 && rep.rejected * 2 > rows)
    throw std::runtime_error(events_path + ": more than 50% malformed rows (" +
                             std::to_string(rep.rejected) + "/" +
                             std::to_string(rows) + ")");
  for (auto& [key, events] : res.log.by_student_)
    std::sort(events.begin(), events.end(),
              [](const BehaviorEvent& a, const BehaviorEvent& b) {
                return std::tie(a.timestamp, a.location_id) <
                       std::tie(b.timestamp, b.location_id);
              });
  res.log.total_ = rep.accepted - rep.out_of_semester;
  return res;
}

}  // namespace mtltr
