#include "mtltr/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "mtltr/csv.hpp"

#include <fstream>

namespace mtltr {

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = {
      "lib_entries",
      "lib_entries_weekend",
      "lib_entries_before_exams",
      "books_borrowed",
      "water_fetches",
      "water_fetches_weekend",
      "water_fetches_before_exams",
      "print_jobs",
      "print_jobs_before_exams",
      "breakfast_freq",
      "shower_entropy",
      "shopping_entropy",
      "wake_6",
      "wake_7",
      "wake_8",
      "wake_9",
      "wake_10",
      "bed_21",
      "bed_22",
      "bed_23",
      "bed_0",
      "bed_1",
      "bed_2",
  };
  return names;
}

double temporal_entropy(const std::vector<Instant>& timestamps,
                        double bandwidth_hours) {
  if (timestamps.empty()) return kMissingValue;
  std::array<double, 24> hist{};
  for (Instant t : timestamps) hist[hour_of_day(t)] += 1.0;

  std::array<double, 24> p{};
  if (bandwidth_hours > 0.0) {
    // Circular Gaussian smoothing of the hour histogram.
    const double inv2s2 = 1.0 / (2.0 * bandwidth_hours * bandwidth_hours);
    for (int b = 0; b < 24; ++b) {
      double acc = 0.0;
      for (int j = 0; j < 24; ++j) {
        int d = std::abs(b - j);
        d = std::min(d, 24 - d);
        acc += hist[j] * std::exp(-static_cast<double>(d) * d * inv2s2);
      }
      p[b] = acc;
    }
  } else {
    p = hist;
  }
  double total = 0.0;
  for (double v : p) total += v;
  double h = 0.0;
  for (double v : p) {
    if (v <= 0.0) continue;
    double q = v / total;
    h -= q * std::log(q);
  }
  return h;
}

Eigen::VectorXd diligence_features(const EventLog& log,
                                   const std::string& student_id,
                                   int semester_id) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kNumDiligence);
  const SemesterCalendar& cal = log.calendar();
  for (const BehaviorEvent& e :
       log.events_for(student_id, semester_id)) {
    bool wknd = is_weekend(e.timestamp);
    bool exam = cal.before_exams(e.timestamp, semester_id);
    switch (e.location_type) {
      case LocationType::library_gate:
        out[0] += 1;
        if (wknd) out[1] += 1;
        if (exam) out[2] += 1;
        break;
      case LocationType::library_borrow:
        out[3] += 1;
        break;
      case LocationType::water_dispenser:
        out[4] += 1;
        if (wknd) out[5] += 1;
        if (exam) out[6] += 1;
        break;
      case LocationType::printer:
        out[7] += 1;
        if (exam) out[8] += 1;
        break;
      default:
        break;
    }
  }
  return out;
}

Eigen::Vector3d orderliness_features(const EventLog& log,
                                     const std::string& student_id,
                                     int semester_id,
                                     double entropy_bandwidth) {
  double breakfast = 0.0;
  std::vector<Instant> shower_ts, shop_ts;
  for (const BehaviorEvent& e : log.events_for(student_id, semester_id)) {
    switch (e.location_type) {
      case LocationType::cafeteria: {
        int s = second_of_day(e.timestamp);
        if (s >= 6 * 3600 && s < 9 * 3600) breakfast += 1.0;
        break;
      }
      case LocationType::shower:
        shower_ts.push_back(e.timestamp);
        break;
      case LocationType::supermarket:
        shop_ts.push_back(e.timestamp);
        break;
      default:
        break;
    }
  }
  return {breakfast, temporal_entropy(shower_ts, entropy_bandwidth),
          temporal_entropy(shop_ts, entropy_bandwidth)};
}

namespace {

// Clip a wake hour into bin index 0..4 for hours 6..10.
int wake_bin(int hour) { return std::clamp(hour, 6, 10) - 6; }

// Bed bins in chronological order of the 04:00-anchored day:
// 21, 22, 23, 0, 1, 2. Hours 3..20 clip to the nearest bin (3 -> 2,
// 4..20 -> 21).
int bed_bin(int hour) {
  if (hour == 3) return 5;       // just past 2 am
  if (hour >= 4 && hour <= 20) return 0;  // before 21
  if (hour >= 21) return hour - 21;
  return hour + 3;  // 0, 1, 2 -> 3, 4, 5
}

}  // namespace

Eigen::VectorXd sleep_pattern(const EventLog& log,
                              const std::string& student_id, int semester_id,
                              int min_active_days) {
  std::map<std::int64_t, std::pair<Instant, Instant>> days;  // first, last
  for (const BehaviorEvent& e : log.events_for(student_id, semester_id)) {
    auto [it, inserted] =
        days.try_emplace(anchored_day_index(e.timestamp),
                         std::make_pair(e.timestamp, e.timestamp));
    if (!inserted) {
      it->second.first = std::min(it->second.first, e.timestamp);
      it->second.second = std::max(it->second.second, e.timestamp);
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kNumWakeBins + kNumBedBins);
  if (static_cast<int>(days.size()) < min_active_days) return out;

  std::array<int, kNumWakeBins> wake_counts{};
  std::array<int, kNumBedBins> bed_counts{};
  for (const auto& [day, firstlast] : days) {
    ++wake_counts[wake_bin(hour_of_day(firstlast.first))];
    ++bed_counts[bed_bin(hour_of_day(firstlast.second))];
  }
  // Ties break toward the earlier wake bin and the later bed bin.
  int wb = 0;
  for (int b = 1; b < kNumWakeBins; ++b)
    if (wake_counts[b] > wake_counts[wb]) wb = b;
  int bb = 0;
  for (int b = 1; b < kNumBedBins; ++b)
    if (bed_counts[b] >= bed_counts[bb]) bb = b;
  out[wb] = 1.0;
  out[kNumWakeBins + bb] = 1.0;
  return out;
}

Eigen::VectorXd student_features(const EventLog& log,
                                 const std::string& student_id,
                                 int semester_id, double entropy_bandwidth) {
  Eigen::VectorXd v(kNumFeatures);
  v.head(kNumDiligence) = diligence_features(log, student_id, semester_id);
  v.segment(kNumDiligence, kNumOrderliness) =
      orderliness_features(log, student_id, semester_id, entropy_bandwidth);
  v.tail(kNumWakeBins + kNumBedBins) =
      sleep_pattern(log, student_id, semester_id);
  return v;
}

Eigen::MatrixXd standardize_columns(Eigen::MatrixXd raw) {
  const Eigen::Index n = raw.rows();
  if (n == 0) return raw;
  for (int c = 0; c < raw.cols(); ++c) {
    if (is_onehot_column(c)) continue;
    // Impute missing markers with the column mean of present values.
    double sum = 0.0;
    Eigen::Index present = 0;
    for (Eigen::Index r = 0; r < n; ++r)
      if (!std::isnan(raw(r, c))) {
        sum += raw(r, c);
        ++present;
      }
    double fill = present > 0 ? sum / present : 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
      if (std::isnan(raw(r, c))) raw(r, c) = fill;

    double mean = raw.col(c).mean();
    double var = (raw.col(c).array() - mean).square().sum() / n;
    if (var > 0.0)
      raw.col(c) = (raw.col(c).array() - mean) / std::sqrt(var);
    else
      raw.col(c).setZero();
  }
  return raw;
}

std::vector<FeatureMatrix> assemble_features(const EventLog& log,
                                             const RankTable& ranks,
                                             double entropy_bandwidth) {
  std::vector<FeatureMatrix> out;
  for (const Semester& sem : log.calendar().semesters()) {
    // Whole-grade cohort for this semester: every rostered student with a
    // rank entry.
    std::vector<std::string> cohort;
    for (const auto& [sid, info] : log.registry().students())
      if (ranks.count({sid, sem.semester_id})) cohort.push_back(sid);
    if (cohort.empty()) continue;

    Eigen::MatrixXd raw(static_cast<Eigen::Index>(cohort.size()), kNumFeatures);
    for (std::size_t r = 0; r < cohort.size(); ++r)
      raw.row(static_cast<Eigen::Index>(r)) =
          student_features(log, cohort[r], sem.semester_id, entropy_bandwidth)
              .transpose();
    Eigen::MatrixXd X = standardize_columns(std::move(raw));

    // Split rows per major, preserving cohort (sorted id) order.
    std::map<std::string, std::vector<std::size_t>> rows_by_major;
    for (std::size_t r = 0; r < cohort.size(); ++r)
      rows_by_major[log.registry().find(cohort[r])->major_id].push_back(r);
    for (const auto& [major, rows] : rows_by_major) {
      FeatureMatrix fm;
      fm.semester_id = sem.semester_id;
      fm.major_id = major;
      fm.X.resize(static_cast<Eigen::Index>(rows.size()), kNumFeatures);
      fm.y.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t k = 0; k < rows.size(); ++k) {
        fm.student_ids.push_back(cohort[rows[k]]);
        fm.X.row(static_cast<Eigen::Index>(k)) =
            X.row(static_cast<Eigen::Index>(rows[k]));
        fm.y[static_cast<Eigen::Index>(k)] =
            ranks.at({cohort[rows[k]], sem.semester_id});
      }
      out.push_back(std::move(fm));
    }
  }
  return out;
}

void write_features_csv(const std::string& path,
                        const std::vector<FeatureMatrix>& mats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "student_id,major_id,semester_id";
  for (const std::string& n : feature_names()) out << ',' << n;
  out << ",normalized_rank\n";
  char buf[32];
  for (const FeatureMatrix& fm : mats)
    for (Eigen::Index r = 0; r < fm.X.rows(); ++r) {
      out << fm.student_ids[static_cast<std::size_t>(r)] << ',' << fm.major_id
          << ',' << fm.semester_id;
      for (Eigen::Index c = 0; c < fm.X.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", fm.X(r, c));
        out << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", fm.y[r]);
      out << ',' << buf << '\n';
    }
}

std::vector<FeatureMatrix> read_features_csv(const std::string& path) {
  CsvReader csv(path);
  int c_id = csv.col("student_id"), c_major = csv.col("major_id"),
      c_sem = csv.col("semester_id"), c_rank = csv.col("normalized_rank");
  std::array<int, kNumFeatures> c_feat;
  for (int i = 0; i < kNumFeatures; ++i)
    c_feat[static_cast<std::size_t>(i)] = csv.col(feature_names()[static_cast<std::size_t>(i)]);

  struct Row {
    std::string id;
    Eigen::VectorXd x;
    double y;
  };
  std::map<std::pair<int, std::string>, std::vector<Row>> groups;
  std::vector<std::string> f;
  while (csv.next(f)) {
    Row row;
    row.id = f[c_id];
    row.x.resize(kNumFeatures);
    for (int i = 0; i < kNumFeatures; ++i)
      row.x[i] = std::atof(f[c_feat[static_cast<std::size_t>(i)]].c_str());
    row.y = std::atof(f[c_rank].c_str());
    groups[{std::atoi(f[c_sem].c_str()), f[c_major]}].push_back(std::move(row));
  }
  std::vector<FeatureMatrix> out;
  for (auto& [key, rows] : groups) {
    FeatureMatrix fm;
    fm.semester_id = key.first;
    fm.major_id = key.second;
    fm.X.resize(static_cast<Eigen::Index>(rows.size()), kNumFeatures);
    fm.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      fm.student_ids.push_back(rows[r].id);
      fm.X.row(static_cast<Eigen::Index>(r)) = rows[r].x.transpose();
      fm.y[static_cast<Eigen::Index>(r)] = rows[r].y;
    }
    out.push_back(std::move(fm));
  }
  return out;
}

}  // namespace mtltr
