#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "mtltr/features.hpp"

using namespace mtltr;

namespace {

Instant at(const char* iso) { return *parse_instant(iso); }

// Reference entropy: build the smoothed histogram the slow way and apply
// -sum p ln p directly.
double entropy_oracle(const std::vector<Instant>& ts, double bw) {
  if (ts.empty()) return 0.0;
  std::vector<double> h(24, 0.0);
  for (auto t : ts) h[hour_of_day(t)] += 1.0;
  if (bw > 0) {
    std::vector<double> s(24, 0.0);
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < 24; ++j) {
        int d = std::abs(i - j);
        d = std::min(d, 24 - d);
        s[i] += h[j] * std::exp(-0.5 * (d / bw) * (d / bw));
      }
    h = s;
  }
  double z = 0;
  for (double v : h) z += v;
  double e = 0;
  for (double v : h)
    if (v > 0) e -= (v / z) * std::log(v / z);
  return e;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& content) {
    path = std::string("/tmp/mtltr_feat_") + name;
    std::ofstream(path, std::ios::binary) << content;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

const char* kRoster =
    "student_id,major_id,grade_id\n"
    "s1,cs,g1\n"
    "s2,cs,g1\n";

const char* kCalendar =
    "semester_id,start_date,end_date,exam_start_date\n"
    "1,2023-09-01,2024-01-15,2024-01-05\n";

IngestResult ingest(const std::string& events_body) {
  static int n = 0;
  TempFile roster("roster" + std::to_string(n) + ".csv", kRoster);
  TempFile calendar("cal" + std::to_string(n) + ".csv", kCalendar);
  TempFile events("ev" + std::to_string(n) + ".csv",
                  "student_id,timestamp,location_id,location_type,amount\n" +
                      events_body);
  ++n;
  return ingest_events(events.path, roster.path, calendar.path);
}

}  // namespace

TEST_CASE("entropy: uniform vs concentrated, known two-bin value") {
  // All events in one hour, no smoothing: entropy 0.
  std::vector<Instant> one;
  for (int d = 0; d < 10; ++d)
    one.push_back(at("2023-09-04T09:10:00") + d * 86400);
  CHECK(temporal_entropy(one, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

  // Even split across two hours, no smoothing: ln 2.
  std::vector<Instant> two = one;
  for (int d = 0; d < 10; ++d)
    two.push_back(at("2023-09-04T15:10:00") + d * 86400);
  CHECK(temporal_entropy(two, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Uniform over all 24 bins: ln 24 regardless of smoothing.
  std::vector<Instant> all;
  for (int h = 0; h < 24; ++h)
    all.push_back(at("2023-09-04T00:30:00") + h * 3600);
  CHECK(temporal_entropy(all, 1.0) == doctest::Approx(std::log(24.0)).epsilon(1e-12));

  // Smoothed values against the quadratic-time oracle.
  CHECK(temporal_entropy(two, 1.0) == doctest::Approx(entropy_oracle(two, 1.0)).epsilon(1e-12));
  std::mt19937 rng(3);
  std::vector<Instant> rnd;
  for (int i = 0; i < 100; ++i)
    rnd.push_back(at("2023-09-04T00:00:00") + (Instant)(rng() % (86400 * 30)));
  CHECK(temporal_entropy(rnd, 1.0) == doctest::Approx(entropy_oracle(rnd, 1.0)).epsilon(1e-12));

  // Concentrated stream has lower entropy than a spread-out one.
  CHECK(temporal_entropy(one, 1.0) < temporal_entropy(rnd, 1.0));

  // Empty stream yields the missing marker.
  CHECK(std::isnan(temporal_entropy({}, 1.0)));
}

TEST_CASE("circular smoothing treats hour 23 and hour 0 as adjacent") {
  std::vector<Instant> wrap, flat;
  for (int d = 0; d < 10; ++d) {
    wrap.push_back(at("2023-09-04T23:30:00") + d * 86400);
    wrap.push_back(at("2023-09-04T00:30:00") + d * 86400);
    flat.push_back(at("2023-09-04T11:30:00") + d * 86400);
    flat.push_back(at("2023-09-04T12:30:00") + d * 86400);
  }
  CHECK(temporal_entropy(wrap, 1.0) ==
        doctest::Approx(temporal_entropy(flat, 1.0)).epsilon(1e-12));
}

TEST_CASE("diligence counts split weekend and pre-exam windows") {
  // Monday 2023-09-04 and Saturday 2023-09-09; pre-exam window starts
  // 2023-12-16 (20 days before 2024-01-05).
  auto res = ingest(
      "s1,2023-09-04T10:00:00,lib_1,library_gate,0\n"
      "s1,2023-09-09T10:00:00,lib_1,library_gate,0\n"
      "s1,2023-12-20T10:00:00,lib_1,library_gate,0\n"
      "s1,2023-09-04T10:05:00,lib_1,library_borrow,0\n"
      "s1,2023-09-04T11:00:00,w_1,water_dispenser,0\n"
      "s1,2023-09-09T11:00:00,w_1,water_dispenser,0\n"
      "s1,2023-12-20T11:00:00,w_1,water_dispenser,0\n"
      "s1,2023-12-20T11:30:00,p_1,printer,0\n"
      "s1,2023-09-04T11:30:00,p_1,printer,0\n");
  auto d = diligence_features(res.log, "s1", 1);
  REQUIRE(d.size() == kNumDiligence);
  CHECK(d[0] == 3);  // library entries
  CHECK(d[1] == 1);  // weekend library entries
  CHECK(d[2] == 1);  // pre-exam library entries
  CHECK(d[3] == 1);  // borrows
  CHECK(d[4] == 3);  // water fetches
  CHECK(d[5] == 1);  // weekend water
  CHECK(d[6] == 1);  // pre-exam water
  CHECK(d[7] == 2);  // print jobs
  CHECK(d[8] == 1);  // pre-exam print jobs
}

TEST_CASE("breakfast window is [06:00, 09:00)") {
  auto res = ingest(
      "s1,2023-09-04T06:30:00,caf_1,cafeteria,4\n"
      "s1,2023-09-05T08:59:00,caf_1,cafeteria,4\n"
      "s1,2023-09-06T09:00:00,caf_1,cafeteria,4\n"  // boundary: excluded
      "s1,2023-09-07T05:59:59,caf_1,cafeteria,4\n");
  auto o = orderliness_features(res.log, "s1", 1);
  CHECK(o[0] == 2.0);
}

TEST_CASE("sleep pattern: modal bins, tie-breaks, clipping, sparse fallback") {
  // 5 active days. Wake hours: 7,7,8,8,9 -> tie 7 vs 8 broken to earlier (7).
  // Bed hours: 23,23,1,1,22 -> tie 23 vs 1 broken to later (1).
  std::string body;
  const int wake[5] = {7, 7, 8, 8, 9};
  const int bed[5] = {23, 23, 1, 1, 22};
  for (int d = 0; d < 5; ++d) {
    char b[256];
    std::snprintf(b, sizeof(b),
                  "s1,2023-09-%02dT%02d:05:00,dorm_1,dormitory_gate,0\n", 4 + d,
                  wake[d]);
    body += b;
    int bd = 4 + d + (bed[d] < 4 ? 1 : 0);  // post-midnight rows on next date
    std::snprintf(b, sizeof(b),
                  "s1,2023-09-%02dT%02d:40:00,dorm_1,dormitory_gate,0\n", bd,
                  bed[d]);
    body += b;
  }
  // s2: only 4 active days -> all zeros.
  for (int d = 0; d < 4; ++d) {
    char b[128];
    std::snprintf(b, sizeof(b),
                  "s2,2023-09-%02dT08:05:00,dorm_1,dormitory_gate,0\n", 4 + d);
    body += b;
  }
  auto res = ingest(body);
  auto sp = sleep_pattern(res.log, "s1", 1);
  REQUIRE(sp.size() == kNumWakeBins + kNumBedBins);
  Eigen::VectorXd want = Eigen::VectorXd::Zero(11);
  want[7 - 6] = 1.0;               // wake 7
  want[kNumWakeBins + 3 + 1] = 1;  // bed 01 -> index 4 of bed block
  CHECK(sp == want);
  CHECK(sleep_pattern(res.log, "s2", 1).isZero());
}

TEST_CASE("sleep clipping: hour 3 late-night, hour 12 early-evening") {
  std::string body;
  for (int d = 0; d < 5; ++d) {
    char b[256];
    // First event 05:00 -> wake clipped up to 6; last event next date 03:00
    // (anchored same day) -> bed clipped down to 2.
    std::snprintf(b, sizeof(b),
                  "s1,2023-09-%02dT05:00:00,dorm_1,dormitory_gate,0\n"
                  "s1,2023-09-%02dT03:00:00,dorm_1,dormitory_gate,0\n",
                  4 + d, 5 + d);
    body += b;
    // s2 wakes at noon (clip to 10) and last event 20:00 (clip to 21).
    std::snprintf(b, sizeof(b),
                  "s2,2023-09-%02dT12:00:00,dorm_1,dormitory_gate,0\n"
                  "s2,2023-09-%02dT20:00:00,dorm_1,dormitory_gate,0\n",
                  4 + d, 4 + d);
    body += b;
  }
  auto res = ingest(body);
  auto s1 = sleep_pattern(res.log, "s1", 1);
  CHECK(s1[0] == 1.0);                        // wake bin 6
  CHECK(s1[kNumWakeBins + 5] == 1.0);         // bed bin 2 (last slot)
  auto s2 = sleep_pattern(res.log, "s2", 1);
  CHECK(s2[kNumWakeBins - 1] == 1.0);         // wake bin 10
  CHECK(s2[kNumWakeBins + 0] == 1.0);         // bed bin 21
}

TEST_CASE("standardization: zero mean/unit variance, one-hots untouched") {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd(3.0, 2.0);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(40, kNumFeatures);
  for (int i = 0; i < 40; ++i) {
    for (int c = 0; c < kWakeOffset; ++c) raw(i, c) = nd(rng);
    raw(i, kWakeOffset + i % kNumWakeBins) = 1.0;
    raw(i, kBedOffset + i % kNumBedBins) = 1.0;
  }
  raw.col(3).setConstant(7.0);  // zero-variance column
  raw(5, 10) = kMissingValue;   // missing entropy
  raw(9, 10) = kMissingValue;
  Eigen::MatrixXd z = standardize_columns(raw);
  for (int c = 0; c < kWakeOffset; ++c) {
    CHECK(z.col(c).mean() == doctest::Approx(0.0).epsilon(1e-12));
    double var = z.col(c).squaredNorm() / 40.0;
    if (c == 3)
      CHECK(z.col(c).isZero());
    else
      CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int c = kWakeOffset; c < kNumFeatures; ++c)
    CHECK(z.col(c) == raw.col(c));
  // Missing entries imputed with the column mean -> exactly 0 after z-score.
  CHECK(z(5, 10) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(!z.hasNaN());
}

TEST_CASE("feature csv round-trip preserves values bit-for-bit") {
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  std::vector<FeatureMatrix> mats(2);
  for (int k = 0; k < 2; ++k) {
    auto& m = mats[k];
    m.semester_id = k + 1;
    m.major_id = k == 0 ? "cs" : "ee";
    m.X = Eigen::MatrixXd::NullaryExpr(6, kNumFeatures,
                                       [&] { return nd(rng); });
    m.y = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
    for (int i = 0; i < 6; ++i)
      m.student_ids.push_back("s" + std::to_string(10 * k + i));
  }
  write_features_csv("/tmp/mtltr_feat_rt.csv", mats);
  auto back = read_features_csv("/tmp/mtltr_feat_rt.csv");
  std::remove("/tmp/mtltr_feat_rt.csv");
  REQUIRE(back.size() == 2);
  for (int k = 0; k < 2; ++k) {
    CHECK(back[k].semester_id == mats[k].semester_id);
    CHECK(back[k].major_id == mats[k].major_id);
    CHECK(back[k].student_ids == mats[k].student_ids);
    CHECK(back[k].X == mats[k].X);
    CHECK(back[k].y == mats[k].y);
  }
}
