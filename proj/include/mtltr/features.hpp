#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include "mtltr/event_store.hpp"

namespace mtltr {

// Raw feature layout: 9 diligence counts, 3 orderliness values, 5 wake bins,
// 6 bed bins.
constexpr int kNumDiligence = 9;
constexpr int kNumOrderliness = 3;
constexpr int kNumWakeBins = 5;  // hours 6..10
constexpr int kNumBedBins = 6;   // hours 21, 22, 23, 0, 1, 2
constexpr int kNumFeatures =
    kNumDiligence + kNumOrderliness + kNumWakeBins + kNumBedBins;  // 23

constexpr int kWakeOffset = kNumDiligence + kNumOrderliness;  // 12
constexpr int kBedOffset = kWakeOffset + kNumWakeBins;        // 17

// Entropy of an empty activity stream; imputed with the cohort mean during
// standardization.
constexpr double kMissingValue = std::numeric_limits<double>::quiet_NaN();

const std::array<std::string, kNumFeatures>& feature_names();

// Returns true for one-hot sleep columns, which are never standardized.
inline bool is_onehot_column(int c) { return c >= kWakeOffset; }

// Shannon entropy (nats) of the 24-bin hour-of-day distribution of the given
// event timestamps, after circular Gaussian smoothing of the histogram.
// bandwidth <= 0 disables smoothing. Empty input yields the missing marker.
double temporal_entropy(const std::vector<Instant>& timestamps,
                        double bandwidth_hours = 1.0);

Eigen::VectorXd diligence_features(const EventLog& log,
                                   const std::string& student_id,
                                   int semester_id);

// (breakfast frequency, shower entropy, shopping entropy)
Eigen::Vector3d orderliness_features(const EventLog& log,
                                     const std::string& student_id,
                                     int semester_id,
                                     double entropy_bandwidth = 1.0);

// Wake/bed one-hots from modal first/last event hours over 04:00-anchored
// days. Fewer than `min_active_days` active days yields all zeros.
Eigen::VectorXd sleep_pattern(const EventLog& log,
                              const std::string& student_id, int semester_id,
                              int min_active_days = 5);

Eigen::VectorXd student_features(const EventLog& log,
                                 const std::string& student_id,
                                 int semester_id,
                                 double entropy_bandwidth = 1.0);

struct FeatureMatrix {
  int semester_id = 0;
  std::string major_id;
  std::vector<std::string> student_ids;  // row order of X and y
  Eigen::MatrixXd X;                     // n x kNumFeatures, standardized
  Eigen::VectorXd y;                     // normalized ranks, 0 = best
};

// Per-(semester, major) standardized matrices for one grade. Standardization
// (z-score with population std, missing entropies imputed with the column
// mean) is computed over the whole grade within each semester; one-hot
// columns pass through. Students must appear in both roster and ranks.
std::vector<FeatureMatrix> assemble_features(const EventLog& log,
                                             const RankTable& ranks,
                                             double entropy_bandwidth = 1.0);

// Standardizes pre-computed raw rows (used by assemble_features and by the
// synthetic round-trip tests). `raw` is n x kNumFeatures with possible NaN
// missing markers in entropy columns.
Eigen::MatrixXd standardize_columns(Eigen::MatrixXd raw);

void write_features_csv(const std::string& path,
                        const std::vector<FeatureMatrix>& mats);
std::vector<FeatureMatrix> read_features_csv(const std::string& path);

}  // namespace mtltr
