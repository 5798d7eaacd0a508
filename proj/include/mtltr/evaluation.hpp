#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtltr/dataset.hpp"
#include "mtltr/model.hpp"

namespace mtltr {

// Spearman rank correlation: Pearson correlation of midranks, which reduces
// to 1 - 6 sum d^2 / (n(n^2-1)) on tie-free data.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Fractional (mid) ranks, 1-based.
std::vector<double> midranks(const std::vector<double>& v);

// Cramer's V between two categorical label vectors.
double cramers_v(const std::vector<int>& a, const std::vector<int>& b);

// Equal-count quantile groups (0..groups-1) of the given values.
std::vector<int> quantile_groups(const std::vector<double>& values, int groups);

struct SemesterScore {
  int semester_id = 0;
  double mean_spearman = 0.0;
  std::map<std::string, double> per_major;
};

// Per-major Spearman of predicted vs true normalized ranks, then the
// unweighted mean per semester. Truth rows are matched by (student,
// semester).
std::vector<SemesterScore> semester_report(
    const std::vector<TaskPrediction>& predictions, const RankTable& truth);

double mean_spearman(const std::vector<SemesterScore>& scores);

struct FeatureCorrelation {
  std::string feature;
  std::optional<double> value;  // nullopt = undefined (zero variance)
  bool is_cramers_v = false;
};

// Spearman of each non-one-hot feature against the normalized rank; for the
// sleep one-hot families, Cramer's V against the 5-quantile performance
// grouping.
std::vector<FeatureCorrelation> feature_correlations(
    const std::vector<FeatureMatrix>& features);

struct VariantRow {
  Variant variant = Variant::MTLTR_APP;
  std::vector<SemesterScore> semesters;
  bool failed = false;
  std::string error;
};

// Trains each variant on the training dataset and scores it on the test
// dataset (cross-grade protocol: train on one cohort, score the next).
std::vector<VariantRow> variant_comparison(const RankingDataset& train_ds,
                                           const RankingDataset& test_ds,
                                           const RankTable& test_truth,
                                           const TrainConfig& cfg,
                                           const std::vector<Variant>& variants,
                                           int threads = 1);

std::string format_variant_table(const std::vector<VariantRow>& rows);

}  // namespace mtltr
