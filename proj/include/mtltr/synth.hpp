#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mtltr/cooccur.hpp"
#include "mtltr/dataset.hpp"
#include "mtltr/features.hpp"

namespace mtltr {

struct SynthSpec {
  int num_majors = 6;
  int num_semesters = 5;
  int min_major_size = 50;
  int max_major_size = 200;
  int true_rank = 3;                 // k*
  double drift = 0.1;                // per-semester Gaussian increment scale
  double label_noise = 0.5;          // sigma_y
  int clusters_per_major = 5;
  double cluster_correlation = 0.6;  // intra-cluster residual correlation
  int p = kNumFeatures;
  std::uint64_t seed = 7;
};

// One generated grade: features, ranks, and the cluster-based similarity
// graph. Student ids are unique across grades.
struct PlantedGrade {
  std::vector<FeatureMatrix> features;
  RankTable ranks;
  SimilarityGraph graph;
  std::map<std::string, std::string> major_of;
  std::map<std::string, int> cluster_of;
};

struct PlantedData {
  std::vector<Eigen::MatrixXd> U_star;  // per semester, M x k*
  std::vector<Eigen::MatrixXd> V_star;  // per semester, k* x p
  std::vector<Eigen::MatrixXd> W_star;  // U_star * V_star
  PlantedGrade train;
  PlantedGrade test;
};

// Deterministic function of the spec. Two grades share the planted weight
// process; students are drawn independently.
PlantedData gen_planted(const SynthSpec& spec);

// Benchmark spec for the ablation-ordering study: temporal drift, one small
// major, informative similarity clusters.
SynthSpec ablation_spec(std::uint64_t seed);

// Per-student behavioral intents behind a generated event log.
struct BehaviorIntent {
  std::string student_id;
  std::string major_id;
  double lib_rate = 0.0;     // expected events per semester
  double borrow_rate = 0.0;
  double water_rate = 0.0;
  double print_rate = 0.0;
  double breakfast_prob = 0.0;  // per-day probability
  double shower_kappa = 0.0;    // hour concentration; higher = lower entropy
  double shop_kappa = 0.0;
  int wake_hour = 7;  // 6..10
  int bed_hour = 23;  // 21..23 or 0..2
};

struct EventLogBundle {
  std::vector<BehaviorIntent> intents;
  std::string events_csv;
  std::string roster_csv;
  std::string calendar_csv;
  std::string ranks_csv;  // uniform placeholder ranks for pipeline runs
};

// Emits a one-semester event log whose extracted features recover the
// planted intents (first/last events pinned to wake/bed hours, activity
// counts Poisson at the planted rates, shower/shopping hours drawn from
// concentration-controlled circular distributions).
EventLogBundle gen_event_log(const SynthSpec& spec, int num_students,
                             int num_days = 120);

// Co-location benchmark: planted always-together pairs against Poisson
// background visits, for null-model threshold calibration tests.
struct CooccurBenchmark {
  std::string events_csv;
  std::string roster_csv;
  std::string calendar_csv;
  std::vector<StudentPair> planted;
};

CooccurBenchmark gen_cooccur_log(int planted_pairs, int background_students,
                                 std::uint64_t seed);

// Writes ranks.csv text for a grade.
std::string ranks_to_csv(const RankTable& ranks);
std::string roster_to_csv(const std::map<std::string, std::string>& major_of,
                          const std::string& grade_id);

}  // namespace mtltr
