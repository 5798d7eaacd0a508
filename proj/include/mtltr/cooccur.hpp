#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "mtltr/event_store.hpp"

namespace mtltr {

// Unordered student pair with a canonical a < b ordering.
struct StudentPair {
  std::string a, b;
  StudentPair() = default;
  StudentPair(std::string x, std::string y) {
    if (x <= y) {
      a = std::move(x);
      b = std::move(y);
    } else {
      a = std::move(y);
      b = std::move(x);
    }
  }
  bool operator<(const StudentPair& o) const {
    return std::tie(a, b) < std::tie(o.a, o.b);
  }
  bool operator==(const StudentPair& o) const { return a == o.a && b == o.b; }
};

// Symmetric co-occurrence counts for one location type.
struct CooccurrenceCounts {
  LocationType location_type;
  std::map<StudentPair, std::int64_t> counts;
};

struct SimilarityGraph {
  // Symmetric tie strengths, canonical pair keyed.
  std::map<StudentPair, double> tau;
  // Same-major neighbors with positive tau.
  std::map<std::string, std::vector<std::string>> similar_group;
  std::map<LocationType, double> thresholds;

  double tau_of(const std::string& i, const std::string& j) const {
    auto it = tau.find(StudentPair(i, j));
    return it == tau.end() ? 0.0 : it->second;
  }
};

// Counts one unit per event pair at the same location_id with timestamps at
// most window_seconds apart (strict <=), distinct students only.
CooccurrenceCounts count_cooccurrences(const EventLog& log, LocationType type,
                                       std::int64_t window_seconds = 60);

struct NullModelReport {
  double threshold = std::numeric_limits<double>::infinity();
  // Index f holds the number of pairs with co-occurrence frequency exactly f.
  std::vector<double> real_curve;
  std::vector<double> null_mean_curve;
  std::vector<double> null_std_curve;
};

// Per-location noise threshold from the timestamp-shuffling null model:
// each repetition permutes every student's own timestamps among that
// student's records at each location, recounts pair frequencies, and the
// threshold is the smallest frequency above which the real pair-count curve
// stays above null mean + 2 std.
NullModelReport null_model_threshold(const EventLog& log, LocationType type,
                                     int repetitions = 20,
                                     std::uint64_t seed = 1,
                                     std::int64_t window_seconds = 60);

// Combines per-location thresholded counts into tie strengths: row-max
// normalization per location, summed over locations, then symmetrized by
// averaging the two directed values. Similar groups keep same-major
// neighbors only.
SimilarityGraph combine_similarity(
    const std::vector<CooccurrenceCounts>& counts,
    const std::map<LocationType, double>& thresholds,
    const StudentRegistry& registry);

// Convenience: thresholds + combination over the given location types.
SimilarityGraph build_similarity(
    const EventLog& log,
    const std::vector<LocationType>& types = {LocationType::cafeteria,
                                              LocationType::supermarket,
                                              LocationType::library_gate},
    int repetitions = 20, std::uint64_t seed = 1,
    std::int64_t window_seconds = 60,
    std::map<LocationType, NullModelReport>* reports = nullptr);

// Mean absolute normalized-rank gap between student i and a group; smaller
// means more similar performance.
double performance_similarity(double rank_i, const std::vector<double>& group_ranks);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool reject = false;
  int n_students = 0;
};

// One-sided two-sample t-test of Q_F (gap to similar students) against Q_NF
// (gap to a bootstrap sample of 20 non-similar, same-major students);
// alternative: Q_NF > Q_F. Students with empty similar groups are excluded.
TTestResult similarity_ttest(const SimilarityGraph& graph,
                             const StudentRegistry& registry,
                             const std::map<std::string, double>& ranks,
                             int nonsimilar_sample = 20,
                             std::uint64_t seed = 1, double alpha = 0.001);

struct TieStrengthLevel {
  double level = 0.0;      // normalized strength in (0, 1]
  double mean_gap = 0.0;   // mean |y_i - y_j| within the level
  int pair_count = 0;
};

struct TieStrengthCurve {
  std::vector<TieStrengthLevel> levels;
  bool reduced = false;  // fewer pairs than requested levels
};

TieStrengthCurve tie_strength_curve(const SimilarityGraph& graph,
                                    const std::map<std::string, double>& ranks,
                                    int levels = 20);

void write_similarity_csv(const std::string& path, const SimilarityGraph& g);
SimilarityGraph read_similarity_csv(const std::string& path);

// Rebuilds similar groups (same-major neighbors with positive tau) from the
// edge set, given each student's major.
void attach_groups(SimilarityGraph& g,
                   const std::map<std::string, std::string>& major_of);

}  // namespace mtltr
