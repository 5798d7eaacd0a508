#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mtltr/cooccur.hpp"
#include "mtltr/features.hpp"

namespace mtltr {

// One (semester, major) ranking task.
struct TaskData {
  int semester_id = 0;
  std::string major_id;
  std::vector<std::string> student_ids;
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // normalized ranks, 0 = best

  // (i, j) with student i outperforming student j (y_i < y_j); rank ties
  // are skipped.
  std::vector<std::pair<int, int>> pairs;

  struct SimEdge {
    int i, j;  // i < j, row indices
    double tau;
  };
  std::vector<SimEdge> edges;  // same-major ties restricted to this task

  Eigen::Index n() const { return X.rows(); }
};

// Tasks laid out on a dense semester x major grid; absent combinations hold
// empty tasks (n = 0).
struct RankingDataset {
  std::vector<int> semester_ids;       // ascending
  std::vector<std::string> major_ids;  // ascending
  int p = 0;
  std::vector<std::vector<TaskData>> tasks;  // [semester][major]

  int S() const { return static_cast<int>(semester_ids.size()); }
  int M() const { return static_cast<int>(major_ids.size()); }
  const TaskData& task(int s, int m) const { return tasks[s][m]; }

  std::size_t total_pairs() const;
};

RankingDataset build_dataset(const std::vector<FeatureMatrix>& features,
                             const SimilarityGraph& graph);

// True iff student i outperforms student j given their normalized ranks
// (smaller rank = better performer).
inline bool outperforms(double rank_i, double rank_j) {
  return rank_i < rank_j;
}

}  // namespace mtltr
