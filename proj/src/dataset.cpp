#include "mtltr/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace mtltr {

std::size_t RankingDataset::total_pairs() const {
  std::size_t n = 0;
  for (const auto& row : tasks)
    for (const TaskData& t : row) n += t.pairs.size();
  return n;
}

RankingDataset build_dataset(const std::vector<FeatureMatrix>& features,
                             const SimilarityGraph& graph) {
  RankingDataset ds;
  std::set<int> sems;
  std::set<std::string> majors;
  for (const FeatureMatrix& fm : features) {
    sems.insert(fm.semester_id);
    majors.insert(fm.major_id);
    if (fm.X.cols() > 0) ds.p = static_cast<int>(fm.X.cols());
  }
  ds.semester_ids.assign(sems.begin(), sems.end());
  ds.major_ids.assign(majors.begin(), majors.end());
  ds.tasks.assign(ds.semester_ids.size(),
                  std::vector<TaskData>(ds.major_ids.size()));

  auto sem_index = [&](int id) {
    return static_cast<int>(std::lower_bound(ds.semester_ids.begin(),
                                             ds.semester_ids.end(), id) -
                            ds.semester_ids.begin());
  };
  auto major_index = [&](const std::string& id) {
    return static_cast<int>(std::lower_bound(ds.major_ids.begin(),
                                             ds.major_ids.end(), id) -
                            ds.major_ids.begin());
  };

  for (const FeatureMatrix& fm : features) {
    TaskData& t = ds.tasks[sem_index(fm.semester_id)][major_index(fm.major_id)];
    t.semester_id = fm.semester_id;
    t.major_id = fm.major_id;
    t.student_ids = fm.student_ids;
    t.X = fm.X;
    t.y = fm.y;

    for (int i = 0; i < t.n(); ++i)
      for (int j = 0; j < t.n(); ++j)
        if (i != j && outperforms(t.y[i], t.y[j])) t.pairs.emplace_back(i, j);

    std::map<std::string, int> row_of;
    for (int i = 0; i < t.n(); ++i) row_of[t.student_ids[i]] = i;
    for (const auto& [pair, tau] : graph.tau) {
      auto a = row_of.find(pair.a);
      auto b = row_of.find(pair.b);
      if (a == row_of.end() || b == row_of.end()) continue;
      int i = std::min(a->second, b->second);
      int j = std::max(a->second, b->second);
      t.edges.push_back({i, j, tau});
    }
  }
  // Fill grid ids for absent tasks too.
  for (std::size_t s = 0; s < ds.tasks.size(); ++s)
    for (std::size_t m = 0; m < ds.tasks[s].size(); ++m) {
      ds.tasks[s][m].semester_id = ds.semester_ids[s];
      ds.tasks[s][m].major_id = ds.major_ids[m];
    }
  return ds;
}

}  // namespace mtltr
