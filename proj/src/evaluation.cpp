#include "mtltr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mtltr {

std::vector<double> midranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need n >= 2");
  std::vector<double> ra = midranks(a), rb = midranks(b);
  double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

double cramers_v(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("cramers_v: bad input");
  std::set<int> cats_a(a.begin(), a.end()), cats_b(b.begin(), b.end());
  std::map<int, int> ia, ib;
  int r = 0, c = 0;
  for (int x : cats_a) ia[x] = r++;
  for (int x : cats_b) ib[x] = c++;
  if (r < 2 || c < 2) return 0.0;
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(r, c);
  for (std::size_t i = 0; i < a.size(); ++i) table(ia[a[i]], ib[b[i]]) += 1.0;
  double n = static_cast<double>(a.size());
  Eigen::VectorXd rows = table.rowwise().sum();
  Eigen::VectorXd cols = table.colwise().sum();
  double chi2 = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      double expected = rows[i] * cols[j] / n;
      if (expected > 0.0) {
        double d = table(i, j) - expected;
        chi2 += d * d / expected;
      }
    }
  return std::sqrt(chi2 / (n * (std::min(r, c) - 1)));
}

std::vector<int> quantile_groups(const std::vector<double>& values,
                                 int groups) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<int> out(values.size());
  std::size_t n = values.size();
  for (std::size_t k = 0; k < n; ++k)
    out[order[k]] = static_cast<int>(k * static_cast<std::size_t>(groups) / n);
  return out;
}

std::vector<SemesterScore> semester_report(
    const std::vector<TaskPrediction>& predictions, const RankTable& truth) {
  std::map<int, std::map<std::string, double>> rho;  // semester -> major -> rho
  for (const TaskPrediction& tp : predictions) {
    std::vector<double> pred, real;
    for (std::size_t i = 0; i < tp.student_ids.size(); ++i) {
      auto it = truth.find({tp.student_ids[i], tp.semester_id});
      if (it == truth.end())
        throw std::runtime_error("semester_report: no truth for student " +
                                 tp.student_ids[i] + " semester " +
                                 std::to_string(tp.semester_id));
      pred.push_back(tp.predicted_rank[static_cast<Eigen::Index>(i)]);
      real.push_back(it->second);
    }
    if (pred.size() < 2) continue;
    rho[tp.semester_id][tp.major_id] = spearman(pred, real);
  }
  std::vector<SemesterScore> out;
  for (const auto& [sem, majors] : rho) {
    SemesterScore ss;
    ss.semester_id = sem;
    ss.per_major = majors;
    double acc = 0.0;
    for (const auto& [major, v] : majors) acc += v;
    ss.mean_spearman = acc / static_cast<double>(majors.size());
    out.push_back(std::move(ss));
  }
  return out;
}

double mean_spearman(const std::vector<SemesterScore>& scores) {
  if (scores.empty()) return 0.0;
  double acc = 0.0;
  for (const SemesterScore& s : scores) acc += s.mean_spearman;
  return acc / static_cast<double>(scores.size());
}

std::vector<FeatureCorrelation> feature_correlations(
    const std::vector<FeatureMatrix>& features) {
  // Pool all rows; predicted vs rank correlations are descriptive, so the
  // whole-cohort pool mirrors the scatter analyses.
  std::vector<std::vector<double>> cols(kNumFeatures);
  std::vector<double> rank;
  for (const FeatureMatrix& fm : features)
    for (Eigen::Index r = 0; r < fm.X.rows(); ++r) {
      for (int c = 0; c < kNumFeatures; ++c) cols[c].push_back(fm.X(r, c));
      rank.push_back(fm.y[r]);
    }
  std::vector<FeatureCorrelation> out;
  if (rank.size() < 2) return out;

  std::vector<int> rank_groups = quantile_groups(rank, 5);
  for (int c = 0; c < kNumFeatures; ++c) {
    FeatureCorrelation fc;
    fc.feature = feature_names()[static_cast<std::size_t>(c)];
    if (!is_onehot_column(c)) {
      bool constant = std::all_of(cols[c].begin(), cols[c].end(),
                                  [&](double v) { return v == cols[c][0]; });
      if (!constant) fc.value = spearman(cols[c], rank);
      out.push_back(std::move(fc));
    }
  }
  // Sleep families: category = active bin index, or -1 when unknown.
  auto onehot_category = [&](int offset, int width, std::size_t row) {
    for (int b = 0; b < width; ++b)
      if (cols[offset + b][row] > 0.5) return b;
    return -1;
  };
  for (auto [name, offset, width] :
       {std::tuple<const char*, int, int>{"wake_time", kWakeOffset, kNumWakeBins},
        std::tuple<const char*, int, int>{"bed_time", kBedOffset, kNumBedBins}}) {
    std::vector<int> cat;
    std::vector<int> grp;
    for (std::size_t r = 0; r < rank.size(); ++r) {
      int cbin = onehot_category(offset, width, r);
      if (cbin < 0) continue;  // unknown sleep pattern
      cat.push_back(cbin);
      grp.push_back(rank_groups[r]);
    }
    FeatureCorrelation fc;
    fc.feature = name;
    fc.is_cramers_v = true;
    if (cat.size() >= 2) fc.value = cramers_v(cat, grp);
    out.push_back(std::move(fc));
  }
  return out;
}

std::vector<VariantRow> variant_comparison(const RankingDataset& train_ds,
                                           const RankingDataset& test_ds,
                                           const RankTable& test_truth,
                                           const TrainConfig& cfg,
                                           const std::vector<Variant>& variants,
                                           int threads) {
  std::vector<VariantRow> rows;
  for (Variant v : variants) {
    VariantRow row;
    row.variant = v;
    try {
      TrainResult tr = train_variant(train_ds, cfg, v, threads);
      if (tr.diverged) throw std::runtime_error("training diverged");
      auto preds = predict(test_ds, tr.params, cfg);
      row.semesters = semester_report(preds, test_truth);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_variant_table(const std::vector<VariantRow>& rows) {
  std::ostringstream os;
  std::set<int> sems;
  for (const VariantRow& r : rows)
    for (const SemesterScore& s : r.semesters) sems.insert(s.semester_id);
  os << "Variant      ";
  for (int s : sems) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "  sem%-5d", s);
    os << buf;
  }
  os << "  mean\n";
  for (const VariantRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-12s ", variant_name(r.variant));
    os << buf;
    if (r.failed) {
      os << " FAILED: " << r.error << '\n';
      continue;
    }
    for (int sem : sems) {
      auto it = std::find_if(
          r.semesters.begin(), r.semesters.end(),
          [&](const SemesterScore& s) { return s.semester_id == sem; });
      if (it == r.semesters.end())
        os << "      -  ";
      else {
        std::snprintf(buf, sizeof(buf), "  %7.4f", it->mean_spearman);
        os << buf;
      }
    }
    std::snprintf(buf, sizeof(buf), "  %7.4f", mean_spearman(r.semesters));
    os << buf << '\n';
  }
  return os.str();
}

}  // namespace mtltr
