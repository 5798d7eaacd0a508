#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mtltr/evaluation.hpp"

using namespace mtltr;

namespace {

// Pearson correlation of two numeric vectors.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
  double num = 0, da = 0, db = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    da += (a[i] - ma) * (a[i] - ma);
    db += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(da * db);
}

}  // namespace

TEST_CASE("spearman: identity, reversal, random permutations vs oracle") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + static_cast<int>(rng() % 40);
    std::vector<double> a(n);
    std::iota(a.begin(), a.end(), 0.0);
    std::shuffle(a.begin(), a.end(), rng);
    CHECK(spearman(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> rev(n);
    for (int i = 0; i < n; ++i) rev[i] = n - 1 - a[i];
    CHECK(spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-12));
    std::vector<double> b(n);
    std::iota(b.begin(), b.end(), 0.0);
    std::shuffle(b.begin(), b.end(), rng);
    // Tie-free: closed form 1 - 6 sum d^2 / (n(n^2-1)).
    double d2 = 0;
    for (int i = 0; i < n; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    double closed = 1.0 - 6.0 * d2 / (n * (double(n) * n - 1.0));
    CHECK(spearman(a, b) == doctest::Approx(closed).epsilon(1e-12));
    CHECK(spearman(a, b) == doctest::Approx(pearson(midranks(a), midranks(b)))
                                .epsilon(1e-12));
  }
  CHECK_THROWS(spearman({1.0}, {2.0}));
  CHECK_THROWS(spearman({1.0, 2.0}, {1.0, 2.0, 3.0}));
}

TEST_CASE("spearman with ties equals Pearson of midranks") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 5 + static_cast<int>(rng() % 30);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng() % 5);  // heavy ties
      b[i] = static_cast<double>(rng() % 4);
    }
    if (std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; }) ||
        std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; }))
      continue;
    CHECK(spearman(a, b) == doctest::Approx(pearson(midranks(a), midranks(b)))
                                .epsilon(1e-12));
  }
}

TEST_CASE("spearman invariant under strictly monotone transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::vector<double> a(30), b(30), ta(30), tb(30);
  for (int i = 0; i < 30; ++i) {
    a[i] = nd(rng);
    b[i] = nd(rng);
    ta[i] = std::exp(2.0 * a[i]) + 3.0;
    tb[i] = std::atan(b[i]);
  }
  CHECK(spearman(ta, tb) == doctest::Approx(spearman(a, b)).epsilon(1e-12));
}

TEST_CASE("midranks: ties share the average rank") {
  auto r = midranks({10.0, 20.0, 20.0, 30.0});
  CHECK(r == std::vector<double>{1.0, 2.5, 2.5, 4.0});
}

TEST_CASE("cramers v: perfect association, relabel invariance, null size") {
  // 2x2 perfectly determined.
  std::vector<int> a, b;
  for (int i = 0; i < 50; ++i) {
    a.push_back(i % 2);
    b.push_back(i % 2);
  }
  CHECK(cramers_v(a, b) == doctest::Approx(1.0).epsilon(1e-12));

  // Relabeling categories leaves V unchanged.
  std::mt19937_64 rng(4);
  std::vector<int> x, y, yr;
  for (int i = 0; i < 300; ++i) {
    x.push_back(static_cast<int>(rng() % 4));
    y.push_back(static_cast<int>((x.back() + rng() % 3) % 5));
  }
  int perm[5] = {3, 0, 4, 1, 2};
  for (int v : y) yr.push_back(perm[v]);
  CHECK(cramers_v(x, y) == doctest::Approx(cramers_v(x, yr)).epsilon(1e-12));

  // Independent labels, n = 2000: V < 0.08 in at least 95 of 100 runs.
  int small = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 r2(900 + seed);
    std::vector<int> u, g;
    for (int i = 0; i < 2000; ++i) {
      u.push_back(static_cast<int>(r2() % 6));
      g.push_back(static_cast<int>(r2() % 5));
    }
    if (cramers_v(u, g) < 0.08) ++small;
  }
  CHECK(small >= 95);
}

TEST_CASE("quantile groups are balanced and ordered") {
  std::mt19937_64 rng(5);
  std::vector<double> v(103);
  for (auto& x : v) x = static_cast<double>(rng() % 1000);
  auto g = quantile_groups(v, 5);
  REQUIRE(g.size() == v.size());
  std::map<int, int> counts;
  for (int gi : g) counts[gi]++;
  for (auto& [grp, c] : counts) {
    CHECK(grp >= 0);
    CHECK(grp < 5);
    CHECK(c >= 20);
    CHECK(c <= 21);
  }
  // Group index is monotone in value.
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (v[i] < v[j]) CHECK(g[i] <= g[j]);
}

namespace {

TaskPrediction make_pred(int sem, const std::string& major,
                         const std::vector<std::string>& ids,
                         const std::vector<double>& ranks) {
  TaskPrediction p;
  p.semester_id = sem;
  p.major_id = major;
  p.student_ids = ids;
  p.predicted_rank.resize(static_cast<Eigen::Index>(ranks.size()));
  p.scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ranks.size()));
  for (std::size_t i = 0; i < ranks.size(); ++i)
    p.predicted_rank[static_cast<Eigen::Index>(i)] = ranks[i];
  return p;
}

}  // namespace

TEST_CASE("semester report: perfect, mixed, and missing-truth cases") {
  RankTable truth;
  std::vector<std::string> ids = {"a", "b", "c", "d"};
  std::vector<double> y = {0.0, 1.0 / 3, 2.0 / 3, 1.0};
  for (int i = 0; i < 4; ++i) truth[{ids[i], 1}] = y[i];
  for (int i = 0; i < 4; ++i) truth[{ids[i] + "x", 1}] = y[i];

  std::vector<std::string> idsx = {"ax", "bx", "cx", "dx"};
  // Major m1 perfect, major m2 fully reversed: mean = (1 + -1)/2 = 0.
  auto p1 = make_pred(1, "m1", ids, y);
  auto p2 = make_pred(1, "m2", idsx, {1.0, 2.0 / 3, 1.0 / 3, 0.0});
  auto rep = semester_report({p1, p2}, truth);
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].per_major.at("m1") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep[0].per_major.at("m2") == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(rep[0].mean_spearman == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(mean_spearman(rep) == doctest::Approx(0.0).epsilon(1e-12));

  auto p3 = make_pred(1, "m3", {"q", "r", "s"}, {0.0, 0.5, 1.0});
  CHECK_THROWS(semester_report({p3}, truth));
}

TEST_CASE("feature correlations: planted monotone feature, undefined marker") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  FeatureMatrix fm;
  fm.semester_id = 1;
  fm.major_id = "m";
  int n = 400;
  fm.X = Eigen::MatrixXd::Zero(n, kNumFeatures);
  fm.y.resize(n);
  for (int i = 0; i < n; ++i) {
    fm.y[i] = static_cast<double>(i) / (n - 1);
    fm.student_ids.push_back("s" + std::to_string(i));
    fm.X(i, 0) = fm.y[i];          // equals rank -> Spearman 1
    fm.X(i, 1) = -fm.y[i];         // reversed -> -1
    fm.X(i, 2) = nd(rng);          // noise
    // col 3 left constant -> undefined
    for (int c = 4; c < kWakeOffset; ++c) fm.X(i, c) = nd(rng);
    // Wake one-hot perfectly tied to performance quintile.
    int quint = std::min(4, 5 * i / n);
    fm.X(i, kWakeOffset + quint) = 1.0;
    fm.X(i, kBedOffset + static_cast<int>(rng() % kNumBedBins)) = 1.0;
  }
  auto table = feature_correlations({fm});
  std::map<std::string, FeatureCorrelation> by_name;
  for (auto& row : table) by_name[row.feature] = row;

  CHECK(by_name.at("lib_entries").value.value() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(by_name.at("lib_entries_weekend").value.value() ==
        doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_FALSE(by_name.at("books_borrowed").value.has_value());  // constant
  CHECK_FALSE(by_name.at("lib_entries").is_cramers_v);

  CHECK(by_name.at("wake_time").is_cramers_v);
  CHECK(by_name.at("wake_time").value.value() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(by_name.at("bed_time").is_cramers_v);
  CHECK(by_name.at("bed_time").value.value() < 0.2);
}
