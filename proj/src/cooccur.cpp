#include "mtltr/cooccur.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "mtltr/csv.hpp"

namespace mtltr {

namespace {

// Flat (location_id, student, timestamp) view used by both the real count
// and the null model.
struct FlatEvent {
  std::string location_id;
  std::string student_id;
  Instant timestamp;
};

std::map<StudentPair, std::int64_t> count_pairs(
    std::map<std::string, std::vector<FlatEvent>>& by_location,
    std::int64_t window_seconds) {
  std::map<StudentPair, std::int64_t> counts;
  for (auto& [loc, events] : by_location) {
    std::sort(events.begin(), events.end(),
              [](const FlatEvent& a, const FlatEvent& b) {
                return std::tie(a.timestamp, a.student_id) <
                       std::tie(b.timestamp, b.student_id);
              });
    for (std::size_t i = 0; i < events.size(); ++i)
      for (std::size_t j = i + 1; j < events.size() &&
                                  events[j].timestamp - events[i].timestamp <=
                                      window_seconds;
           ++j)
        if (events[i].student_id != events[j].student_id)
          ++counts[StudentPair(events[i].student_id, events[j].student_id)];
  }
  return counts;
}

std::map<std::string, std::vector<FlatEvent>> flatten(const EventLog& log,
                                                      LocationType type) {
  std::map<std::string, std::vector<FlatEvent>> out;
  for (const auto& [loc, events] : log.by_location(type))
    for (const BehaviorEvent& e : events)
      out[loc].push_back({e.location_id, e.student_id, e.timestamp});
  return out;
}

// Histogram over frequency values: index f -> number of pairs with count f.
std::vector<double> frequency_curve(
    const std::map<StudentPair, std::int64_t>& counts, std::size_t size) {
  std::vector<double> curve(size, 0.0);
  for (const auto& [pair, c] : counts) {
    if (static_cast<std::size_t>(c) >= curve.size())
      curve.resize(static_cast<std::size_t>(c) + 1, 0.0);
    curve[static_cast<std::size_t>(c)] += 1.0;
  }
  return curve;
}

}  // namespace

CooccurrenceCounts count_cooccurrences(const EventLog& log, LocationType type,
                                       std::int64_t window_seconds) {
  auto flat = flatten(log, type);
  CooccurrenceCounts out;
  out.location_type = type;
  out.counts = count_pairs(flat, window_seconds);
  return out;
}

NullModelReport null_model_threshold(const EventLog& log, LocationType type,
                                     int repetitions, std::uint64_t seed,
                                     std::int64_t window_seconds) {
  NullModelReport rep;
  auto flat = flatten(log, type);

  std::set<std::string> students;
  for (const auto& [loc, events] : flat)
    for (const FlatEvent& e : events) students.insert(e.student_id);
  if (students.size() < 2) return rep;  // threshold stays +inf

  auto real = count_pairs(flat, window_seconds);
  rep.real_curve = frequency_curve(real, 1);
  std::size_t size = rep.real_curve.size();

  // A student's records of this type, across its location ids; shuffling
  // permutes the timestamps among these records while keeping the multiset
  // of locations and the event count fixed.
  std::map<std::string, std::vector<std::pair<std::string, std::size_t>>>
      by_student;  // student -> [(location_id, index into flat[loc])]
  for (auto& [loc, events] : flat)
    for (std::size_t i = 0; i < events.size(); ++i)
      by_student[events[i].student_id].emplace_back(loc, i);

  std::vector<std::vector<double>> null_curves;
  std::mt19937_64 rng(seed);
  for (int r = 0; r < repetitions; ++r) {
    auto shuffled = flat;
    for (const auto& [sid, refs] : by_student) {
      std::vector<Instant> ts;
      ts.reserve(refs.size());
      for (const auto& [loc, i] : refs) ts.push_back(flat.at(loc)[i].timestamp);
      std::shuffle(ts.begin(), ts.end(), rng);
      for (std::size_t k = 0; k < refs.size(); ++k)
        shuffled[refs[k].first][refs[k].second].timestamp = ts[k];
    }
    auto counts = count_pairs(shuffled, window_seconds);
    auto curve = frequency_curve(counts, size);
    size = std::max(size, curve.size());
    null_curves.push_back(std::move(curve));
  }

  rep.real_curve.resize(size, 0.0);
  rep.null_mean_curve.assign(size, 0.0);
  rep.null_std_curve.assign(size, 0.0);
  for (auto& c : null_curves) c.resize(size, 0.0);
  for (std::size_t f = 0; f < size; ++f) {
    double mean = 0.0;
    for (const auto& c : null_curves) mean += c[f];
    mean /= repetitions;
    double var = 0.0;
    for (const auto& c : null_curves) var += (c[f] - mean) * (c[f] - mean);
    var /= repetitions;
    rep.null_mean_curve[f] = mean;
    rep.null_std_curve[f] = std::sqrt(var);
  }

  // Smallest f with real count above null mean + 2 std for every f' >= f.
  // Frequencies where neither the real log nor the null model place any pair
  // are vacuously fine.
  std::size_t last_violation = 0;
  for (std::size_t f = 1; f < size; ++f) {
    double band = rep.null_mean_curve[f] + 2.0 * rep.null_std_curve[f];
    bool empty = rep.real_curve[f] == 0.0 && rep.null_mean_curve[f] == 0.0;
    if (!empty && rep.real_curve[f] <= band) last_violation = f;
  }
  double theta = static_cast<double>(last_violation + 1);
  // No real pair reaches the candidate threshold: no ties form.
  double real_max = 0.0;
  for (std::size_t f = size; f-- > 1;)
    if (rep.real_curve[f] > 0.0) {
      real_max = static_cast<double>(f);
      break;
    }
  rep.threshold = theta > real_max
                      ? std::numeric_limits<double>::infinity()
                      : theta;
  return rep;
}

SimilarityGraph combine_similarity(
    const std::vector<CooccurrenceCounts>& counts,
    const std::map<LocationType, double>& thresholds,
    const StudentRegistry& registry) {
  SimilarityGraph g;
  g.thresholds = thresholds;
  // Directed accumulations tau_{i->j}; symmetrized at the end.
  std::map<std::pair<std::string, std::string>, double> directed;
  for (const CooccurrenceCounts& cc : counts) {
    auto it = thresholds.find(cc.location_type);
    double theta = it == thresholds.end() ? 1.0 : it->second;
    std::map<StudentPair, std::int64_t> surviving;
    std::map<std::string, std::int64_t> row_max;
    for (const auto& [pair, c] : cc.counts) {
      if (static_cast<double>(c) < theta) continue;
      surviving[pair] = c;
      row_max[pair.a] = std::max(row_max[pair.a], c);
      row_max[pair.b] = std::max(row_max[pair.b], c);
    }
    for (const auto& [pair, c] : surviving) {
      directed[{pair.a, pair.b}] +=
          static_cast<double>(c) / static_cast<double>(row_max[pair.a]);
      directed[{pair.b, pair.a}] +=
          static_cast<double>(c) / static_cast<double>(row_max[pair.b]);
    }
  }
  for (const auto& [key, v] : directed) {
    if (key.first > key.second) continue;
    auto back = directed.find({key.second, key.first});
    double other = back == directed.end() ? 0.0 : back->second;
    double tau = 0.5 * (v + other);
    if (tau > 0.0) g.tau[StudentPair(key.first, key.second)] = tau;
  }
  for (const auto& [pair, tau] : g.tau) {
    const StudentInfo* a = registry.find(pair.a);
    const StudentInfo* b = registry.find(pair.b);
    if (!a || !b || a->major_id != b->major_id) continue;
    g.similar_group[pair.a].push_back(pair.b);
    g.similar_group[pair.b].push_back(pair.a);
  }
  for (auto& [sid, group] : g.similar_group)
    std::sort(group.begin(), group.end());
  return g;
}

SimilarityGraph build_similarity(const EventLog& log,
                                 const std::vector<LocationType>& types,
                                 int repetitions, std::uint64_t seed,
                                 std::int64_t window_seconds,
                                 std::map<LocationType, NullModelReport>* reports) {
  std::vector<CooccurrenceCounts> counts;
  std::map<LocationType, double> thresholds;
  for (std::size_t i = 0; i < types.size(); ++i) {
    counts.push_back(count_cooccurrences(log, types[i], window_seconds));
    NullModelReport rep = null_model_threshold(log, types[i], repetitions,
                                               seed + i, window_seconds);
    thresholds[types[i]] = rep.threshold;
    if (reports) (*reports)[types[i]] = std::move(rep);
  }
  return combine_similarity(counts, thresholds, log.registry());
}

double performance_similarity(double rank_i,
                              const std::vector<double>& group_ranks) {
  if (group_ranks.empty())
    throw std::invalid_argument("performance_similarity: empty group");
  double acc = 0.0;
  for (double r : group_ranks) acc += std::abs(rank_i - r);
  return acc / static_cast<double>(group_ranks.size());
}

namespace {

// Regularized incomplete beta function via Lentz's continued fraction;
// used for the Student-t CDF.
double betacf(double a, double b, double x) {
  const double eps = 1e-14, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
              a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// P(T <= t) for Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof) {
  double x = dof / (dof + t * t);
  double p = 0.5 * incbeta(0.5 * dof, 0.5, x);
  return t > 0.0 ? 1.0 - p : p;
}

}  // namespace

TTestResult similarity_ttest(const SimilarityGraph& graph,
                             const StudentRegistry& registry,
                             const std::map<std::string, double>& ranks,
                             int nonsimilar_sample, std::uint64_t seed,
                             double alpha) {
  std::mt19937_64 rng(seed);
  std::vector<double> qf, qnf;
  auto majors = registry.majors();
  for (const auto& [major, members] : majors) {
    for (const std::string& sid : members) {
      auto rit = ranks.find(sid);
      if (rit == ranks.end()) continue;
      auto git = graph.similar_group.find(sid);
      if (git == graph.similar_group.end() || git->second.empty()) continue;
      std::vector<double> similar_ranks;
      for (const std::string& j : git->second) {
        auto jt = ranks.find(j);
        if (jt != ranks.end()) similar_ranks.push_back(jt->second);
      }
      if (similar_ranks.empty()) continue;

      // Non-similar, same-major pool.
      std::vector<double> pool;
      std::set<std::string> fset(git->second.begin(), git->second.end());
      for (const std::string& j : members) {
        if (j == sid || fset.count(j)) continue;
        auto jt = ranks.find(j);
        if (jt != ranks.end()) pool.push_back(jt->second);
      }
      if (pool.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      std::vector<double> sampled;
      for (int k = 0; k < nonsimilar_sample; ++k)
        sampled.push_back(pool[pick(rng)]);

      qf.push_back(performance_similarity(rit->second, similar_ranks));
      qnf.push_back(performance_similarity(rit->second, sampled));
    }
  }
  TTestResult res;
  res.n_students = static_cast<int>(qf.size());
  if (qf.size() < 2)
    throw std::runtime_error("similarity_ttest: fewer than 2 usable students");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  double mf = mean(qf), mnf = mean(qnf);
  double n = static_cast<double>(qf.size());
  double ssf = 0.0, ssnf = 0.0;
  for (double x : qf) ssf += (x - mf) * (x - mf);
  for (double x : qnf) ssnf += (x - mnf) * (x - mnf);
  double sp2 = (ssf + ssnf) / (2.0 * n - 2.0);
  double se = std::sqrt(sp2 * (2.0 / n));
  res.dof = 2.0 * n - 2.0;
  res.t = se > 0.0 ? (mf - mnf) / se : 0.0;
  // Alternative Q_NF > Q_F, i.e. negative t supports rejection.
  res.p_value = student_t_cdf(res.t, res.dof);
  res.reject = res.p_value < alpha;
  return res;
}

TieStrengthCurve tie_strength_curve(const SimilarityGraph& graph,
                                    const std::map<std::string, double>& ranks,
                                    int levels) {
  std::vector<std::pair<double, double>> edges;  // (tau, |gap|)
  for (const auto& [pair, tau] : graph.tau) {
    auto a = ranks.find(pair.a);
    auto b = ranks.find(pair.b);
    if (a == ranks.end() || b == ranks.end()) continue;
    edges.emplace_back(tau, std::abs(a->second - b->second));
  }
  std::sort(edges.begin(), edges.end());
  TieStrengthCurve out;
  if (edges.empty()) return out;
  int n_levels = levels;
  if (static_cast<int>(edges.size()) < levels) {
    n_levels = static_cast<int>(edges.size());
    out.reduced = true;
  }
  std::size_t n = edges.size();
  for (int g = 0; g < n_levels; ++g) {
    std::size_t lo = n * static_cast<std::size_t>(g) / n_levels;
    std::size_t hi = n * static_cast<std::size_t>(g + 1) / n_levels;
    TieStrengthLevel lvl;
    lvl.level = static_cast<double>(g + 1) / n_levels;
    lvl.pair_count = static_cast<int>(hi - lo);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += edges[i].second;
    lvl.mean_gap = acc / static_cast<double>(hi - lo);
    out.levels.push_back(lvl);
  }
  return out;
}

void write_similarity_csv(const std::string& path, const SimilarityGraph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "student_i,student_j,tau\n";
  char buf[32];
  for (const auto& [pair, tau] : g.tau) {
    std::snprintf(buf, sizeof(buf), "%.17g", tau);
    out << pair.a << ',' << pair.b << ',' << buf << '\n';
  }
}

void attach_groups(SimilarityGraph& g,
                   const std::map<std::string, std::string>& major_of) {
  g.similar_group.clear();
  for (const auto& [pair, tau] : g.tau) {
    auto a = major_of.find(pair.a);
    auto b = major_of.find(pair.b);
    if (a == major_of.end() || b == major_of.end() || a->second != b->second)
      continue;
    g.similar_group[pair.a].push_back(pair.b);
    g.similar_group[pair.b].push_back(pair.a);
  }
  for (auto& [sid, group] : g.similar_group)
    std::sort(group.begin(), group.end());
}

SimilarityGraph read_similarity_csv(const std::string& path) {
  CsvReader csv(path);
  int ci = csv.col("student_i"), cj = csv.col("student_j"),
      ct = csv.col("tau");
  SimilarityGraph g;
  std::vector<std::string> f;
  while (csv.next(f)) {
    double tau = std::atof(f[ct].c_str());
    if (tau > 0.0) g.tau[StudentPair(f[ci], f[cj])] = tau;
  }
  return g;
}

}  // namespace mtltr
