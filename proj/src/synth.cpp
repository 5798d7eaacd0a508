#include "mtltr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mtltr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string pad_id(const std::string& prefix, int n, int width = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix.c_str(), width, n);
  return buf;
}

std::vector<int> major_sizes(const SynthSpec& spec) {
  std::vector<int> sizes;
  for (int m = 0; m < spec.num_majors; ++m) {
    double t = spec.num_majors > 1
                   ? static_cast<double>(m) / (spec.num_majors - 1)
                   : 0.0;
    sizes.push_back(static_cast<int>(std::lround(
        spec.min_major_size + t * (spec.max_major_size - spec.min_major_size))));
  }
  return sizes;
}

PlantedGrade gen_grade(const SynthSpec& spec, const std::string& grade_id,
                       const std::vector<MatrixXd>& W_star,
                       std::mt19937_64& rng) {
  PlantedGrade grade;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<int> sizes = major_sizes(spec);

  for (int m = 0; m < spec.num_majors; ++m) {
    std::string major = pad_id("m", m + 1, 2);
    int n = sizes[m];
    std::vector<std::string> ids;
    std::vector<int> clusters;
    for (int i = 0; i < n; ++i) {
      std::string sid = grade_id + "_" + major + "_" + pad_id("s", i + 1);
      ids.push_back(sid);
      int c = spec.clusters_per_major > 0 ? i % spec.clusters_per_major : -1;
      clusters.push_back(c);
      grade.major_of[sid] = major;
      grade.cluster_of[sid] = c;
    }
    // Cluster ties: full intra-cluster graph with unit strength.
    if (spec.clusters_per_major > 0)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (clusters[i] == clusters[j])
            grade.graph.tau[StudentPair(ids[i], ids[j])] = 1.0;

    // Features are fixed per student; scores drift with W*.
    MatrixXd X(n, spec.p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < spec.p; ++j) X(i, j) = gauss(rng);

    for (int s = 0; s < spec.num_semesters; ++s) {
      // Shared per-(semester, cluster) residual makes similar students'
      // outcomes correlated.
      std::vector<double> cluster_noise(
          static_cast<std::size_t>(std::max(1, spec.clusters_per_major)));
      for (double& g : cluster_noise) g = gauss(rng);
      double rho = std::clamp(spec.cluster_correlation, 0.0, 1.0);

      VectorXd latent(n);
      for (int i = 0; i < n; ++i) {
        double eps = gauss(rng);
        if (clusters[i] >= 0)
          eps = std::sqrt(rho) * cluster_noise[static_cast<std::size_t>(
                    clusters[i])] +
                std::sqrt(1.0 - rho) * eps;
        latent[i] = W_star[s].row(m).dot(X.row(i)) + spec.label_noise * eps;
      }
      // Higher latent score = better performer = smaller normalized rank.
      std::vector<int> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return latent[a] > latent[b]; });
      FeatureMatrix fm;
      fm.semester_id = s + 1;
      fm.major_id = major;
      fm.student_ids = ids;
      fm.X = X;
      fm.y.resize(n);
      for (int r = 0; r < n; ++r)
        fm.y[order[r]] = n > 1 ? static_cast<double>(r) / (n - 1) : 0.0;
      for (int i = 0; i < n; ++i)
        grade.ranks[{ids[i], s + 1}] = fm.y[i];
      grade.features.push_back(std::move(fm));
    }
  }
  attach_groups(grade.graph, grade.major_of);
  return grade;
}

}  // namespace

PlantedData gen_planted(const SynthSpec& spec) {
  if (spec.true_rank > std::min(spec.num_majors, spec.p))
    throw std::invalid_argument("gen_planted: true_rank exceeds min(M, p)");
  if (spec.num_majors <= 0 || spec.num_semesters <= 0 ||
      spec.min_major_size <= 0 || spec.max_major_size < spec.min_major_size)
    throw std::invalid_argument("gen_planted: infeasible spec");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PlantedData out;
  // Non-negative sparse U*: each major mixes at most 2 of the k* hidden
  // categories. Held fixed over semesters; the temporal drift acts on V*, so
  // consecutive W* differ by a zero-mean Gaussian low-rank increment.
  MatrixXd U(spec.num_majors, spec.true_rank);
  U.setZero();
  std::uniform_int_distribution<int> pick_cat(0, spec.true_rank - 1);
  for (int m = 0; m < spec.num_majors; ++m) {
    int c1 = m % spec.true_rank;  // every category used
    int c2 = pick_cat(rng);
    U(m, c1) = 0.5 + 0.5 * unif(rng);
    if (c2 != c1) U(m, c2) = 0.5 * unif(rng);
  }
  MatrixXd V(spec.true_rank, spec.p);
  for (int i = 0; i < spec.true_rank; ++i)
    for (int j = 0; j < spec.p; ++j) V(i, j) = gauss(rng);

  for (int s = 0; s < spec.num_semesters; ++s) {
    if (s > 0)
      for (int i = 0; i < spec.true_rank; ++i)
        for (int j = 0; j < spec.p; ++j) V(i, j) += spec.drift * gauss(rng);
    out.U_star.push_back(U);
    out.V_star.push_back(V);
    out.W_star.push_back(U * V);
  }

  out.train = gen_grade(spec, "g1", out.W_star, rng);
  out.test = gen_grade(spec, "g2", out.W_star, rng);
  return out;
}

SynthSpec ablation_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.num_majors = 6;
  spec.num_semesters = 5;
  spec.min_major_size = 50;  // small majors stress the shared factors
  spec.max_major_size = 80;
  spec.true_rank = 3;
  spec.drift = 0.6;
  spec.label_noise = 2.0;
  spec.clusters_per_major = 5;
  spec.cluster_correlation = 0.8;
  spec.seed = seed;
  return spec;
}

namespace {

int circular_hour_sample(std::mt19937_64& rng, int mode, double kappa) {
  // Discrete von Mises-style distribution over 24 hour bins.
  std::array<double, 24> w;
  double total = 0.0;
  for (int h = 0; h < 24; ++h) {
    double ang = 2.0 * M_PI * (h - mode) / 24.0;
    w[h] = std::exp(kappa * std::cos(ang));
    total += w[h];
  }
  std::uniform_real_distribution<double> unif(0.0, total);
  double r = unif(rng);
  for (int h = 0; h < 24; ++h) {
    r -= w[h];
    if (r <= 0.0) return h;
  }
  return 23;
}

struct RawEvent {
  std::string sid;
  Instant ts;
  std::string loc;
  const char* type;
  double amount;
};

std::string events_to_csv(std::vector<RawEvent>& events) {
  std::sort(events.begin(), events.end(), [](const RawEvent& a, const RawEvent& b) {
    return std::tie(a.ts, a.sid, a.loc) < std::tie(b.ts, b.sid, b.loc);
  });
  std::ostringstream os;
  os << "student_id,timestamp,location_id,location_type,amount\n";
  for (const RawEvent& e : events)
    os << e.sid << ',' << format_instant(e.ts) << ',' << e.loc << ','
       << e.type << ',' << e.amount << '\n';
  return os.str();
}

std::string calendar_csv_for(Instant start, int num_days) {
  Instant end = start + (num_days - 1) * kSecondsPerDay;
  Instant exam = end - 10 * kSecondsPerDay;
  std::ostringstream os;
  os << "semester_id,start_date,end_date,exam_start_date\n";
  os << "1," << format_date(start) << ',' << format_date(end) << ','
     << format_date(exam) << '\n';
  return os.str();
}

}  // namespace

EventLogBundle gen_event_log(const SynthSpec& spec, int num_students,
                             int num_days) {
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Instant sem_start = *parse_date("2023-09-01");

  EventLogBundle out;
  out.calendar_csv = calendar_csv_for(sem_start, num_days);

  std::ostringstream roster, ranks;
  roster << "student_id,major_id,grade_id\n";
  ranks << "student_id,semester_id,normalized_rank\n";

  const int wake_choices[] = {6, 7, 8, 9, 10};
  const int bed_choices[] = {21, 22, 23, 0, 1, 2};
  std::vector<RawEvent> events;

  for (int i = 0; i < num_students; ++i) {
    BehaviorIntent bi;
    bi.student_id = pad_id("p", i + 1);
    bi.major_id = pad_id("m", i % 3 + 1, 2);
    bi.lib_rate = 5.0 + 80.0 * unif(rng);
    bi.borrow_rate = 5.0 + 60.0 * unif(rng);
    bi.water_rate = 5.0 + 120.0 * unif(rng);
    bi.print_rate = 3.0 + 50.0 * unif(rng);
    bi.breakfast_prob = unif(rng);
    bi.shower_kappa = 4.0 * unif(rng);
    bi.shop_kappa = 4.0 * unif(rng);
    bi.wake_hour = wake_choices[static_cast<int>(unif(rng) * 5) % 5];
    bi.bed_hour = bed_choices[static_cast<int>(unif(rng) * 6) % 6];
    // The breakfast window closes at 09:00 and all activity starts after the
    // wake anchor, so late wakers cannot have breakfast; keep the intent
    // consistent with what the log can express.
    if (bi.wake_hour + 1 >= 9) bi.breakfast_prob = 0.0;

    roster << bi.student_id << ',' << bi.major_id << ",g1\n";
    ranks << bi.student_id << ",1,"
          << (num_students > 1
                  ? static_cast<double>(i) / (num_students - 1)
                  : 0.0)
          << '\n';

    auto day_start = [&](int d) { return sem_start + d * kSecondsPerDay; };
    auto rand_sec = [&](int lo_min, int hi_min) {
      return static_cast<Instant>(
          (lo_min + unif(rng) * (hi_min - lo_min)) * 60.0);
    };
    std::poisson_distribution<int> lib_n(bi.lib_rate), borrow_n(bi.borrow_rate),
        water_n(bi.water_rate), print_n(bi.print_rate);

    // Anchor events pin the first/last record of every day to the planted
    // wake/bed hours; all other activity stays inside (wake+1, 21).
    for (int d = 0; d < num_days; ++d) {
      Instant wake_ts = day_start(d) + bi.wake_hour * 3600 + rand_sec(5, 55);
      events.push_back({bi.student_id, wake_ts, "dorm_1", "dormitory_gate", 0.0});
      Instant bed_base = bi.bed_hour >= 21
                             ? day_start(d) + bi.bed_hour * 3600
                             : day_start(d + 1) + bi.bed_hour * 3600;
      events.push_back({bi.student_id, bed_base + rand_sec(5, 55), "dorm_1",
                        "dormitory_gate", 0.0});
      if (unif(rng) < bi.breakfast_prob) {
        // Breakfast window only opens for students who wake early enough.
        int lo = std::max(6, bi.wake_hour + 1) * 60 + 5;
        if (lo < 9 * 60)
          events.push_back({bi.student_id,
                            day_start(d) + rand_sec(lo, 9 * 60 - 1), "caf_1",
                            "cafeteria", 6.5});
      }
      // Daily shower inside the activity window, hour from the planted
      // circular distribution clamped into the window.
      int sh = circular_hour_sample(rng, 20, bi.shower_kappa);
      sh = std::clamp(sh, bi.wake_hour + 1, 20);
      events.push_back({bi.student_id, day_start(d) + sh * 3600 + rand_sec(1, 58),
                        "shower_1", "shower", 1.2});
      if (unif(rng) < 0.35) {
        int sp = circular_hour_sample(rng, 17, bi.shop_kappa);
        sp = std::clamp(sp, bi.wake_hour + 1, 20);
        events.push_back({bi.student_id,
                          day_start(d) + sp * 3600 + rand_sec(1, 58), "shop_1",
                          "supermarket", 8.0});
      }
    }
    auto scatter = [&](int count, const char* loc_type, const char* loc_id,
                       double amount) {
      for (int e = 0; e < count; ++e) {
        int d = static_cast<int>(unif(rng) * num_days) % num_days;
        int lo = (bi.wake_hour + 1) * 60;
        int hi = 20 * 60;
        events.push_back({bi.student_id, day_start(d) + rand_sec(lo, hi),
                          loc_id, loc_type, amount});
      }
    };
    scatter(lib_n(rng), "library_gate", "lib_1", 0.0);
    scatter(borrow_n(rng), "library_borrow", "lib_borrow_1", 0.0);
    scatter(water_n(rng), "water_dispenser", "water_1", 0.1);
    scatter(print_n(rng), "printer", "print_1", 0.5);

    out.intents.push_back(std::move(bi));
  }
  out.events_csv = events_to_csv(events);
  out.roster_csv = roster.str();
  out.ranks_csv = ranks.str();
  return out;
}

CooccurBenchmark gen_cooccur_log(int planted_pairs, int background_students,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int num_days = 100;
  const int num_counters = 4;
  const Instant sem_start = *parse_date("2023-09-01");

  CooccurBenchmark out;
  out.calendar_csv = calendar_csv_for(sem_start, num_days);
  std::ostringstream roster;
  roster << "student_id,major_id,grade_id\n";
  std::vector<RawEvent> events;

  auto counter_id = [&](int c) { return pad_id("caf_", c + 1, 1); };
  auto lunch_time = [&](int d) {
    return sem_start + d * kSecondsPerDay + 11 * 3600 +
           static_cast<Instant>(unif(rng) * 7200.0);
  };

  // Background students: independent lunch visits.
  for (int i = 0; i < background_students; ++i) {
    std::string sid = pad_id("b", i + 1);
    roster << sid << ",m01,g1\n";
    for (int d = 0; d < num_days; ++d)
      for (int v = 0; v < 2; ++v)
        events.push_back({sid, lunch_time(d),
                          counter_id(static_cast<int>(unif(rng) * num_counters) %
                                     num_counters),
                          "cafeteria", 10.0});
  }
  // Planted pairs: co-visits at the same counter within seconds.
  for (int pidx = 0; pidx < planted_pairs; ++pidx) {
    std::string a = pad_id("t", 2 * pidx + 1);
    std::string b = pad_id("t", 2 * pidx + 2);
    roster << a << ",m01,g1\n" << b << ",m01,g1\n";
    out.planted.emplace_back(a, b);
    for (int d = 0; d < num_days; ++d) {
      if (unif(rng) < 0.6) {
        Instant t = lunch_time(d);
        std::string c = counter_id(static_cast<int>(unif(rng) * num_counters) %
                                   num_counters);
        events.push_back({a, t, c, "cafeteria", 10.0});
        events.push_back({b, t + static_cast<Instant>(unif(rng) * 40.0), c,
                          "cafeteria", 10.0});
      } else {
        // solo visits keep per-student event counts comparable
        events.push_back({a, lunch_time(d),
                          counter_id(static_cast<int>(unif(rng) * num_counters) %
                                     num_counters),
                          "cafeteria", 10.0});
        events.push_back({b, lunch_time(d),
                          counter_id(static_cast<int>(unif(rng) * num_counters) %
                                     num_counters),
                          "cafeteria", 10.0});
      }
    }
  }
  out.events_csv = events_to_csv(events);
  out.roster_csv = roster.str();
  return out;
}

std::string ranks_to_csv(const RankTable& ranks) {
  std::ostringstream os;
  os << "student_id,semester_id,normalized_rank\n";
  char buf[32];
  for (const auto& [key, r] : ranks) {
    std::snprintf(buf, sizeof(buf), "%.17g", r);
    os << key.first << ',' << key.second << ',' << buf << '\n';
  }
  return os.str();
}

std::string roster_to_csv(const std::map<std::string, std::string>& major_of,
                          const std::string& grade_id) {
  std::ostringstream os;
  os << "student_id,major_id,grade_id\n";
  for (const auto& [sid, major] : major_of)
    os << sid << ',' << major << ',' << grade_id << '\n';
  return os.str();
}

}  // namespace mtltr
