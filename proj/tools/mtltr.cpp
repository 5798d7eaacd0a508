// Command-line front end for the ranking pipeline:
// synth -> ingest -> featurize -> similarity -> train -> predict ->
// evaluate -> report, plus an end-to-end synthetic benchmark.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "mtltr/cooccur.hpp"
#include "mtltr/csv.hpp"
#include "mtltr/dataset.hpp"
#include "mtltr/evaluation.hpp"
#include "mtltr/event_store.hpp"
#include "mtltr/features.hpp"
#include "mtltr/model.hpp"
#include "mtltr/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtltr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a64 over raw file bytes; cheap, stable input fingerprint for run.json.
std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    for (std::streamsize i = 0; i < in.gcount(); ++i)
      h = (h ^ static_cast<unsigned char>(buf[i])) * 1099511628211ull;
  char out[20];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void require_new(const std::string& path, bool force) {
  if (!force && fs::exists(path))
    throw DataError(path + " exists; pass --force to overwrite");
}

void write_text(const std::string& path, const std::string& content,
                bool force) {
  require_new(path, force);
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << content;
}

// Every subcommand drops a run.json next to its primary output: the resolved
// configuration plus digests of every input file.
void write_run_json(const std::string& out_dir, const std::string& subcommand,
                    const json& config,
                    const std::vector<std::string>& inputs, bool force) {
  json run;
  run["subcommand"] = subcommand;
  run["config"] = config;
  json digests = json::object();
  for (const std::string& p : inputs) digests[p] = file_digest(p);
  run["input_digests"] = digests;
  fs::create_directories(out_dir.empty() ? "." : out_dir);
  std::string path = (fs::path(out_dir.empty() ? "." : out_dir) / "run.json").string();
  if (!force && fs::exists(path)) fs::remove(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << run.dump(2) << '\n';
}

std::string parent_dir(const std::string& path) {
  fs::path p(path);
  return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

json config_to_json(const TrainConfig& cfg) {
  return json{{"lambda_s", cfg.lambda_s},   {"lambda_n", cfg.lambda_n},
              {"lambda_1", cfg.lambda_1},   {"lambda_2", cfg.lambda_2},
              {"lambda_e", cfg.lambda_e},   {"xi", cfg.xi},
              {"k", cfg.k},                 {"eta_v", cfg.eta_v},
              {"eta_u", cfg.eta_u},         {"max_outer", cfg.max_outer},
              {"tolerance", cfg.tolerance}, {"seed", cfg.seed},
              {"pair_batch", cfg.pair_batch}};
}

// Flat-key JSON config; unknown keys are rejected to catch typos.
TrainConfig load_config_file(const std::string& path, TrainConfig cfg) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad config json: " + std::string(e.what()));
  }
  for (const auto& [key, val] : j.items()) {
    if (key == "lambda_s") cfg.lambda_s = val;
    else if (key == "lambda_n") cfg.lambda_n = val;
    else if (key == "lambda_1") cfg.lambda_1 = val;
    else if (key == "lambda_2") cfg.lambda_2 = val;
    else if (key == "lambda_e") cfg.lambda_e = val;
    else if (key == "xi") cfg.xi = val;
    else if (key == "k") cfg.k = val;
    else if (key == "eta_v") cfg.eta_v = val;
    else if (key == "eta_u") cfg.eta_u = val;
    else if (key == "max_outer") cfg.max_outer = val;
    else if (key == "tolerance") cfg.tolerance = val;
    else if (key == "seed") cfg.seed = val;
    else if (key == "pair_batch") cfg.pair_batch = val;
    else throw DataError("unknown config key: " + key);
  }
  return cfg;
}

IngestResult load_log(const std::string& events, const std::string& roster,
                      const std::string& calendar) {
  try {
    return ingest_events(events, roster, calendar);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

// %.17g for every float written into reports keeps reruns byte-comparable.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Subcommand payloads. Each returns an exit code.

struct CommonTrainFlags {
  std::string config_path;
  TrainConfig overrides;  // CLI values copied over the file values
  std::vector<std::string> set_flags;
};

TrainConfig resolve_config(const CLI::App* cmd, const TrainConfig& cli_cfg,
                           const std::string& config_path) {
  TrainConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
  // Flags override file values only when explicitly passed.
  auto take = [&](const char* flag, auto member) {
    if (cmd->count(flag) > 0) cfg.*member = cli_cfg.*member;
  };
  take("--lambda-s", &TrainConfig::lambda_s);
  take("--lambda-n", &TrainConfig::lambda_n);
  take("--lambda-1", &TrainConfig::lambda_1);
  take("--lambda-2", &TrainConfig::lambda_2);
  take("--lambda-e", &TrainConfig::lambda_e);
  take("--xi", &TrainConfig::xi);
  take("--k", &TrainConfig::k);
  take("--max-outer", &TrainConfig::max_outer);
  take("--tolerance", &TrainConfig::tolerance);
  take("--seed", &TrainConfig::seed);
  take("--pair-batch", &TrainConfig::pair_batch);
  return cfg;
}

void add_train_flags(CLI::App* cmd, TrainConfig* cfg, std::string* config_path) {
  cmd->add_option("--config", *config_path, "JSON config file (flat keys)");
  cmd->add_option("--lambda-s", cfg->lambda_s, "sequential smoothness weight");
  cmd->add_option("--lambda-n", cfg->lambda_n, "similarity network weight");
  cmd->add_option("--lambda-1", cfg->lambda_1, "L1 weight on U");
  cmd->add_option("--lambda-2", cfg->lambda_2, "L2 weight on V");
  cmd->add_option("--lambda-e", cfg->lambda_e, "ridge weight (flat variants)");
  cmd->add_option("--xi", cfg->xi, "inference blending weight");
  cmd->add_option("--k", cfg->k, "latent category count");
  cmd->add_option("--max-outer", cfg->max_outer, "outer iteration cap");
  cmd->add_option("--tolerance", cfg->tolerance, "relative objective tolerance");
  cmd->add_option("--seed", cfg->seed, "RNG seed");
  cmd->add_option("--pair-batch", cfg->pair_batch,
                  "sampled pairs per step (0 = full batch)");
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed, int students,
              int days, bool planted, bool force) {
  fs::create_directories(out_dir);
  SynthSpec spec;
  spec.seed = seed;
  if (planted) {
    PlantedData data = gen_planted(spec);
    for (const char* name : {"/features_train.csv", "/features_test.csv",
                             "/similarity_train.csv", "/similarity_test.csv"})
      require_new(out_dir + name, force);
    write_features_csv(out_dir + "/features_train.csv", data.train.features);
    write_features_csv(out_dir + "/features_test.csv", data.test.features);
    write_similarity_csv(out_dir + "/similarity_train.csv", data.train.graph);
    write_similarity_csv(out_dir + "/similarity_test.csv", data.test.graph);
    write_text(out_dir + "/ranks_train.csv", ranks_to_csv(data.train.ranks), force);
    write_text(out_dir + "/ranks_test.csv", ranks_to_csv(data.test.ranks), force);
    write_text(out_dir + "/roster_train.csv",
               roster_to_csv(data.train.major_of, "g1"), force);
    write_text(out_dir + "/roster_test.csv",
               roster_to_csv(data.test.major_of, "g2"), force);
    json truth;
    for (std::size_t s = 0; s < data.W_star.size(); ++s) {
      json W = json::array();
      for (Eigen::Index r = 0; r < data.W_star[s].rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < data.W_star[s].cols(); ++c)
          row.push_back(data.W_star[s](r, c));
        W.push_back(row);
      }
      truth["W_star"].push_back(W);
    }
    truth["cluster_of_train"] = data.train.cluster_of;
    truth["cluster_of_test"] = data.test.cluster_of;
    write_text(out_dir + "/truth.json", truth.dump(2) + "\n", force);
  } else {
    EventLogBundle bundle = gen_event_log(spec, students, days);
    write_text(out_dir + "/events.csv", bundle.events_csv, force);
    write_text(out_dir + "/roster.csv", bundle.roster_csv, force);
    write_text(out_dir + "/calendar.csv", bundle.calendar_csv, force);
    write_text(out_dir + "/ranks.csv", bundle.ranks_csv, force);
    json truth = json::array();
    for (const BehaviorIntent& bi : bundle.intents)
      truth.push_back({{"student_id", bi.student_id},
                       {"major_id", bi.major_id},
                       {"lib_rate", bi.lib_rate},
                       {"borrow_rate", bi.borrow_rate},
                       {"water_rate", bi.water_rate},
                       {"print_rate", bi.print_rate},
                       {"breakfast_prob", bi.breakfast_prob},
                       {"shower_kappa", bi.shower_kappa},
                       {"shop_kappa", bi.shop_kappa},
                       {"wake_hour", bi.wake_hour},
                       {"bed_hour", bi.bed_hour}});
    write_text(out_dir + "/truth.json", truth.dump(2) + "\n", force);
  }
  write_run_json(out_dir, "synth",
                 json{{"seed", seed},
                      {"students", students},
                      {"days", days},
                      {"planted", planted}},
                 {}, true);
  return kExitOk;
}

int cmd_ingest(const std::string& events, const std::string& roster,
               const std::string& calendar, const std::string& out_dir,
               bool force) {
  IngestResult res = load_log(events, roster, calendar);
  json rep{{"accepted", res.report.accepted},
           {"rejected", res.report.rejected},
           {"out_of_semester", res.report.out_of_semester},
           {"exact_duplicates", res.report.exact_duplicates},
           {"stored_events", res.log.total_events()},
           {"students", res.log.registry().students().size()},
           {"reject_reasons", res.report.reject_reasons}};
  write_text(out_dir + "/ingest_report.json", rep.dump(2) + "\n", force);
  write_run_json(out_dir, "ingest", json::object(), {events, roster, calendar},
                 true);
  std::cout << rep.dump(2) << '\n';
  return kExitOk;
}

int cmd_featurize(const std::string& events, const std::string& roster,
                  const std::string& calendar, const std::string& ranks_path,
                  const std::string& out_dir, double bandwidth, bool force) {
  IngestResult res = load_log(events, roster, calendar);
  RankTable ranks;
  try {
    ranks = load_ranks(ranks_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  auto mats = assemble_features(res.log, ranks, bandwidth);
  if (mats.empty()) throw DataError("no (semester, major) group had ranked students");
  require_new(out_dir + "/features.csv", force);
  fs::create_directories(out_dir);
  write_features_csv(out_dir + "/features.csv", mats);
  write_run_json(out_dir, "featurize", json{{"entropy_bandwidth", bandwidth}},
                 {events, roster, calendar, ranks_path}, true);
  return kExitOk;
}

int cmd_similarity(const std::string& events, const std::string& roster,
                   const std::string& calendar, const std::string& out_dir,
                   int window, int reps, std::uint64_t seed, bool force) {
  IngestResult res = load_log(events, roster, calendar);
  std::map<LocationType, NullModelReport> reports;
  SimilarityGraph g = build_similarity(
      res.log,
      {LocationType::cafeteria, LocationType::supermarket,
       LocationType::library_gate},
      reps, seed, window, &reports);
  require_new(out_dir + "/similarity.csv", force);
  fs::create_directories(out_dir);
  write_similarity_csv(out_dir + "/similarity.csv", g);
  json thresholds = json::object();
  for (const auto& [type, rep] : reports)
    thresholds[location_type_name(type)] = {
        {"threshold", std::isfinite(rep.threshold)
                          ? json(rep.threshold)
                          : json("inf")},
        {"real_curve", rep.real_curve},
        {"null_mean_curve", rep.null_mean_curve},
        {"null_std_curve", rep.null_std_curve}};
  write_text(out_dir + "/thresholds.json", thresholds.dump(2) + "\n", force);
  write_run_json(out_dir, "similarity",
                 json{{"window_seconds", window},
                      {"repetitions", reps},
                      {"seed", seed}},
                 {events, roster, calendar}, true);
  return kExitOk;
}

RankingDataset dataset_from_files(const std::string& features_path,
                                  const std::string& similarity_path,
                                  const std::string& roster_path) {
  try {
    auto feats = read_features_csv(features_path);
    SimilarityGraph g;
    if (!similarity_path.empty()) {
      g = read_similarity_csv(similarity_path);
      std::map<std::string, std::string> majors;
      if (!roster_path.empty()) {
        StudentRegistry reg = load_roster(roster_path);
        for (const auto& [sid, info] : reg.students())
          majors[sid] = info.major_id;
      } else {
        // Majors are recoverable from the feature rows themselves.
        for (const auto& fm : feats)
          for (const auto& sid : fm.student_ids) majors[sid] = fm.major_id;
      }
      attach_groups(g, majors);
    }
    return build_dataset(feats, g);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

int cmd_train(const std::string& features_path, const std::string& similarity_path,
              const std::string& roster_path, const std::string& out_path,
              const TrainConfig& cfg, const std::string& variant_name_str,
              int threads, bool force) {
  Variant variant;
  try {
    variant = parse_variant(variant_name_str);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--variant", "unknown variant " + variant_name_str);
  }
  RankingDataset ds = dataset_from_files(features_path, similarity_path,
                                         roster_path);
  if (ds.total_pairs() == 0) throw DataError("dataset has no ordered pairs");
  TrainResult result = train_variant(ds, cfg, variant, threads);
  require_new(out_path, force);
  fs::create_directories(parent_dir(out_path));
  save_model(out_path, result.params, cfg, variant, result.trace,
             ds.semester_ids);
  std::vector<std::string> inputs{features_path};
  if (!similarity_path.empty()) inputs.push_back(similarity_path);
  if (!roster_path.empty()) inputs.push_back(roster_path);
  json run_cfg = config_to_json(cfg);
  run_cfg["variant"] = variant_name(variant);
  run_cfg["threads"] = threads;
  write_run_json(parent_dir(out_path), "train", run_cfg, inputs, true);
  std::cout << "final objective " << fmt(result.trace.back()) << " after "
            << result.trace.size() - 1 << " iterations"
            << (result.converged ? "" : " (no convergence)") << '\n';
  if (result.diverged) {
    std::cerr << "training diverged\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& features_path,
                const std::string& similarity_path, const std::string& roster_path,
                const std::string& out_path, bool force) {
  LoadedModel model;
  try {
    model = load_model(model_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  RankingDataset ds = dataset_from_files(features_path, similarity_path,
                                         roster_path);
  auto preds = predict(ds, model.params, model.cfg);
  require_new(out_path, force);
  fs::create_directories(parent_dir(out_path));
  write_predictions_csv(out_path, preds);
  std::vector<std::string> inputs{model_path, features_path};
  if (!similarity_path.empty()) inputs.push_back(similarity_path);
  if (!roster_path.empty()) inputs.push_back(roster_path);
  write_run_json(parent_dir(out_path), "predict", json::object(), inputs, true);
  return kExitOk;
}

// Reads back a predictions CSV into TaskPrediction rows.
std::vector<TaskPrediction> read_predictions_csv(const std::string& path) {
  CsvReader csv(path);
  const int c_id = csv.col("student_id");
  const int c_sem = csv.col("semester_id");
  const int c_major = csv.col("major_id");
  const int c_score = csv.col("score");
  const int c_rank = csv.col("predicted_rank");
  std::map<std::pair<int, std::string>,
           std::vector<std::tuple<std::string, double, double>>>
      groups;
  std::vector<std::string> f;
  while (csv.next(f)) {
    std::pair<int, std::string> key{std::atoi(f[c_sem].c_str()), f[c_major]};
    groups[key].emplace_back(f[c_id], std::atof(f[c_score].c_str()),
                             std::atof(f[c_rank].c_str()));
  }
  std::vector<TaskPrediction> out;
  for (auto& [key, rows] : groups) {
    TaskPrediction tp;
    tp.semester_id = key.first;
    tp.major_id = key.second;
    tp.scores.resize(static_cast<Eigen::Index>(rows.size()));
    tp.predicted_rank.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      tp.student_ids.push_back(std::get<0>(rows[i]));
      tp.scores[static_cast<Eigen::Index>(i)] = std::get<1>(rows[i]);
      tp.predicted_rank[static_cast<Eigen::Index>(i)] = std::get<2>(rows[i]);
    }
    out.push_back(std::move(tp));
  }
  return out;
}

int cmd_evaluate(const std::string& predictions_path, const std::string& ranks_path,
                 const std::string& out_dir, bool force) {
  std::vector<TaskPrediction> preds;
  RankTable truth;
  std::vector<SemesterScore> scores;
  try {
    preds = read_predictions_csv(predictions_path);
    truth = load_ranks(ranks_path);
    scores = semester_report(preds, truth);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  json rep;
  rep["mean_spearman"] = mean_spearman(scores);
  for (const SemesterScore& s : scores)
    rep["semesters"].push_back({{"semester_id", s.semester_id},
                                {"mean_spearman", s.mean_spearman},
                                {"per_major", s.per_major}});
  write_text(out_dir + "/evaluation.json", rep.dump(2) + "\n", force);
  write_run_json(out_dir, "evaluate", json::object(),
                 {predictions_path, ranks_path}, true);
  std::cout << rep.dump(2) << '\n';
  return kExitOk;
}

int cmd_report(const std::string& features_path, const std::string& similarity_path,
               const std::string& roster_path, const std::string& out_dir,
               std::uint64_t seed, bool force) {
  std::vector<FeatureMatrix> feats;
  try {
    feats = read_features_csv(features_path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  std::ostringstream txt;
  txt << "feature,correlation,kind\n";
  for (const FeatureCorrelation& fc : feature_correlations(feats)) {
    txt << fc.feature << ','
        << (fc.value ? fmt(*fc.value) : std::string("undefined")) << ','
        << (fc.is_cramers_v ? "cramers_v" : "spearman") << '\n';
  }
  write_text(out_dir + "/feature_correlations.csv", txt.str(), force);
  std::vector<std::string> inputs{features_path};

  if (!similarity_path.empty()) {
    if (roster_path.empty())
      throw CLI::ValidationError("--roster", "required with --similarity");
    SimilarityGraph g;
    StudentRegistry reg;
    try {
      g = read_similarity_csv(similarity_path);
      reg = load_roster(roster_path);
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    std::map<std::string, std::string> majors;
    for (const auto& [sid, info] : reg.students()) majors[sid] = info.major_id;
    attach_groups(g, majors);
    // Pool the latest semester's ranks for the descriptive analyses.
    std::map<std::string, double> ranks;
    int last_sem = 0;
    for (const auto& fm : feats) last_sem = std::max(last_sem, fm.semester_id);
    for (const auto& fm : feats)
      if (fm.semester_id == last_sem)
        for (std::size_t i = 0; i < fm.student_ids.size(); ++i)
          ranks[fm.student_ids[i]] = fm.y[static_cast<Eigen::Index>(i)];

    json block;
    try {
      TTestResult t = similarity_ttest(g, reg, ranks, 20, seed);
      block = {{"t", t.t},        {"dof", t.dof},
               {"p_value", t.p_value}, {"reject", t.reject},
               {"n_students", t.n_students}};
    } catch (const std::exception& e) {
      block = {{"error", e.what()}};
    }
    TieStrengthCurve curve = tie_strength_curve(g, ranks, 20);
    json levels = json::array();
    for (const TieStrengthLevel& l : curve.levels)
      levels.push_back({{"level", l.level},
                        {"mean_gap", l.mean_gap},
                        {"pair_count", l.pair_count}});
    json sim{{"ttest", block},
             {"tie_strength_levels", levels},
             {"tie_strength_reduced", curve.reduced}};
    write_text(out_dir + "/similarity_report.json", sim.dump(2) + "\n", force);
    inputs.push_back(similarity_path);
    inputs.push_back(roster_path);
  }
  write_run_json(out_dir, "report", json{{"seed", seed}}, inputs, true);
  return kExitOk;
}

int cmd_bench(const std::string& out_dir, std::uint64_t seed, int threads,
              int max_outer, bool force) {
  SynthSpec spec = ablation_spec(seed);
  PlantedData data = gen_planted(spec);
  RankingDataset tr = build_dataset(data.train.features, data.train.graph);
  RankingDataset te = build_dataset(data.test.features, data.test.graph);
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.max_outer = max_outer;
  std::vector<Variant> variants = {Variant::BLTR, Variant::BLTR_SS,
                                   Variant::BLTR_MS, Variant::BLTR_SEQ,
                                   Variant::MTLTR_APP};
  auto rows = variant_comparison(tr, te, data.test.ranks, cfg, variants,
                                 threads);
  for (const VariantRow& row : rows)
    if (row.failed && row.error.find("diverged") != std::string::npos)
      return kExitDiverged;

  std::ostringstream rep;
  rep << format_variant_table(rows);
  rep << "\nmean spearman by variant\n";
  for (const VariantRow& row : rows)
    rep << variant_name(row.variant) << ' '
        << (row.failed ? "failed: " + row.error
                       : fmt(mean_spearman(row.semesters)))
        << '\n';
  write_text(out_dir + "/report.txt", rep.str(), force);

  json jrep;
  for (const VariantRow& row : rows) {
    json r{{"variant", variant_name(row.variant)}, {"failed", row.failed}};
    if (row.failed)
      r["error"] = row.error;
    else {
      r["mean_spearman"] = fmt(mean_spearman(row.semesters));
      for (const SemesterScore& s : row.semesters)
        r["semesters"].push_back({{"semester_id", s.semester_id},
                                  {"mean_spearman", fmt(s.mean_spearman)}});
    }
    jrep["variants"].push_back(r);
  }
  write_text(out_dir + "/report.json", jrep.dump(2) + "\n", force);
  write_run_json(out_dir, "bench",
                 json{{"seed", seed},
                      {"max_outer", max_outer},
                      {"threads", threads}},
                 {}, true);
  std::cout << rep.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Campus smart-card ranking pipeline"};
  app.require_subcommand(1);

  unsigned hw = std::thread::hardware_concurrency();
  int threads = hw == 0 ? 1 : static_cast<int>(hw);
  bool force = false;
  app.add_flag("--force", force, "overwrite existing outputs");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  std::string synth_out = "synth_out";
  std::uint64_t synth_seed = 7;
  int synth_students = 200, synth_days = 120;
  bool synth_planted = false;
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--seed", synth_seed, "RNG seed");
  synth->add_option("--students", synth_students, "students (event-log mode)");
  synth->add_option("--days", synth_days, "semester length in days");
  synth->add_flag("--planted", synth_planted,
                  "emit planted feature matrices instead of an event log");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate and index an event log");
  std::string in_events, in_roster, in_calendar, ingest_out = "ingest_out";
  ingest->add_option("--events", in_events)->required();
  ingest->add_option("--roster", in_roster)->required();
  ingest->add_option("--calendar", in_calendar)->required();
  ingest->add_option("--out", ingest_out, "output directory");

  // featurize
  auto* feat = app.add_subcommand("featurize", "extract per-student features");
  std::string ft_events, ft_roster, ft_calendar, ft_ranks, ft_out = "features_out";
  double ft_bandwidth = 1.0;
  feat->add_option("--events", ft_events)->required();
  feat->add_option("--roster", ft_roster)->required();
  feat->add_option("--calendar", ft_calendar)->required();
  feat->add_option("--ranks", ft_ranks)->required();
  feat->add_option("--out", ft_out, "output directory");
  feat->add_option("--entropy-bandwidth", ft_bandwidth,
                   "hour histogram smoothing bandwidth");

  // similarity
  auto* sim = app.add_subcommand("similarity",
                                 "build the co-occurrence similarity graph");
  std::string sm_events, sm_roster, sm_calendar, sm_out = "similarity_out";
  int sm_window = 60, sm_reps = 20;
  std::uint64_t sm_seed = 1;
  sim->add_option("--events", sm_events)->required();
  sim->add_option("--roster", sm_roster)->required();
  sim->add_option("--calendar", sm_calendar)->required();
  sim->add_option("--out", sm_out, "output directory");
  sim->add_option("--window", sm_window, "co-occurrence window (seconds)");
  sim->add_option("--repetitions", sm_reps, "null-model repetitions");
  sim->add_option("--seed", sm_seed, "null-model RNG seed");

  // train
  auto* tr = app.add_subcommand("train", "train a ranking model");
  std::string tr_features, tr_similarity, tr_roster, tr_config;
  std::string tr_out = "model.json", tr_variant = "MTLTR-APP";
  TrainConfig tr_cfg;
  tr->add_option("--features", tr_features)->required();
  tr->add_option("--similarity", tr_similarity, "tie-strength CSV");
  tr->add_option("--roster", tr_roster, "roster CSV (majors for the graph)");
  tr->add_option("--out", tr_out, "model checkpoint path");
  tr->add_option("--variant", tr_variant,
                 "MTLTR-APP | BLTR | BLTR+SS | BLTR+MS | BLTR+SEQ");
  tr->add_option("--threads", threads, "worker thread cap");
  add_train_flags(tr, &tr_cfg, &tr_config);

  // predict
  auto* pr = app.add_subcommand("predict", "score students with a trained model");
  std::string pr_model, pr_features, pr_similarity, pr_roster,
      pr_out = "predictions.csv";
  pr->add_option("--model", pr_model)->required();
  pr->add_option("--features", pr_features)->required();
  pr->add_option("--similarity", pr_similarity, "tie-strength CSV");
  pr->add_option("--roster", pr_roster, "roster CSV");
  pr->add_option("--out", pr_out, "predictions CSV path");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "score predictions against truth");
  std::string ev_preds, ev_ranks, ev_out = "evaluation_out";
  ev->add_option("--predictions", ev_preds)->required();
  ev->add_option("--ranks", ev_ranks)->required();
  ev->add_option("--out", ev_out, "output directory");

  // report
  auto* rp = app.add_subcommand("report", "correlation and similarity analyses");
  std::string rp_features, rp_similarity, rp_roster, rp_out = "report_out";
  std::uint64_t rp_seed = 1;
  rp->add_option("--features", rp_features)->required();
  rp->add_option("--similarity", rp_similarity, "tie-strength CSV");
  rp->add_option("--roster", rp_roster, "roster CSV");
  rp->add_option("--out", rp_out, "output directory");
  rp->add_option("--seed", rp_seed, "t-test bootstrap seed");

  // bench
  auto* be = app.add_subcommand("bench", "end-to-end synthetic benchmark");
  std::string be_out = "bench_out";
  std::uint64_t be_seed = 7;
  int be_iters = 60;
  be->add_option("--out", be_out, "output directory");
  be->add_option("--seed", be_seed, "benchmark seed");
  be->add_option("--threads", threads, "worker thread cap");
  be->add_option("--iters", be_iters, "outer iterations per variant");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth)
      return cmd_synth(synth_out, synth_seed, synth_students, synth_days,
                       synth_planted, force);
    if (*ingest)
      return cmd_ingest(in_events, in_roster, in_calendar, ingest_out, force);
    if (*feat)
      return cmd_featurize(ft_events, ft_roster, ft_calendar, ft_ranks, ft_out,
                           ft_bandwidth, force);
    if (*sim)
      return cmd_similarity(sm_events, sm_roster, sm_calendar, sm_out,
                            sm_window, sm_reps, sm_seed, force);
    if (*tr) {
      TrainConfig cfg = resolve_config(tr, tr_cfg, tr_config);
      return cmd_train(tr_features, tr_similarity, tr_roster, tr_out, cfg,
                       tr_variant, threads, force);
    }
    if (*pr)
      return cmd_predict(pr_model, pr_features, pr_similarity, pr_roster,
                         pr_out, force);
    if (*ev) return cmd_evaluate(ev_preds, ev_ranks, ev_out, force);
    if (*rp)
      return cmd_report(rp_features, rp_similarity, rp_roster, rp_out, rp_seed,
                        force);
    if (*be) return cmd_bench(be_out, be_seed, threads, be_iters, force);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
