#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mtltr/dataset.hpp"

namespace mtltr {

struct TrainConfig {
  double lambda_s = 1.0;
  double lambda_n = 0.01;
  double lambda_1 = 0.5;
  double lambda_2 = 0.1;
  double lambda_e = 0.1;  // ridge used by the flat variants
  double xi = 0.2;
  int k = 5;
  double eta_v = 0.1;  // initial step sizes; line search adapts from here
  double eta_u = 0.1;
  int max_outer = 500;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
  int pair_batch = 0;  // 0 = full batch; >0 samples pairs per gradient step
};

enum class Variant { MTLTR_APP, BLTR, BLTR_SS, BLTR_MS, BLTR_SEQ };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelParams {
  bool factorized = true;
  // Factorized form: per semester U (M x k, non-negative) and V (k x p).
  std::vector<Eigen::MatrixXd> U;
  std::vector<Eigen::MatrixXd> V;
  // Flat form: per semester W (M x p). BLTR stores one shared W per semester
  // slot (identical matrices).
  std::vector<Eigen::MatrixXd> W;

  Eigen::MatrixXd weights(int s) const {
    return factorized ? Eigen::MatrixXd(U[s] * V[s]) : W[s];
  }
  Eigen::RowVectorXd weight_row(int s, int m) const {
    return factorized ? Eigen::RowVectorXd(U[s].row(m) * V[s]) : W[s].row(m);
  }
};

// f(x) = u^{s,m} V^s x; higher score = predicted better performer.
double score(const Eigen::VectorXd& x, int s, int m, const ModelParams& params);

// -sum log sigmoid(f_i - f_j) over outperforming pairs, all tasks.
double pair_loss(const RankingDataset& ds, const ModelParams& params);

// 1/2 sum_{s<S} ||W^s - W^{s+1}||_F^2
double omega_seq(const ModelParams& params);
// sum_s lambda_1 ||U^s||_1 + lambda_2 ||V^s||_2^2
double omega_ms(const ModelParams& params, const TrainConfig& cfg);
// 1/2 sum_{s,m} sum_i sum_{j in F_i} tau_ij (f_i - f_j)^2
double omega_sn(const RankingDataset& ds, const ModelParams& params);

// Full MTLTR-APP objective:
// pair_loss + lambda_s * omega_seq + omega_ms + lambda_n * omega_sn.
double objective(const RankingDataset& ds, const ModelParams& params,
                 const TrainConfig& cfg);
// Objective of the requested ablation variant.
double variant_objective(const RankingDataset& ds, const ModelParams& params,
                         const TrainConfig& cfg, Variant v);

// Analytic gradient of the full objective w.r.t. V^s (U fixed).
Eigen::MatrixXd grad_V(const RankingDataset& ds, const ModelParams& params,
                       const TrainConfig& cfg, int s);
// Analytic gradient of the smooth part (everything except lambda_1 L1)
// w.r.t. u^{s,m} (V fixed).
Eigen::VectorXd grad_u(const RankingDataset& ds, const ModelParams& params,
                       const TrainConfig& cfg, int s, int m);

// Elementwise soft threshold; throws on negative threshold.
Eigen::VectorXd prox_l1(const Eigen::VectorXd& x, double lambda_t);
Eigen::VectorXd project_nonneg(Eigen::VectorXd x);

struct TrainResult {
  ModelParams params;
  std::vector<double> trace;  // objective per outer iteration (index 0 = init)
  bool converged = false;
  bool diverged = false;
};

// Block-coordinate proximal optimizer (full model). Deterministic under a
// fixed seed regardless of thread count.
TrainResult train(const RankingDataset& ds, const TrainConfig& cfg,
                  int threads = 1);
TrainResult train_variant(const RankingDataset& ds, const TrainConfig& cfg,
                          Variant v, int threads = 1);

struct TaskPrediction {
  int semester_id = 0;
  std::string major_id;
  std::vector<std::string> student_ids;
  Eigen::VectorXd scores;          // blended scores
  Eigen::VectorXd predicted_rank;  // normalized to [0,1], 0 = best
};

// Blended inference: y-hat = (1-xi) f(x_i) + xi * tau-weighted mean of
// similar students' scores; rank by blended score descending, stable on
// student order.
std::vector<TaskPrediction> predict(const RankingDataset& ds,
                                    const ModelParams& params,
                                    const TrainConfig& cfg);

// Checkpoint JSON round-trip.
void save_model(const std::string& path, const ModelParams& params,
                const TrainConfig& cfg, Variant v,
                const std::vector<double>& trace,
                const std::vector<int>& semester_ids);
struct LoadedModel {
  ModelParams params;
  TrainConfig cfg;
  Variant variant = Variant::MTLTR_APP;
  std::vector<double> trace;
  std::vector<int> semester_ids;
};
LoadedModel load_model(const std::string& path);

void write_predictions_csv(const std::string& path,
                           const std::vector<TaskPrediction>& preds);

}  // namespace mtltr
