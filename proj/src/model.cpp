#include "mtltr/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace mtltr {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// log sigmoid with the large-|d| branch.
double log_sigmoid(double d) {
  if (d >= 0.0) return -std::log1p(std::exp(-d));
  return d - std::log1p(std::exp(d));
}

double sigmoid(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  double e = std::exp(d);
  return e / (1.0 + e);
}

VectorXd task_scores(const TaskData& t, const RowVectorXd& w) {
  return t.X * w.transpose();
}

double task_pair_loss(const TaskData& t, const VectorXd& f) {
  double loss = 0.0;
  for (const auto& [i, j] : t.pairs) loss -= log_sigmoid(f[i] - f[j]);
  return loss;
}

// sum over undirected edges of tau (f_i - f_j)^2; equals the directed
// half-sum over i, j in F_i since tau is symmetric.
double task_sn(const TaskData& t, const VectorXd& f) {
  double acc = 0.0;
  for (const auto& e : t.edges) {
    double d = f[e.i] - f[e.j];
    acc += e.tau * d * d;
  }
  return acc;
}

// d/df of [pair loss + lambda_n * sn penalty] for one task.
VectorXd task_score_grad(const TaskData& t, const VectorXd& f, double lambda_n,
                         const std::vector<std::pair<int, int>>* pair_subset,
                         double pair_scale) {
  VectorXd a = VectorXd::Zero(f.size());
  const auto& pairs = pair_subset ? *pair_subset : t.pairs;
  for (const auto& [i, j] : pairs) {
    double g = (sigmoid(f[i] - f[j]) - 1.0) * pair_scale;
    a[i] += g;
    a[j] -= g;
  }
  for (const auto& e : t.edges) {
    double c = 2.0 * lambda_n * e.tau * (f[e.i] - f[e.j]);
    a[e.i] += c;
    a[e.j] -= c;
  }
  return a;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

// Which regularizers a variant uses.
struct VariantShape {
  bool factorized;
  bool shared_w;  // one W for all semesters
  bool use_seq;
  bool use_sn;
  bool use_ridge_e;
};

VariantShape shape_of(Variant v) {
  switch (v) {
    case Variant::MTLTR_APP:
      return {true, false, true, true, false};
    case Variant::BLTR:
      return {false, true, false, false, true};
    case Variant::BLTR_SS:
      return {false, false, false, true, true};
    case Variant::BLTR_MS:
      return {true, false, false, true, false};
    case Variant::BLTR_SEQ:
      return {false, false, true, false, true};
  }
  throw std::logic_error("unreachable");
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::MTLTR_APP: return "MTLTR-APP";
    case Variant::BLTR: return "BLTR";
    case Variant::BLTR_SS: return "BLTR+SS";
    case Variant::BLTR_MS: return "BLTR+MS";
    case Variant::BLTR_SEQ: return "BLTR+SEQ";
  }
  throw std::logic_error("unreachable");
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::MTLTR_APP, Variant::BLTR, Variant::BLTR_SS,
                    Variant::BLTR_MS, Variant::BLTR_SEQ})
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant: " + name);
}

double score(const Eigen::VectorXd& x, int s, int m,
             const ModelParams& params) {
  RowVectorXd w = params.weight_row(s, m);
  if (w.size() != x.size())
    throw std::invalid_argument("score: dimension mismatch");
  return w * x;
}

double pair_loss(const RankingDataset& ds, const ModelParams& params) {
  double loss = 0.0;
  for (int s = 0; s < ds.S(); ++s)
    for (int m = 0; m < ds.M(); ++m) {
      const TaskData& t = ds.task(s, m);
      if (t.n() == 0) continue;
      loss += task_pair_loss(t, task_scores(t, params.weight_row(s, m)));
    }
  return loss;
}

double omega_seq(const ModelParams& params) {
  int S = static_cast<int>(params.factorized ? params.U.size()
                                             : params.W.size());
  double acc = 0.0;
  for (int s = 0; s + 1 < S; ++s)
    acc += (params.weights(s) - params.weights(s + 1)).squaredNorm();
  return 0.5 * acc;
}

double omega_ms(const ModelParams& params, const TrainConfig& cfg) {
  if (!params.factorized) return 0.0;
  double acc = 0.0;
  for (std::size_t s = 0; s < params.U.size(); ++s)
    acc += cfg.lambda_1 * params.U[s].cwiseAbs().sum() +
           cfg.lambda_2 * params.V[s].squaredNorm();
  return acc;
}

double omega_sn(const RankingDataset& ds, const ModelParams& params) {
  double acc = 0.0;
  for (int s = 0; s < ds.S(); ++s)
    for (int m = 0; m < ds.M(); ++m) {
      const TaskData& t = ds.task(s, m);
      if (t.n() == 0 || t.edges.empty()) continue;
      acc += task_sn(t, task_scores(t, params.weight_row(s, m)));
    }
  return acc;
}

double objective(const RankingDataset& ds, const ModelParams& params,
                 const TrainConfig& cfg) {
  return pair_loss(ds, params) + cfg.lambda_s * omega_seq(params) +
         omega_ms(params, cfg) + cfg.lambda_n * omega_sn(ds, params);
}

double variant_objective(const RankingDataset& ds, const ModelParams& params,
                         const TrainConfig& cfg, Variant v) {
  if (v == Variant::MTLTR_APP) return objective(ds, params, cfg);
  VariantShape sh = shape_of(v);
  double obj = pair_loss(ds, params);
  if (sh.use_seq) obj += cfg.lambda_s * omega_seq(params);
  if (sh.use_sn) obj += cfg.lambda_n * omega_sn(ds, params);
  if (sh.factorized) obj += omega_ms(params, cfg);
  if (sh.use_ridge_e)
    for (const MatrixXd& W : params.W) obj += cfg.lambda_e * W.squaredNorm();
  return obj;
}

Eigen::MatrixXd grad_V(const RankingDataset& ds, const ModelParams& params,
                       const TrainConfig& cfg, int s) {
  const MatrixXd& U = params.U[s];
  const MatrixXd& V = params.V[s];
  MatrixXd G = 2.0 * cfg.lambda_2 * V;
  for (int m = 0; m < ds.M(); ++m) {
    const TaskData& t = ds.task(s, m);
    if (t.n() == 0) continue;
    RowVectorXd w = U.row(m) * V;
    VectorXd f = task_scores(t, w);
    VectorXd a = task_score_grad(t, f, cfg.lambda_n, nullptr, 1.0);
    G.noalias() += U.row(m).transpose() * (t.X.transpose() * a).transpose();
  }
  MatrixXd Ws = U * V;
  if (s + 1 < ds.S())
    G.noalias() +=
        cfg.lambda_s * U.transpose() * (Ws - params.U[s + 1] * params.V[s + 1]);
  if (s > 0)
    G.noalias() +=
        cfg.lambda_s * U.transpose() * (Ws - params.U[s - 1] * params.V[s - 1]);
  return G;
}

Eigen::VectorXd grad_u(const RankingDataset& ds, const ModelParams& params,
                       const TrainConfig& cfg, int s, int m) {
  const MatrixXd& V = params.V[s];
  RowVectorXd u = params.U[s].row(m);
  RowVectorXd w = u * V;
  VectorXd g = VectorXd::Zero(V.rows());
  const TaskData& t = ds.task(s, m);
  if (t.n() > 0) {
    VectorXd f = task_scores(t, w);
    VectorXd a = task_score_grad(t, f, cfg.lambda_n, nullptr, 1.0);
    g.noalias() += V * (t.X.transpose() * a);
  }
  if (s + 1 < ds.S()) {
    RowVectorXd diff = w - params.U[s + 1].row(m) * params.V[s + 1];
    g.noalias() += cfg.lambda_s * (V * diff.transpose());
  }
  if (s > 0) {
    RowVectorXd diff = w - params.U[s - 1].row(m) * params.V[s - 1];
    g.noalias() += cfg.lambda_s * (V * diff.transpose());
  }
  return g;
}

Eigen::VectorXd prox_l1(const Eigen::VectorXd& x, double lambda_t) {
  if (lambda_t < 0.0)
    throw std::invalid_argument("prox_l1: negative threshold");
  VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > lambda_t)
      z[i] = x[i] - lambda_t;
    else if (x[i] < -lambda_t)
      z[i] = x[i] + lambda_t;
    else
      z[i] = 0.0;
  }
  return z;
}

Eigen::VectorXd project_nonneg(Eigen::VectorXd x) {
  return x.cwiseMax(0.0);
}

namespace {

// ---- trainer ----------------------------------------------------------

class Trainer {
 public:
  Trainer(const RankingDataset& ds, const TrainConfig& cfg, Variant variant,
          int threads)
      : ds_(ds), cfg_(cfg), sh_(shape_of(variant)), threads_(threads),
        rng_(cfg.seed) {}

  TrainResult run() {
    init_params();
    TrainResult res;
    res.params = params_;
    double obj = full_objective();
    res.trace.push_back(obj);
    if (!std::isfinite(obj)) {
      res.diverged = true;
      return res;
    }
    step_v_.assign(static_cast<std::size_t>(ds_.S()), cfg_.eta_v);
    step_u_.assign(static_cast<std::size_t>(ds_.S()),
                   std::vector<double>(static_cast<std::size_t>(ds_.M()),
                                       cfg_.eta_u));
    step_w_.assign(static_cast<std::size_t>(ds_.S()), cfg_.eta_v);

    for (int it = 0; it < cfg_.max_outer; ++it) {
      sample_batches();
      if (sh_.factorized) {
        for (int s = 0; s < ds_.S(); ++s) {
          v_step(s);
          u_steps(s);
        }
      } else if (sh_.shared_w) {
        shared_w_step();
      } else {
        for (int s = 0; s < ds_.S(); ++s) w_step(s);
      }
      double next = full_objective();
      res.trace.push_back(next);
      if (!std::isfinite(next)) {
        res.diverged = true;
        res.params = params_;
        return res;
      }
      if (std::abs(obj - next) <= cfg_.tolerance * std::max(1.0, std::abs(obj))) {
        res.converged = true;
        obj = next;
        break;
      }
      obj = next;
    }
    res.params = params_;
    return res;
  }

 private:
  const RankingDataset& ds_;
  const TrainConfig& cfg_;
  VariantShape sh_;
  int threads_;
  std::mt19937_64 rng_;
  ModelParams params_;
  std::vector<double> step_v_, step_w_;
  std::vector<std::vector<double>> step_u_;
  // Mini-batch pair subsets per task; empty = full batch.
  std::vector<std::vector<std::vector<std::pair<int, int>>>> batches_;

  void init_params() {
    params_.factorized = sh_.factorized;
    const int S = ds_.S(), M = ds_.M(), p = ds_.p, k = cfg_.k;
    std::uniform_real_distribution<double> unif(0.0, 0.1);
    std::normal_distribution<double> gauss(0.0, 0.01);
    if (sh_.factorized) {
      if (k > std::min(M, p))
        throw std::invalid_argument("k exceeds min(M, p)");
      for (int s = 0; s < S; ++s) {
        MatrixXd U(M, k), V(k, p);
        for (int i = 0; i < M; ++i)
          for (int j = 0; j < k; ++j) U(i, j) = unif(rng_);
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < p; ++j) V(i, j) = gauss(rng_);
        params_.U.push_back(std::move(U));
        params_.V.push_back(std::move(V));
      }
    } else {
      MatrixXd W0(M, p);
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < p; ++j) W0(i, j) = gauss(rng_);
      for (int s = 0; s < S; ++s) {
        params_.W.push_back(W0);
        if (!sh_.shared_w) {
          MatrixXd W(M, p);
          for (int i = 0; i < M; ++i)
            for (int j = 0; j < p; ++j) W(i, j) = gauss(rng_);
          params_.W.back() = W;
        }
      }
    }
  }

  void sample_batches() {
    batches_.clear();
    if (cfg_.pair_batch <= 0) return;
    batches_.assign(static_cast<std::size_t>(ds_.S()), {});
    for (int s = 0; s < ds_.S(); ++s) {
      batches_[s].resize(static_cast<std::size_t>(ds_.M()));
      for (int m = 0; m < ds_.M(); ++m) {
        const auto& pairs = ds_.task(s, m).pairs;
        if (static_cast<int>(pairs.size()) <= cfg_.pair_batch) continue;
        std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
        auto& out = batches_[s][m];
        out.reserve(static_cast<std::size_t>(cfg_.pair_batch));
        for (int b = 0; b < cfg_.pair_batch; ++b)
          out.push_back(pairs[pick(rng_)]);
      }
    }
  }

  const std::vector<std::pair<int, int>>* batch_for(int s, int m,
                                                    double& scale) const {
    scale = 1.0;
    if (batches_.empty() || batches_[s][m].empty()) return nullptr;
    scale = static_cast<double>(ds_.task(s, m).pairs.size()) /
            static_cast<double>(batches_[s][m].size());
    return &batches_[s][m];
  }

  double lambda_sn() const { return sh_.use_sn ? cfg_.lambda_n : 0.0; }

  // Pair + similarity value of one task under weight row w.
  double task_value(int s, int m, const RowVectorXd& w) const {
    const TaskData& t = ds_.task(s, m);
    if (t.n() == 0) return 0.0;
    VectorXd f = task_scores(t, w);
    double v = task_pair_loss(t, f);
    if (sh_.use_sn) v += cfg_.lambda_n * task_sn(t, f);
    return v;
  }

  // ----- factorized path -----

  // Block-local smooth objective in V^s (L1 term is constant here).
  double local_v_objective(int s, const MatrixXd& V) const {
    std::vector<double> parts(static_cast<std::size_t>(ds_.M()), 0.0);
    parallel_for(ds_.M(), threads_, [&](int m) {
      parts[m] = task_value(s, m, RowVectorXd(params_.U[s].row(m) * V));
    });
    double obj = 0.0;
    for (double v : parts) obj += v;
    obj += cfg_.lambda_2 * V.squaredNorm();
    if (sh_.use_seq) {
      MatrixXd Ws = params_.U[s] * V;
      if (s + 1 < ds_.S())
        obj += 0.5 * cfg_.lambda_s * (Ws - params_.weights(s + 1)).squaredNorm();
      if (s > 0)
        obj += 0.5 * cfg_.lambda_s * (Ws - params_.weights(s - 1)).squaredNorm();
    }
    return obj;
  }

  MatrixXd local_v_gradient(int s) const {
    const MatrixXd& U = params_.U[s];
    const MatrixXd& V = params_.V[s];
    std::vector<MatrixXd> parts(static_cast<std::size_t>(ds_.M()));
    parallel_for(ds_.M(), threads_, [&](int m) {
      const TaskData& t = ds_.task(s, m);
      if (t.n() == 0) return;
      RowVectorXd w = U.row(m) * V;
      VectorXd f = task_scores(t, w);
      double scale;
      const auto* batch = batch_for(s, m, scale);
      VectorXd a = task_score_grad(t, f, lambda_sn(), batch, scale);
      parts[m] = U.row(m).transpose() * (t.X.transpose() * a).transpose();
    });
    MatrixXd G = 2.0 * cfg_.lambda_2 * V;
    for (const MatrixXd& P : parts)
      if (P.size() > 0) G += P;
    if (sh_.use_seq) {
      MatrixXd Ws = U * V;
      if (s + 1 < ds_.S())
        G.noalias() += cfg_.lambda_s * U.transpose() * (Ws - params_.weights(s + 1));
      if (s > 0)
        G.noalias() += cfg_.lambda_s * U.transpose() * (Ws - params_.weights(s - 1));
    }
    return G;
  }

  void v_step(int s) {
    MatrixXd G = local_v_gradient(s);
    if (cfg_.pair_batch > 0) {
      params_.V[s] -= cfg_.eta_v * G;
      return;
    }
    double base = local_v_objective(s, params_.V[s]);
    double g2 = G.squaredNorm();
    if (g2 == 0.0) return;
    double t = std::max(step_v_[s] * 2.0, 1e-12);
    const double c = 1e-4;
    while (t > 1e-18) {
      MatrixXd cand = params_.V[s] - t * G;
      if (local_v_objective(s, cand) <= base - c * t * g2) {
        params_.V[s] = std::move(cand);
        step_v_[s] = t;
        return;
      }
      t *= 0.5;
    }
  }

  // Smooth part of the u^{s,m} block objective.
  double local_u_objective(int s, int m, const RowVectorXd& u) const {
    RowVectorXd w = u * params_.V[s];
    double obj = task_value(s, m, w);
    if (sh_.use_seq) {
      if (s + 1 < ds_.S())
        obj += 0.5 * cfg_.lambda_s *
               (w - params_.weight_row(s + 1, m)).squaredNorm();
      if (s > 0)
        obj += 0.5 * cfg_.lambda_s *
               (w - params_.weight_row(s - 1, m)).squaredNorm();
    }
    return obj;
  }

  VectorXd local_u_gradient(int s, int m) const {
    const MatrixXd& V = params_.V[s];
    RowVectorXd w = params_.U[s].row(m) * V;
    VectorXd g = VectorXd::Zero(V.rows());
    const TaskData& t = ds_.task(s, m);
    if (t.n() > 0) {
      VectorXd f = task_scores(t, w);
      double scale;
      const auto* batch = batch_for(s, m, scale);
      VectorXd a = task_score_grad(t, f, lambda_sn(), batch, scale);
      g.noalias() += V * (t.X.transpose() * a);
    }
    if (sh_.use_seq) {
      if (s + 1 < ds_.S())
        g.noalias() += cfg_.lambda_s *
                       (V * (w - params_.weight_row(s + 1, m)).transpose());
      if (s > 0)
        g.noalias() += cfg_.lambda_s *
                       (V * (w - params_.weight_row(s - 1, m)).transpose());
    }
    return g;
  }

  // Proximal step on u^{s,m} with majorization backtracking; guarantees the
  // composite block objective does not increase.
  void u_steps(int s) {
    parallel_for(ds_.M(), threads_, [&](int m) {
      VectorXd g = local_u_gradient(s, m);
      VectorXd u = params_.U[s].row(m).transpose();
      if (cfg_.pair_batch > 0) {
        VectorXd cand = project_nonneg(
            prox_l1(u - cfg_.eta_u * g, cfg_.lambda_1 * cfg_.eta_u));
        params_.U[s].row(m) = cand.transpose();
        return;
      }
      double base = local_u_objective(s, m, u.transpose());
      double t = std::max(step_u_[s][m] * 2.0, 1e-12);
      while (t > 1e-18) {
        VectorXd cand =
            project_nonneg(prox_l1(u - t * g, cfg_.lambda_1 * t));
        VectorXd d = cand - u;
        if (d.squaredNorm() == 0.0) return;  // fixed point
        double quad = base + g.dot(d) + d.squaredNorm() / (2.0 * t);
        if (local_u_objective(s, m, cand.transpose()) <= quad) {
          params_.U[s].row(m) = cand.transpose();
          step_u_[s][m] = t;
          return;
        }
        t *= 0.5;
      }
    });
  }

  // ----- flat path -----

  double local_w_objective(int s, const MatrixXd& W) const {
    std::vector<double> parts(static_cast<std::size_t>(ds_.M()), 0.0);
    parallel_for(ds_.M(), threads_, [&](int m) {
      parts[m] = task_value(s, m, RowVectorXd(W.row(m)));
    });
    double obj = 0.0;
    for (double v : parts) obj += v;
    if (sh_.use_ridge_e) obj += cfg_.lambda_e * W.squaredNorm();
    if (sh_.use_seq) {
      if (s + 1 < ds_.S())
        obj += 0.5 * cfg_.lambda_s * (W - params_.W[s + 1]).squaredNorm();
      if (s > 0)
        obj += 0.5 * cfg_.lambda_s * (W - params_.W[s - 1]).squaredNorm();
    }
    return obj;
  }

  MatrixXd local_w_gradient(int s) const {
    const MatrixXd& W = params_.W[s];
    MatrixXd G = MatrixXd::Zero(W.rows(), W.cols());
    std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(ds_.M()));
    parallel_for(ds_.M(), threads_, [&](int m) {
      const TaskData& t = ds_.task(s, m);
      if (t.n() == 0) return;
      VectorXd f = task_scores(t, RowVectorXd(W.row(m)));
      double scale;
      const auto* batch = batch_for(s, m, scale);
      VectorXd a = task_score_grad(t, f, lambda_sn(), batch, scale);
      rows[m] = (t.X.transpose() * a).transpose();
    });
    for (int m = 0; m < ds_.M(); ++m)
      if (rows[m].size() > 0) G.row(m) += rows[m];
    if (sh_.use_ridge_e) G += 2.0 * cfg_.lambda_e * W;
    if (sh_.use_seq) {
      if (s + 1 < ds_.S()) G += cfg_.lambda_s * (W - params_.W[s + 1]);
      if (s > 0) G += cfg_.lambda_s * (W - params_.W[s - 1]);
    }
    return G;
  }

  void w_step(int s) {
    MatrixXd G = local_w_gradient(s);
    if (cfg_.pair_batch > 0) {
      params_.W[s] -= cfg_.eta_v * G;
      return;
    }
    double base = local_w_objective(s, params_.W[s]);
    double g2 = G.squaredNorm();
    if (g2 == 0.0) return;
    double t = std::max(step_w_[s] * 2.0, 1e-12);
    const double c = 1e-4;
    while (t > 1e-18) {
      MatrixXd cand = params_.W[s] - t * G;
      if (local_w_objective(s, cand) <= base - c * t * g2) {
        params_.W[s] = std::move(cand);
        step_w_[s] = t;
        return;
      }
      t *= 0.5;
    }
  }

  // BLTR: one shared W; gradient sums over semesters.
  void shared_w_step() {
    MatrixXd G = MatrixXd::Zero(ds_.M(), ds_.p);
    for (int s = 0; s < ds_.S(); ++s) {
      std::vector<Eigen::RowVectorXd> rows(static_cast<std::size_t>(ds_.M()));
      parallel_for(ds_.M(), threads_, [&](int m) {
        const TaskData& t = ds_.task(s, m);
        if (t.n() == 0) return;
        VectorXd f = task_scores(t, RowVectorXd(params_.W[0].row(m)));
        double scale;
        const auto* batch = batch_for(s, m, scale);
        VectorXd a = task_score_grad(t, f, lambda_sn(), batch, scale);
        rows[m] = (t.X.transpose() * a).transpose();
      });
      for (int m = 0; m < ds_.M(); ++m)
        if (rows[m].size() > 0) G.row(m) += rows[m];
    }
    G += 2.0 * cfg_.lambda_e * ds_.S() * params_.W[0];

    auto shared_objective = [&](const MatrixXd& W) {
      double obj = 0.0;
      for (int s = 0; s < ds_.S(); ++s)
        for (int m = 0; m < ds_.M(); ++m)
          obj += task_value(s, m, RowVectorXd(W.row(m)));
      obj += cfg_.lambda_e * ds_.S() * W.squaredNorm();
      return obj;
    };
    if (cfg_.pair_batch > 0) {
      MatrixXd W = params_.W[0] - cfg_.eta_v * G;
      for (auto& Ws : params_.W) Ws = W;
      return;
    }
    double base = shared_objective(params_.W[0]);
    double g2 = G.squaredNorm();
    if (g2 == 0.0) return;
    double t = std::max(step_w_[0] * 2.0, 1e-12);
    const double c = 1e-4;
    while (t > 1e-18) {
      MatrixXd cand = params_.W[0] - t * G;
      if (shared_objective(cand) <= base - c * t * g2) {
        for (auto& Ws : params_.W) Ws = cand;
        step_w_[0] = t;
        return;
      }
      t *= 0.5;
    }
  }

  double full_objective() const {
    Variant v = sh_.factorized
                    ? (sh_.use_seq ? Variant::MTLTR_APP : Variant::BLTR_MS)
                    : (sh_.shared_w
                           ? Variant::BLTR
                           : (sh_.use_seq ? Variant::BLTR_SEQ
                                          : Variant::BLTR_SS));
    return variant_objective(ds_, params_, cfg_, v);
  }
};

}  // namespace

TrainResult train(const RankingDataset& ds, const TrainConfig& cfg,
                  int threads) {
  return Trainer(ds, cfg, Variant::MTLTR_APP, threads).run();
}

TrainResult train_variant(const RankingDataset& ds, const TrainConfig& cfg,
                          Variant v, int threads) {
  return Trainer(ds, cfg, v, threads).run();
}

std::vector<TaskPrediction> predict(const RankingDataset& ds,
                                    const ModelParams& params,
                                    const TrainConfig& cfg) {
  std::vector<TaskPrediction> out;
  for (int s = 0; s < ds.S(); ++s)
    for (int m = 0; m < ds.M(); ++m) {
      const TaskData& t = ds.task(s, m);
      if (t.n() == 0) continue;
      VectorXd f = task_scores(t, params.weight_row(s, m));

      // tau-weighted neighbor blending; students without similar students
      // keep their own score.
      VectorXd blended = f;
      std::vector<double> tau_sum(static_cast<std::size_t>(t.n()), 0.0);
      std::vector<double> nbr_score(static_cast<std::size_t>(t.n()), 0.0);
      for (const auto& e : t.edges) {
        tau_sum[e.i] += e.tau;
        tau_sum[e.j] += e.tau;
        nbr_score[e.i] += e.tau * f[e.j];
        nbr_score[e.j] += e.tau * f[e.i];
      }
      for (int i = 0; i < t.n(); ++i)
        if (tau_sum[i] > 0.0)
          blended[i] =
              (1.0 - cfg.xi) * f[i] + cfg.xi * nbr_score[i] / tau_sum[i];

      // Higher blended score = better performer = smaller normalized rank;
      // ties broken by stable student order.
      std::vector<int> order(static_cast<std::size_t>(t.n()));
      for (int i = 0; i < t.n(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return blended[a] > blended[b];
      });
      TaskPrediction tp;
      tp.semester_id = t.semester_id;
      tp.major_id = t.major_id;
      tp.student_ids = t.student_ids;
      tp.scores = blended;
      tp.predicted_rank.resize(t.n());
      for (int r = 0; r < t.n(); ++r)
        tp.predicted_rank[order[r]] =
            t.n() > 1 ? static_cast<double>(r) / (t.n() - 1) : 0.0;
      out.push_back(std::move(tp));
    }
  return out;
}

namespace {

nlohmann::json matrix_to_json(const MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.empty()) return {};
  MatrixXd M(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r)
    for (std::size_t c = 0; c < j[r].size(); ++c)
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
  return M;
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return {{"lambda_s", cfg.lambda_s}, {"lambda_n", cfg.lambda_n},
          {"lambda_1", cfg.lambda_1}, {"lambda_2", cfg.lambda_2},
          {"lambda_e", cfg.lambda_e}, {"xi", cfg.xi},
          {"k", cfg.k},               {"eta_v", cfg.eta_v},
          {"eta_u", cfg.eta_u},       {"max_outer", cfg.max_outer},
          {"tolerance", cfg.tolerance}, {"seed", cfg.seed},
          {"pair_batch", cfg.pair_batch}};
}

}  // namespace

void save_model(const std::string& path, const ModelParams& params,
                const TrainConfig& cfg, Variant v,
                const std::vector<double>& trace,
                const std::vector<int>& semester_ids) {
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["variant"] = variant_name(v);
  j["factorized"] = params.factorized;
  j["trace"] = trace;
  nlohmann::json sems = nlohmann::json::array();
  for (std::size_t s = 0; s < semester_ids.size(); ++s) {
    nlohmann::json js;
    js["semester_id"] = semester_ids[s];
    if (params.factorized) {
      js["U"] = matrix_to_json(params.U[s]);
      js["V"] = matrix_to_json(params.V[s]);
    } else {
      js["W"] = matrix_to_json(params.W[s]);
    }
    sems.push_back(std::move(js));
  }
  j["semesters"] = std::move(sems);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  LoadedModel lm;
  const auto& c = j.at("config");
  lm.cfg.lambda_s = c.at("lambda_s");
  lm.cfg.lambda_n = c.at("lambda_n");
  lm.cfg.lambda_1 = c.at("lambda_1");
  lm.cfg.lambda_2 = c.at("lambda_2");
  lm.cfg.lambda_e = c.at("lambda_e");
  lm.cfg.xi = c.at("xi");
  lm.cfg.k = c.at("k");
  lm.cfg.eta_v = c.at("eta_v");
  lm.cfg.eta_u = c.at("eta_u");
  lm.cfg.max_outer = c.at("max_outer");
  lm.cfg.tolerance = c.at("tolerance");
  lm.cfg.seed = c.at("seed");
  lm.cfg.pair_batch = c.at("pair_batch");
  lm.variant = parse_variant(j.at("variant"));
  lm.params.factorized = j.at("factorized");
  lm.trace = j.at("trace").get<std::vector<double>>();
  for (const auto& js : j.at("semesters")) {
    lm.semester_ids.push_back(js.at("semester_id"));
    if (lm.params.factorized) {
      lm.params.U.push_back(matrix_from_json(js.at("U")));
      lm.params.V.push_back(matrix_from_json(js.at("V")));
    } else {
      lm.params.W.push_back(matrix_from_json(js.at("W")));
    }
  }
  return lm;
}

void write_predictions_csv(const std::string& path,
                           const std::vector<TaskPrediction>& preds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "student_id,semester_id,major_id,score,predicted_rank\n";
  char buf[32];
  for (const TaskPrediction& tp : preds)
    for (Eigen::Index i = 0; i < tp.scores.size(); ++i) {
      out << tp.student_ids[static_cast<std::size_t>(i)] << ','
          << tp.semester_id << ',' << tp.major_id;
      std::snprintf(buf, sizeof(buf), "%.17g", tp.scores[i]);
      out << ',' << buf;
      std::snprintf(buf, sizeof(buf), "%.17g", tp.predicted_rank[i]);
      out << ',' << buf << '\n';
    }
}

}  // namespace mtltr
