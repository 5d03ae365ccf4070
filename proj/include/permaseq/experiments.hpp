#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "permaseq/gaussian_rep.hpp"
#include "permaseq/params.hpp"

namespace permaseq {

enum class Statistic { sup_abs, sup_signed, inf_signed, sup_sqrt, inf_sqrt, ratio_lambda_log };

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& name);

enum class Regime { X0_lt_beta, X0_ge_beta };

std::string to_string(Regime r);

struct ReplicaResult;

/// Per-coordinate coefficients of a window: coordinate i is
///   xi_i = sqrt_lambda_i zeta_i + h_i eta_{-1} + a_i eta_0,
/// index 0 being the distinguished state (sqrt_lambda = 0). Built once and
/// shared read-only by all replicas.
class WindowSampler {
 public:
  static WindowSampler from_rep(const GaussianRep& rep);
  /// Ubar factorization: h = a = 1, so Var xi_0 = 2 and Cov = 2 + lambda delta.
  static WindowSampler ubar(const ParamSeq& p, int l, int n);
  /// Raw coefficients; element 0 is the distinguished state.
  static WindowSampler from_arrays(std::vector<int> states, std::vector<double> lambda,
                                   std::vector<double> h, std::vector<double> a);

  int size() const { return static_cast<int>(states_.size()); }
  const std::vector<int>& states() const { return states_; }

 private:
  friend ReplicaResult window_statistics(const WindowSampler&, int, std::uint64_t, long long,
                                         double);
  void precompute();
  std::vector<int> states_;
  std::vector<double> lambda_, sqrt_lambda_, h_, a_;
  std::vector<double> inv_sqrt_norm_;  // (lambda_j log j)^{-1/2}, 0 when skipped
  std::vector<double> inv_norm_;
};

struct ReplicaResult {
  long long replica = 0;
  double X0 = 0.0;
  double sup_abs = 0.0;
  double sup_signed = 0.0;
  double inf_signed = 0.0;
  double sup_sqrt = 0.0;
  double inf_sqrt = 0.0;
  double predicted_sup = 0.0;
  double predicted_inf = 0.0;
  Regime regime = Regime::X0_ge_beta;
  double max_ratio = 0.0;        // max X_j / (lambda_j log j)
  double bridge_residual = 0.0;  // max relative |(X-X0) - (sqrt X - sqrt X0)(sqrt X + sqrt X0)|
  int used = 0;                  // coordinates with a usable normalizer
};

/// predicted_sup = sqrt(beta) + 2 sqrt(X0); predicted_inf = -X0/sqrt(beta)
/// when X0 < beta and sqrt(beta) - 2 sqrt(X0) otherwise. beta = +inf gives NaN.
void fill_predictions(ReplicaResult& r, double beta);

/// One replica drawn from CounterRng(seed, replica). Coordinates whose
/// normalizer lambda_j log j is below 1e-12 are skipped; an empty window
/// yields zero statistics.
ReplicaResult window_statistics(const WindowSampler& w, int k, std::uint64_t seed,
                                long long replica, double beta);

struct ExperimentConfig {
  nlohmann::json params;  // ParamSeq JSON
  int k = 1;
  int l = 1000;
  int n_max = 0;          // 0: use the ParamSeq n_max
  int replicas = 200;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string kernel = "gaussian_rep";  // or "ubar"
  Statistic statistic = Statistic::sup_signed;
  double slack = 0.25;
  double ratio_lo = 0.5;
  double ratio_hi = 1.05;
  std::string out;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

struct ExperimentSummary {
  int replicas = 0;
  double beta = 0.0;
  Statistic statistic = Statistic::sup_signed;
  double corr_sup_signed = 0.0;  // vs predicted_sup
  double corr_sup_abs = 0.0;     // vs predicted_sup
  double corr_inf = 0.0;         // inf_signed vs predicted_inf
  double corr_primary = 0.0;     // the configured statistic vs its prediction
  double exceedance = 0.0;       // fraction sup_signed > predicted_sup + slack
  int count_lt = 0, count_ge = 0;
  double inf_mae_lt = 0.0, inf_mae_ge = 0.0;  // mean |inf_signed - predicted_inf| per regime
  double ratio_fraction = 0.0;  // fraction of max_ratio in [ratio_lo, ratio_hi]
  double mean_sup_over_pred = 0.0;
  double max_bridge_residual = 0.0;
  double seconds = 0.0;
};

struct ExperimentResult {
  std::vector<ReplicaResult> rows;
  ExperimentSummary summary;
};

ExperimentResult limit_experiment(const ExperimentConfig& cfg);

nlohmann::json to_json(const ExperimentSummary& s);

/// Columns: replica, X0, sup_abs, sup_signed, inf_signed, sup_sqrt, inf_sqrt,
/// predicted_sup, predicted_inf, regime, max_ratio.
std::string results_csv(const std::vector<ReplicaResult>& rows);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace permaseq
