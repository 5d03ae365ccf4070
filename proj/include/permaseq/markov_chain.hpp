#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "permaseq/kernels.hpp"
#include "permaseq/params.hpp"

namespace permaseq {

/// Truncated chain on {0} u {1/j : 2 <= j <= N}. Vectors q, r, s hold the
/// values for j = 2..N at position j - 2. Matrices over the states use index
/// 0 for the point 0 and index j - 1 for the point 1/j.
struct ChainSpec {
  int N = 0;
  double alpha = 0.5;
  double delta = 0.0;
  std::vector<double> q, r, s;
  std::string r_profile = "explicit";
  std::string q_profile = "explicit";
  int j0 = 0;             // q_j is the constant q_const for j <= j0
  double q_const = 0.0;
  double normalization = 0.0;   // sum (q/r) s/(1/2 + r)
  double sum_q_over_r = 0.0;    // must be < 2
  double sum_q_over_r_gap = 0.0;  // sum (q/r)(1/2 + r - s), must be < 2
  double inf_s_ratio = 0.0;     // inf s/(1/2 + r)

  int states() const { return N; }
  double qj(int j) const { return q[static_cast<std::size_t>(j - 2)]; }
  double rj(int j) const { return r[static_cast<std::size_t>(j - 2)]; }
  double sj(int j) const { return s[static_cast<std::size_t>(j - 2)]; }
};

/// Explicit chain; checks positivity and s_j < r_j only.
ChainSpec make_chain(std::vector<double> q, std::vector<double> r, std::vector<double> s,
                     double alpha);

/// r_j from `r_profile` ("j_squared" or "j_cubed"), s_j = r_j - delta, and
/// q_j from `q_profile` ("log" or "sqrt_log") above a cutoff j0 with a
/// constant below it. j0 is the smallest index whose tail sum is below 1;
/// the constant is found by bisection so that sum (q/r) s/(1/2 + r) = 1.
/// Rejects, naming the bound, when inf s/(1/2 + r) <= 3/4 or
/// sup (1/2 + r - s) > 3/2.
ChainSpec normalize_reuter(double delta, const std::string& r_profile,
                           const std::string& q_profile, int N, double alpha = 0.5);

ChainSpec chain_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChainSpec& c);

struct PotentialTable {
  double alpha = 0.0;
  Eigen::MatrixXd u;  // density w.r.t. counting measure
  Eigen::VectorXd m;  // m(0) = 1, m(1/j) = q_j / r_j
  Eigen::MatrixXd v;  // u(x,y) / m(y)
};

PotentialTable potential_u(const ChainSpec& c);
PotentialTable potential_u(const ChainSpec& c, double alpha);

/// f = r/(a+r), g = s/(a+r), lambda = r/(q(a+r)) with a = 1/2, deficits
/// formed as a/(a+r) and (a + r - s)/(a+r). Requires alpha = 1/2 and the
/// normalization sum equal to 1.
ParamSeq to_params(const ChainSpec& c);

/// Q matrix of the killed truncated chain; every row sums to -alpha.
Eigen::MatrixXd q_matrix(const ChainSpec& c);

struct IdentityReport {
  double row_sum_residual = 0.0;  // max |alpha sum_y u(x,y) - 1|
  double sup_norm = 0.0;          // max_x alpha sum_y |u(x,y)|
  double resolvent_residual = 0.0;
  std::vector<double> alpha_grid;
  std::vector<double> deviation;  // max_x |alpha U f(x) - f(x)| along the grid
  bool deviation_decreasing = false;
  double worst_ratio = 0.0;       // max dev(next)/dev(prev)
  std::vector<double> alpha_u00;  // alpha u^alpha(0,0) along the grid
};

/// cos(pi x). Flat at 0, so alpha U f - f decays like 1/alpha once alpha
/// exceeds the jump rates that matter; a function with a kink at 0 only
/// gives alpha^{-1/2}.
double default_test_function(double x);

/// f is evaluated at the points of the state space (f(0) at x = 0, f(1/j) at 1/j).
IdentityReport identity_suite(const ChainSpec& c, double alpha2,
                              const std::function<double(double)>& f,
                              const std::vector<double>& alpha_grid = {1e2, 1e3, 1e4});

struct LeftPotential {
  Eigen::VectorXd h;
  double l1 = 0.0;
  double residual = 0.0;  // max_y |sum_x h(x) V(x,y) - 1|
  StructuredKernel Vtilde;
};

/// h(0) = 1 - sum f_j (1-g_j)/lambda_j, h(1/k) = (1-g_k)/lambda_k, for the V
/// kernel on {0, 2, ..., n_max} built from p.
LeftPotential left_potential(const ParamSeq& p);

struct LocalTimeReport {
  int start = 0;  // state index
  long long paths = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd se;
  double total_mean = 0.0;
  double total_se = 0.0;
  long long max_jumps = 0;
};

/// Embedded jump chain of Q_N with exponential holding times; each path
/// uses CounterRng(seed, path index). Aborts after 1e7 jumps on one path.
LocalTimeReport simulate_local_times(const ChainSpec& c, int start, long long paths,
                                     std::uint64_t seed, int threads = 0);

/// Label of a state index: 0 -> "0", i -> "1/(i+1)".
std::string state_label(int index);

}  // namespace permaseq
