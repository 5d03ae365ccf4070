#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "permaseq/gaussian_rep.hpp"
#include "permaseq/params.hpp"

namespace permaseq {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// count x dim samples of a k/2-permanental vector. Sample i is drawn from
/// CounterRng(seed, i), so batches do not depend on the thread count.
struct SampleBatch {
  RowMatrix samples;
  int k = 1;
  std::string kernel_tag;
  std::uint64_t seed = 0;
  std::vector<int> index_map;
  int clipped_pivots = 0;

  int dim() const { return static_cast<int>(samples.cols()); }
  int count() const { return static_cast<int>(samples.rows()); }
};

struct PsdFactor {
  Eigen::MatrixXd L;  // cov = L L^T up to clipped pivots
  int clipped = 0;
};

/// Lower-triangular factor of a symmetric PSD matrix. Throws if the smallest
/// eigenvalue is below -1e-10 * trace; negative pivots are clipped to zero
/// and counted.
PsdFactor psd_factor(const Eigen::MatrixXd& cov);

/// threads <= 0 means hardware concurrency.
SampleBatch sample_half_integer(const Eigen::MatrixXd& cov, int k, int count, std::uint64_t seed,
                                int threads = 0, const std::string& tag = "dense");
SampleBatch sample_half_integer(const GaussianRep& rep, int k, int count, std::uint64_t seed,
                                int threads = 0);

/// |I + K diag(s)|^{-alpha}.
double laplace_exact(const Eigen::MatrixXd& K, const Eigen::VectorXd& s, double alpha);

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Mean of exp(-<s, X>) with a delete-one jackknife standard error.
Estimate empirical_laplace(const SampleBatch& batch, const Eigen::VectorXd& s);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// mean_i = alpha K_ii, cov_ij = alpha K_ij K_ji.
Moments moments_exact(const Eigen::MatrixXd& K, double alpha);

struct SampleMoments {
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd cov_se;
};

SampleMoments sample_moments(const SampleBatch& batch);

/// Fraction of samples with max_j X_j > c, with binomial standard error.
Estimate exceedance_probability(const SampleBatch& batch, double c);

struct SandwichReport {
  int l = 0, n = 0, k = 1;
  double threshold = 0.0;
  double tau = 1.0;
  double weight = 1.0;  // tau^{-k/2}
  bool accessible = false;
  std::string access_route;  // "symmetrizable", "dimension <= 2", or ""
  double p = 0.0, p_se = 0.0;            // kernel G(1,l,n)
  double p_tilde = 0.0, p_tilde_se = 0.0;  // kernel K_isymi interior
  double lower = 0.0, upper = 1.0;
  double se_comb = 0.0;
  double lower_margin = 0.0;  // p - lower
  double upper_margin = 0.0;  // upper - p
  std::string status;  // "holds", "violated", "inconclusive (...)"
};

/// Checks tau^{-k/2} P~ <= P <= 1 - tau^{-k/2} + tau^{-k/2} P~ for the event
/// {max_j X_j > c} over the interior states of K(1,l,n). P~ is always
/// sampled from the Gaussian representation. P is sampled only when the
/// interior kernel has the same law as its entrywise geometric mean, i.e. it
/// passes the cycle test or has dimension <= 2; otherwise the status is
/// inconclusive and only P~ and the bounds are reported.
SandwichReport sandwich_check(const ParamSeq& p, int l, int n, int k, double c, int count,
                              std::uint64_t seed, int threads = 0);

nlohmann::json to_json(const SandwichReport& r);

void write_batch_csv(const SampleBatch& batch, const std::string& path);
/// Header: dim, count, seed, k as little-endian uint64; payload row-major
/// little-endian binary64.
void write_batch_binary(const SampleBatch& batch, const std::string& path);
SampleBatch read_batch_binary(const std::string& path);

int resolve_threads(int threads);

}  // namespace permaseq
