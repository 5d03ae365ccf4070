#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "permaseq/params.hpp"

namespace permaseq {

/// Coefficients of the Gaussian vector whose covariance is the interior block
/// of K_isymi(1,l,n):
///   xi_0 = eta_{-1} + a_0 eta_0
///   xi_i = sqrt(lambda_i) zeta_i + h_i eta_{-1} + a_i eta_0,   i = 1..n-1
/// with independent standard normals. Index 0 is the distinguished state
/// (lambda = 0, h = 1); index i >= 1 is state l+1+i.
struct GaussianRep {
  int l = 0;
  int n = 0;
  std::vector<int> index_map;
  std::vector<double> lambda;
  std::vector<double> h;
  std::vector<double> one_minus_h;
  std::vector<double> m;
  std::vector<double> a;
  std::vector<double> a_minus_a0;
  double tau = 1.0;
  double tau_minus_1 = 0.0;
  double s = 1.0;  // m_0 + sum m_i h_i

  int dim() const { return n; }
};

/// O(n); no dense matrix is formed, so windows of any length are allowed.
GaussianRep build_rep(const ParamSeq& p, int l, int n);

/// lambda_i delta_ij + h_i h_j + a_i a_j.
Eigen::MatrixXd rep_covariance(const GaussianRep& rep);

struct AsymptoticRow {
  int l = 0;
  double max_da_over_lambda = 0.0;
  double max_dh_over_lambda = 0.0;
  double tau_minus_1 = 0.0;
};

std::vector<AsymptoticRow> asymptotic_report(const ParamSeq& p, const std::vector<int>& l_grid,
                                             int n);

/// Columns l, max_da_over_lambda, max_dh_over_lambda, tau_minus_1.
std::string asymptotic_csv(const std::vector<AsymptoticRow>& rows);

}  // namespace permaseq
