#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "permaseq/params.hpp"

namespace permaseq {

struct MMatrixVerdict {
  bool ok = false;
  int row = -1;  // first violating entry, -1 when ok or singular
  int col = -1;
  double value = 0.0;
  std::string reason;  // "", "positive off-diagonal", "negative inverse entry", "singular"
};

/// Default relative sign tolerance: entries are compared against tol * max|entry|.
inline constexpr double kSignTol = 1e-12;

/// Nonsingular M-matrix test: off-diagonals <= tol*max|A| and
/// A^{-1} >= -tol*max|A^{-1}| entrywise.
MMatrixVerdict is_nonsingular_M_matrix(const Eigen::MatrixXd& A, double tol = kSignTol);

/// Diagonal kept; off-diagonal (i,j) -> -sqrt(A_ij A_ji). Throws on a
/// positive off-diagonal or a negative product beyond tolerance.
Eigen::MatrixXd a_sym(const Eigen::MatrixXd& A, double tol = kSignTol);

/// Inverse, symmetrize, invert again. Throws unless K^{-1} is an M-matrix.
Eigen::MatrixXd k_isymi(const Eigen::MatrixXd& K);

/// Entrywise geometric mean sqrt(K_ij K_ji).
Eigen::MatrixXd k_Sym(const Eigen::MatrixXd& K);

struct SymmetrizationReport {
  bool is_inverse_M = false;
  Eigen::MatrixXd A;
  Eigen::MatrixXd A_sym;
  Eigen::MatrixXd K_isymi;
  Eigen::MatrixXd K_Sym;
  double tau = 0.0;  // |A_sym| / |A| by LU log-determinants
};

SymmetrizationReport symmetrize(const Eigen::MatrixXd& K);

nlohmann::json to_json(const SymmetrizationReport& r);

struct TauReport {
  double tau = 0.0;          // closed form 2 - s^2
  double tau_minus_1 = 0.0;  // (1 - s)(1 + s), without cancellation
  double tau_det = 0.0;      // determinant quotient
  double s = 0.0;            // m_0 + sum_j m_j h_j
  double one_minus_s = 0.0;
  bool dense = false;        // determinant quotient from dense LU (n <= 64)
};

/// tau for K(1,l,n), both ways. Throws when they disagree beyond 1e-9.
TauReport tau_report(const ParamSeq& p, int l, int n);
double tau_ratio(const ParamSeq& p, int l, int n);

struct CycleReport {
  bool symmetrizable = false;
  int i = -1, j = -1, k = -1;  // triple with the largest scaled residual
  double residual = 0.0;
};

/// Triple cycle-product test |K_ij K_jk K_ki - K_ik K_kj K_ji| <= tol*scale,
/// scale = sqrt(|K_ij K_jk K_ki| |K_ik K_kj K_ji|).
CycleReport cycle_symmetrizable(const Eigen::MatrixXd& K, double tol = 1e-10);

/// Largest relative gap between |I + D_s K| and |I + D_s k_Sym(K)| over
/// `trials` random diagonals with entries in (0.05, 2).
double diagonal_conjugation_residual(const Eigen::MatrixXd& K, int trials, std::uint64_t seed);

/// log|det M| by partial-pivot LU; throws if the determinant is not positive.
double log_det_positive(const Eigen::MatrixXd& M);

}  // namespace permaseq
