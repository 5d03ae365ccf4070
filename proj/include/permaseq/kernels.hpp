#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "permaseq/params.hpp"

namespace permaseq {

enum class KernelTag { G, U, H, K, Ubar, V, Vtilde };

std::string to_string(KernelTag tag);
KernelTag kernel_tag_from_string(const std::string& name);

/// Label for the isolated extra state of the extended kernel. The border
/// row/column of K uses the same label.
inline constexpr int kStarState = -1;

/// Largest dimension for which builders materialize dense matrices.
inline constexpr int kMaxDense = 4096;

/// Smallest lambda accepted by the closed-form inverses.
inline constexpr double kLambdaFloor = 1e-300;

struct StructuredKernel {
  Eigen::MatrixXd entries;
  /// 0 for the point 0, j for the point 1/j, kStarState for the border/extra state.
  std::vector<int> index_map;
  KernelTag tag = KernelTag::G;
  int l = 0;
  int n = 0;

  int dim() const { return static_cast<int>(entries.rows()); }
};

struct InverseReport {
  Eigen::MatrixXd inverse;
  double det = 0.0;
  double log_det = 0.0;
  Eigen::VectorXd row_sums;
  Eigen::VectorXd col_sums;
  double rho = 0.0;
};

/// Row sums r, column sums c and total rho of H(l,n)^{-1}, plus log|H|, in
/// O(n) without materializing anything. Index 0 is the distinguished state;
/// index i >= 1 is state l+1+i. All quantities are formed from the deficit
/// ratios (1-f)/lambda and (1-g)/lambda.
struct HSums {
  int l = 0;
  int n = 0;
  std::vector<double> r;
  std::vector<double> c;
  double rho = 0.0;
  double log_det = 0.0;
  /// sum g_j (1-f_j)/lambda_j and sum f_j (1-g_j)/lambda_j over the window,
  /// so that r_0 = 1 - sum_gdf and c_0 = 1 - sum_fdg.
  double sum_gdf = 0.0;
  double sum_fdg = 0.0;
};

HSums h_sums(const ParamSeq& p, int l, int n);

/// G, U, Ubar, V: (n+1)x(n+1) over {0, l+2, ..., l+n+1}.
/// H: n x n over {0, l+2, ..., l+n}, H = G - 1 on that block.
StructuredKernel build_kernel(const ParamSeq& p, KernelTag tag, int l, int n);

/// Closed-form inverse of H(l,n) with determinant prod lambda_j.
InverseReport inverse_H_closed(const ParamSeq& p, int l, int n);

/// Inverse of [[1, h^T], [1, H + 1 h^T]] given H^{-1} and h, by the explicit
/// block formula.
Eigen::MatrixXd bordered_inverse(const Eigen::MatrixXd& Hinv, const Eigen::VectorXd& h);

struct KernelWithInverse {
  StructuredKernel K;
  InverseReport H;  // closed-form data of the interior H(l,n)
  Eigen::MatrixXd inverse;
};

/// K(1,l,n): a border of ones around the n x n block G = H(l,n) + 1, indexed
/// {*, 0, l+2, ..., l+n}; inverse assembled from the closed forms.
KernelWithInverse build_K(const ParamSeq& p, int l, int n);

/// Extended kernel on {0, l+2, ..., l+n+1, *}: V + 1 on the original states,
/// all ones on the * row and column.
StructuredKernel extend_with_star(const StructuredKernel& V);

/// Row-major CSV with 17 significant digits.
std::string matrix_to_csv(const Eigen::MatrixXd& m);

}  // namespace permaseq
