#include "permaseq/symmetrization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "permaseq/error.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/rng.hpp"

namespace permaseq {

namespace {

void require_square(const Eigen::MatrixXd& M, const char* what) {
  if (M.rows() != M.cols() || M.rows() == 0) throw Error(std::string(what) + ": matrix must be square");
}

double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

double log_det_positive(const Eigen::MatrixXd& M) {
  require_square(M, "log_det_positive");
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::MatrixXd& LU = lu.matrixLU();
  double sign = lu.permutationP().determinant();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < LU.rows(); ++i) {
    const double d = LU(i, i);
    if (d == 0.0) throw Error("matrix is singular");
    if (d < 0.0) sign = -sign;
    acc += std::log(std::abs(d));
  }
  if (sign < 0.0) throw Error("determinant is negative");
  return acc;
}

MMatrixVerdict is_nonsingular_M_matrix(const Eigen::MatrixXd& A, double tol) {
  require_square(A, "is_nonsingular_M_matrix");
  MMatrixVerdict v;
  const Eigen::Index n = A.rows();
  const double off_tol = tol * max_abs(A);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j && A(i, j) > off_tol) {
        v.row = static_cast<int>(i);
        v.col = static_cast<int>(j);
        v.value = A(i, j);
        v.reason = "positive off-diagonal";
        return v;
      }
    }
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    v.reason = "singular";
    return v;
  }
  const Eigen::MatrixXd inv = lu.inverse();
  const double inv_tol = tol * max_abs(inv);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (inv(i, j) < -inv_tol) {
        v.row = static_cast<int>(i);
        v.col = static_cast<int>(j);
        v.value = inv(i, j);
        v.reason = "negative inverse entry";
        return v;
      }
    }
  }
  v.ok = true;
  return v;
}

Eigen::MatrixXd a_sym(const Eigen::MatrixXd& A, double tol) {
  require_square(A, "a_sym");
  const Eigen::Index n = A.rows();
  const double scale = max_abs(A);
  const double off_tol = tol * scale;
  Eigen::MatrixXd out = A;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (A(i, j) > off_tol || A(j, i) > off_tol) {
        std::ostringstream os;
        os << "a_sym: positive off-diagonal at (" << i << "," << j << ")";
        throw Error(os.str());
      }
      const double prod = A(i, j) * A(j, i);
      if (prod < -off_tol * off_tol) {
        std::ostringstream os;
        os << "a_sym: off-diagonal product " << prod << " negative at (" << i << "," << j << ")";
        throw Error(os.str());
      }
      const double v = -std::sqrt(std::max(prod, 0.0));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Eigen::MatrixXd k_isymi(const Eigen::MatrixXd& K) {
  require_square(K, "k_isymi");
  const Eigen::MatrixXd A = K.partialPivLu().inverse();
  const MMatrixVerdict v = is_nonsingular_M_matrix(A);
  if (!v.ok) throw Error("k_isymi: inverse is not an M-matrix (" + v.reason + ")");
  return a_sym(A).partialPivLu().inverse();
}

Eigen::MatrixXd k_Sym(const Eigen::MatrixXd& K) {
  require_square(K, "k_Sym");
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd out = K;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double prod = K(i, j) * K(j, i);
      if (prod < 0.0) throw Error("k_Sym: entries of opposite sign");
      const double v = std::sqrt(prod);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

SymmetrizationReport symmetrize(const Eigen::MatrixXd& K) {
  require_square(K, "symmetrize");
  SymmetrizationReport r;
  r.A = K.partialPivLu().inverse();
  r.is_inverse_M = is_nonsingular_M_matrix(r.A).ok;
  r.tau = std::numeric_limits<double>::quiet_NaN();
  if (r.is_inverse_M) {
    r.A_sym = a_sym(r.A);
    r.K_isymi = r.A_sym.partialPivLu().inverse();
    r.tau = std::exp(log_det_positive(r.A_sym) - log_det_positive(r.A));
  }
  bool positive = (K.array() > 0.0).all();
  if (positive) r.K_Sym = k_Sym(K);
  return r;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

nlohmann::json to_json(const SymmetrizationReport& r) {
  nlohmann::json j;
  j["is_inverse_M"] = r.is_inverse_M;
  j["tau"] = r.tau;
  j["A"] = matrix_json(r.A);
  j["A_sym"] = matrix_json(r.A_sym);
  j["K_isymi"] = matrix_json(r.K_isymi);
  j["K_Sym"] = matrix_json(r.K_Sym);
  return j;
}

TauReport tau_report(const ParamSeq& p, int l, int n) {
  const HSums hs = h_sums(p, l, n);
  TauReport t;
  const double A = hs.sum_gdf;
  const double B = hs.sum_fdg;
  const double m0 = std::sqrt(hs.r[0] * hs.c[0]);
  double sum_mh = 0.0, comp = 0.0;
  for (int i = 1; i < n; ++i) {
    const int j = l + 1 + i;
    const double mj = std::exp(0.5 * (p.log_deficit_f(j) + p.log_deficit_g(j)) - p.log_lambda(j));
    const double y = mj * std::sqrt(p.f(j) * p.g(j)) - comp;
    const double s = sum_mh + y;
    comp = (s - sum_mh) - y;
    sum_mh = s;
  }
  t.one_minus_s = (A + B - A * B) / (1.0 + m0) - sum_mh;
  t.s = 1.0 - t.one_minus_s;
  t.tau_minus_1 = t.one_minus_s * (1.0 + t.s);
  t.tau = 1.0 + t.tau_minus_1;

  double tol = 1e-9;
  if (n <= 64) {
    t.dense = true;
    const KernelWithInverse kw = build_K(p, l, n);
    const Eigen::MatrixXd As = a_sym(kw.inverse);
    t.tau_det = std::exp(log_det_positive(As) - log_det_positive(kw.inverse));
  } else {
    // Schur complement of the corner of A_sym, solving the arrowhead block
    // H_sym^{-1} x = m directly; |H_sym^{-1}| = |A| cancels in the quotient.
    double d0 = 1.0, d0c = 0.0, w2 = 0.0, w2c = 0.0, num = 0.0, numc = 0.0, inv_lam = 0.0;
    auto kahan = [](double& sum, double& c, double x) {
      const double y = x - c;
      const double tt = sum + y;
      c = (tt - sum) - y;
      sum = tt;
    };
    std::vector<double> mj(static_cast<std::size_t>(n)), hj(static_cast<std::size_t>(n));
    for (int i = 1; i < n; ++i) {
      const int j = l + 1 + i;
      const double lam = p.lambda(j);
      const double h = std::sqrt(p.f(j) * p.g(j));
      const double m = std::sqrt(hs.r[static_cast<std::size_t>(i)] * hs.c[static_cast<std::size_t>(i)]);
      mj[static_cast<std::size_t>(i)] = m;
      hj[static_cast<std::size_t>(i)] = h;
      kahan(d0, d0c, p.f(j) * p.g(j) / lam);
      kahan(w2, w2c, h * h / lam);
      kahan(num, numc, h * m);
      inv_lam += 1.0 / lam;
    }
    const double x0 = (m0 + num) / (d0 - w2);
    double mx = m0 * x0, mxc = 0.0;
    for (int i = 1; i < n; ++i) {
      const int j = l + 1 + i;
      const double lam = p.lambda(j);
      const double m = mj[static_cast<std::size_t>(i)];
      kahan(mx, mxc, m * lam * m + m * hj[static_cast<std::size_t>(i)] * x0);
    }
    t.tau_det = (1.0 + hs.rho) - mx;
    // the pivot d0 - w2 cancels sums of size sum 1/lambda
    tol += 8.0 * std::numeric_limits<double>::epsilon() * inv_lam;
  }
  if (!(std::abs(t.tau_det - t.tau) <= tol * std::max(1.0, t.tau))) {
    std::ostringstream os;
    os.precision(17);
    os << "tau mismatch at l=" << l << ", n=" << n << ": closed form " << t.tau
       << ", determinant quotient " << t.tau_det;
    throw Error(os.str());
  }
  return t;
}

double tau_ratio(const ParamSeq& p, int l, int n) { return tau_report(p, l, n).tau; }

CycleReport cycle_symmetrizable(const Eigen::MatrixXd& K, double tol) {
  require_square(K, "cycle_symmetrizable");
  CycleReport rep;
  const Eigen::Index n = K.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      for (Eigen::Index k = j + 1; k < n; ++k) {
        const double p1 = K(i, j) * K(j, k) * K(k, i);
        const double p2 = K(i, k) * K(k, j) * K(j, i);
        double scale = std::sqrt(std::abs(p1) * std::abs(p2));
        if (scale == 0.0) scale = std::max(std::abs(p1), std::abs(p2));
        const double res = scale == 0.0 ? 0.0 : std::abs(p1 - p2) / scale;
        if (res > rep.residual || rep.i < 0) {
          rep.residual = res;
          rep.i = static_cast<int>(i);
          rep.j = static_cast<int>(j);
          rep.k = static_cast<int>(k);
        }
      }
    }
  }
  rep.symmetrizable = rep.residual <= tol;
  return rep;
}

double diagonal_conjugation_residual(const Eigen::MatrixXd& K, int trials, std::uint64_t seed) {
  require_square(K, "diagonal_conjugation_residual");
  const Eigen::MatrixXd S = k_Sym(K);
  const Eigen::Index n = K.rows();
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s(i) = 0.05 + 1.95 * rng.uniform();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const double d1 = (I + s.asDiagonal() * K).partialPivLu().determinant();
    const double d2 = (I + s.asDiagonal() * S).partialPivLu().determinant();
    worst = std::max(worst, std::abs(d1 - d2) / std::max(std::abs(d1), std::abs(d2)));
  }
  return worst;
}

}  // namespace permaseq
