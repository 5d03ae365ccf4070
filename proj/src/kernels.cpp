#include "permaseq/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "permaseq/error.hpp"

namespace permaseq {

std::string to_string(KernelTag tag) {
  switch (tag) {
    case KernelTag::G: return "G";
    case KernelTag::U: return "U";
    case KernelTag::H: return "H";
    case KernelTag::K: return "K";
    case KernelTag::Ubar: return "Ubar";
    case KernelTag::V: return "V";
    case KernelTag::Vtilde: return "Vtilde";
  }
  return "?";
}

KernelTag kernel_tag_from_string(const std::string& name) {
  if (name == "G") return KernelTag::G;
  if (name == "U") return KernelTag::U;
  if (name == "H") return KernelTag::H;
  if (name == "K") return KernelTag::K;
  if (name == "Ubar") return KernelTag::Ubar;
  if (name == "V") return KernelTag::V;
  if (name == "Vtilde") return KernelTag::Vtilde;
  throw Error("unknown kernel tag '" + name + "'");
}

namespace {

void check_window(const ParamSeq& p, int l, int n, int last_state) {
  if (l < 0) throw Error("l must be nonnegative");
  if (n < 1) throw Error("n must be at least 1");
  if (last_state > p.n_max()) {
    std::ostringstream os;
    os << "window needs state " << last_state << " but n_max = " << p.n_max();
    throw Error(os.str());
  }
}

void check_lambda_floor(const ParamSeq& p, int first, int last) {
  for (int j = first; j <= last; ++j) {
    if (p.lambda(j) < kLambdaFloor) {
      std::ostringstream os;
      os << "lambda_" << j << " = " << p.lambda(j) << " is below the floor " << kLambdaFloor;
      throw Error(os.str());
    }
  }
}

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

HSums h_sums(const ParamSeq& p, int l, int n) {
  check_window(p, l, n, l + n);
  check_lambda_floor(p, l + 2, l + n);
  HSums s;
  s.l = l;
  s.n = n;
  s.r.assign(static_cast<std::size_t>(n), 0.0);
  s.c.assign(static_cast<std::size_t>(n), 0.0);
  Kahan gdf, fdg, prod, logdet;
  for (int i = 1; i < n; ++i) {
    const int j = l + 1 + i;
    const double rf = p.ratio_f(j);
    const double rg = p.ratio_g(j);
    s.r[static_cast<std::size_t>(i)] = rf;
    s.c[static_cast<std::size_t>(i)] = rg;
    gdf.add(p.g(j) * rf);
    fdg.add(p.f(j) * rg);
    prod.add(p.deficit_g(j) * rf);
    logdet.add(p.log_lambda(j));
  }
  s.sum_gdf = gdf.sum;
  s.sum_fdg = fdg.sum;
  s.r[0] = 1.0 - gdf.sum;
  s.c[0] = 1.0 - fdg.sum;
  s.rho = 1.0 + prod.sum;
  s.log_det = logdet.sum;
  return s;
}

StructuredKernel build_kernel(const ParamSeq& p, KernelTag tag, int l, int n) {
  StructuredKernel k;
  k.tag = tag;
  k.l = l;
  k.n = n;
  if (tag == KernelTag::H) {
    check_window(p, l, n, l + n);
    if (n > kMaxDense) throw Error("dimension exceeds dense limit");
    k.index_map.push_back(0);
    for (int i = 1; i < n; ++i) k.index_map.push_back(l + 1 + i);
    k.entries.resize(n, n);
    for (int a = 0; a < n; ++a) {
      const int ja = k.index_map[static_cast<std::size_t>(a)];
      const double fa = ja == 0 ? 1.0 : p.f(ja);
      for (int b = 0; b < n; ++b) {
        const int jb = k.index_map[static_cast<std::size_t>(b)];
        const double gb = jb == 0 ? 1.0 : p.g(jb);
        k.entries(a, b) = fa * gb + (a == b && ja != 0 ? p.lambda(ja) : 0.0);
      }
    }
    return k;
  }
  if (tag == KernelTag::K) throw Error("use build_K for the bordered kernel");
  if (tag == KernelTag::Vtilde) throw Error("use extend_with_star for the extended kernel");

  check_window(p, l, n, l + n + 1);
  if (n + 1 > kMaxDense) throw Error("dimension exceeds dense limit");
  const int d = n + 1;
  k.index_map.push_back(0);
  for (int i = 1; i < d; ++i) k.index_map.push_back(l + 1 + i);
  k.entries.resize(d, d);
  for (int a = 0; a < d; ++a) {
    const int ja = k.index_map[static_cast<std::size_t>(a)];
    const double fa = ja == 0 ? 1.0 : p.f(ja);
    const double lam = ja == 0 ? 0.0 : p.lambda(ja);
    for (int b = 0; b < d; ++b) {
      const int jb = k.index_map[static_cast<std::size_t>(b)];
      const double gb = jb == 0 ? 1.0 : p.g(jb);
      const double diag = a == b ? lam : 0.0;
      switch (tag) {
        case KernelTag::G:
        case KernelTag::U: k.entries(a, b) = (diag + fa * gb) + 1.0; break;
        case KernelTag::V: k.entries(a, b) = diag + fa * gb; break;
        case KernelTag::Ubar: k.entries(a, b) = diag + 2.0; break;
        default: break;
      }
    }
  }
  return k;
}

InverseReport inverse_H_closed(const ParamSeq& p, int l, int n) {
  if (n > kMaxDense) throw Error("dimension exceeds dense limit");
  const HSums s = h_sums(p, l, n);
  InverseReport rep;
  rep.inverse = Eigen::MatrixXd::Zero(n, n);
  Kahan corner;
  corner.add(1.0);
  for (int i = 1; i < n; ++i) {
    const int j = l + 1 + i;
    const double lam = p.lambda(j);
    corner.add(p.f(j) * p.g(j) / lam);
    rep.inverse(0, i) = -p.g(j) / lam;
    rep.inverse(i, 0) = -p.f(j) / lam;
    rep.inverse(i, i) = 1.0 / lam;
  }
  rep.inverse(0, 0) = corner.sum;
  rep.log_det = s.log_det;
  rep.det = std::exp(s.log_det);
  rep.row_sums = Eigen::Map<const Eigen::VectorXd>(s.r.data(), n);
  rep.col_sums = Eigen::Map<const Eigen::VectorXd>(s.c.data(), n);
  rep.rho = s.rho;
  return rep;
}

Eigen::MatrixXd bordered_inverse(const Eigen::MatrixXd& Hinv, const Eigen::VectorXd& h) {
  const Eigen::Index n = Hinv.rows();
  if (Hinv.cols() != n || h.size() != n) throw Error("bordered_inverse: dimension mismatch");
  Eigen::MatrixXd out(n + 1, n + 1);
  const Eigen::RowVectorXd hH = h.transpose() * Hinv;  // sum_j h_j H^{j,k}
  out(0, 0) = 1.0 + hH.sum();
  out.block(0, 1, 1, n) = -hH;
  out.block(1, 0, n, 1) = -Hinv.rowwise().sum();
  out.block(1, 1, n, n) = Hinv;
  return out;
}

KernelWithInverse build_K(const ParamSeq& p, int l, int n) {
  if (n + 1 > kMaxDense) throw Error("dimension exceeds dense limit");
  KernelWithInverse out;
  const StructuredKernel H = build_kernel(p, KernelTag::H, l, n);
  out.H = inverse_H_closed(p, l, n);
  out.K.tag = KernelTag::K;
  out.K.l = l;
  out.K.n = n;
  out.K.index_map.push_back(kStarState);
  out.K.index_map.insert(out.K.index_map.end(), H.index_map.begin(), H.index_map.end());
  out.K.entries = Eigen::MatrixXd::Ones(n + 1, n + 1);
  out.K.entries.block(1, 1, n, n) = H.entries.array() + 1.0;

  // Same as bordered_inverse(H^{-1}, ones) but with the border taken from the
  // deficit-based sums instead of summing the explicit inverse.
  out.inverse.resize(n + 1, n + 1);
  out.inverse(0, 0) = 1.0 + out.H.rho;
  out.inverse.block(0, 1, 1, n) = -out.H.col_sums.transpose();
  out.inverse.block(1, 0, n, 1) = -out.H.row_sums;
  out.inverse.block(1, 1, n, n) = out.H.inverse;
  return out;
}

StructuredKernel extend_with_star(const StructuredKernel& V) {
  if (V.tag != KernelTag::V) throw Error("extend_with_star expects a V kernel");
  StructuredKernel out;
  out.tag = KernelTag::Vtilde;
  out.l = V.l;
  out.n = V.n;
  out.index_map = V.index_map;
  out.index_map.push_back(kStarState);
  const Eigen::Index d = V.entries.rows();
  out.entries = Eigen::MatrixXd::Ones(d + 1, d + 1);
  out.entries.block(0, 0, d, d) = V.entries.array() + 1.0;
  return out;
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace permaseq
