#include "permaseq/gaussian_rep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "permaseq/error.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/symmetrization.hpp"

namespace permaseq {

GaussianRep build_rep(const ParamSeq& p, int l, int n) {
  const HSums hs = h_sums(p, l, n);
  const TauReport t = tau_report(p, l, n);
  GaussianRep rep;
  rep.l = l;
  rep.n = n;
  rep.tau = t.tau;
  rep.tau_minus_1 = t.tau_minus_1;
  rep.s = t.s;
  const std::size_t d = static_cast<std::size_t>(n);
  rep.index_map.resize(d);
  rep.lambda.resize(d);
  rep.h.resize(d);
  rep.one_minus_h.resize(d);
  rep.m.resize(d);
  rep.a.resize(d);
  rep.a_minus_a0.resize(d);

  rep.index_map[0] = 0;
  rep.lambda[0] = 0.0;
  rep.h[0] = 1.0;
  rep.one_minus_h[0] = 0.0;
  rep.m[0] = std::sqrt(hs.r[0] * hs.c[0]);
  const double inv_sqrt_tau = 1.0 / std::sqrt(t.tau);
  rep.a[0] = inv_sqrt_tau * t.s;
  rep.a_minus_a0[0] = 0.0;
  for (std::size_t i = 1; i < d; ++i) {
    const int j = l + 1 + static_cast<int>(i);
    rep.index_map[i] = j;
    const double lam = p.lambda(j);
    const double df = p.deficit_f(j), dg = p.deficit_g(j);
    const double h = std::sqrt(p.f(j) * p.g(j));
    const double omh = (df + dg - df * dg) / (1.0 + h);
    const double m = std::exp(0.5 * (p.log_deficit_f(j) + p.log_deficit_g(j)) - p.log_lambda(j));
    rep.lambda[i] = lam;
    rep.h[i] = h;
    rep.one_minus_h[i] = omh;
    rep.m[i] = m;
    rep.a[i] = inv_sqrt_tau * (lam * m + t.s * h);
    rep.a_minus_a0[i] = inv_sqrt_tau * (lam * m - t.s * omh);
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!std::isfinite(rep.a[i])) throw Error("non-finite coefficient in Gaussian representation");
  }
  return rep;
}

Eigen::MatrixXd rep_covariance(const GaussianRep& rep) {
  if (rep.n > kMaxDense) throw Error("dimension exceeds dense limit");
  const Eigen::Index n = rep.n;
  const Eigen::Map<const Eigen::VectorXd> h(rep.h.data(), n);
  const Eigen::Map<const Eigen::VectorXd> a(rep.a.data(), n);
  const Eigen::Map<const Eigen::VectorXd> lam(rep.lambda.data(), n);
  Eigen::MatrixXd cov = h * h.transpose() + a * a.transpose();
  cov.diagonal() += lam;
  return cov;
}

std::vector<AsymptoticRow> asymptotic_report(const ParamSeq& p, const std::vector<int>& l_grid,
                                             int n) {
  for (std::size_t i = 1; i < l_grid.size(); ++i) {
    if (l_grid[i] <= l_grid[i - 1]) throw Error("l_grid must be increasing");
  }
  std::vector<AsymptoticRow> rows;
  for (int l : l_grid) {
    const GaussianRep rep = build_rep(p, l, n);
    AsymptoticRow row;
    row.l = l;
    row.tau_minus_1 = rep.tau_minus_1;
    for (int i = 1; i < n; ++i) {
      const int j = l + 1 + i;
      const std::size_t k = static_cast<std::size_t>(i);
      row.max_da_over_lambda =
          std::max(row.max_da_over_lambda, std::abs(rep.a_minus_a0[k]) / rep.lambda[k]);
      // (1-h)/lambda from the log-space ratios so that it underflows to 0 cleanly
      const double dh =
          (p.ratio_f(j) + p.ratio_g(j) - p.deficit_f(j) * p.ratio_g(j)) / (1.0 + rep.h[k]);
      row.max_dh_over_lambda = std::max(row.max_dh_over_lambda, dh);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string asymptotic_csv(const std::vector<AsymptoticRow>& rows) {
  std::string out = "l,max_da_over_lambda,max_dh_over_lambda,tau_minus_1\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.l, r.max_da_over_lambda,
                  r.max_dh_over_lambda, r.tau_minus_1);
    out += buf;
  }
  return out;
}

}  // namespace permaseq
