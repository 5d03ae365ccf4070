#include "permaseq/markov_chain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "permaseq/error.hpp"
#include "permaseq/parallel.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/sampler.hpp"

namespace permaseq {

namespace {

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

void fill_summaries(ChainSpec& c) {
  Kahan norm, sqr, gap;
  c.inf_s_ratio = 1e300;
  for (int j = 2; j <= c.N; ++j) {
    const double q = c.qj(j), r = c.rj(j), s = c.sj(j);
    norm.add(q / r * (s / (0.5 + r)));
    sqr.add(q / r);
    gap.add(q / r * (0.5 + r - s));
    c.inf_s_ratio = std::min(c.inf_s_ratio, s / (0.5 + r));
  }
  c.normalization = norm.sum;
  c.sum_q_over_r = sqr.sum;
  c.sum_q_over_r_gap = gap.sum;
}

double profile_r(const std::string& name, int j) {
  const double x = static_cast<double>(j);
  if (name == "j_squared") return x * x;
  if (name == "j_cubed") return x * x * x;
  throw Error("unknown r_profile '" + name + "' (expected j_squared or j_cubed)");
}

double profile_q(const std::string& name, int j) {
  const double lj = std::log(static_cast<double>(j));
  if (name == "log") return lj;
  if (name == "sqrt_log") return std::sqrt(lj);
  throw Error("unknown q_profile '" + name + "' (expected log or sqrt_log)");
}

}  // namespace

std::string state_label(int index) {
  return index == 0 ? "0" : "1/" + std::to_string(index + 1);
}

ChainSpec make_chain(std::vector<double> q, std::vector<double> r, std::vector<double> s,
                     double alpha) {
  if (q.size() != r.size() || q.size() != s.size()) throw Error("q, r, s must have equal length");
  if (q.empty()) throw Error("chain needs at least one state 1/j");
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  for (std::size_t i = 0; i < q.size(); ++i) {
    const int j = static_cast<int>(i) + 2;
    if (!(q[i] > 0.0) || !(r[i] > 0.0) || !(s[i] > 0.0))
      throw Error("q, r, s must be positive (index " + std::to_string(j) + ")");
    if (!(s[i] < r[i])) throw Error("s_" + std::to_string(j) + " must be below r_" + std::to_string(j));
  }
  ChainSpec c;
  c.N = static_cast<int>(q.size()) + 1;
  c.alpha = alpha;
  c.q = std::move(q);
  c.r = std::move(r);
  c.s = std::move(s);
  fill_summaries(c);
  return c;
}

ChainSpec normalize_reuter(double delta, const std::string& r_profile,
                           const std::string& q_profile, int N, double alpha) {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error("delta must lie in (0, 1]");
  if (N < 3) throw Error("N must be at least 3");
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  const std::size_t m = static_cast<std::size_t>(N - 1);
  ChainSpec c;
  c.N = N;
  c.alpha = alpha;
  c.delta = delta;
  c.r_profile = r_profile;
  c.q_profile = q_profile;
  c.r.resize(m);
  c.s.resize(m);
  c.q.resize(m);
  std::vector<double> weight(m), qp(m);
  for (std::size_t i = 0; i < m; ++i) {
    const int j = static_cast<int>(i) + 2;
    c.r[i] = profile_r(r_profile, j);
    c.s[i] = c.r[i] - delta;
    if (!(c.s[i] > 0.0)) throw Error("s_" + std::to_string(j) + " = r - delta is not positive");
    const double ratio = c.s[i] / (0.5 + c.r[i]);
    if (!(ratio > 0.75)) {
      std::ostringstream os;
      os << "bound inf s_j/(1/2 + r_j) > 3/4 violated at j = " << j << " (value " << ratio
         << "; needs delta < r_j/4 - 3/8 = " << c.r[i] / 4.0 - 0.375 << ")";
      throw Error(os.str());
    }
    weight[i] = ratio / c.r[i];
    qp[i] = profile_q(q_profile, j);
  }
  if (!(0.5 + delta <= 1.5)) {
    std::ostringstream os;
    os << "bound sup (1/2 + r_j - s_j) <= 3/2 violated (delta = " << delta << ")";
    throw Error(os.str());
  }

  // smallest j0 with sum_{j > j0} q_j/r_j s_j/(1/2 + r_j) < 1
  std::vector<double> tail(m + 1, 0.0);
  for (std::size_t i = m; i-- > 0;) tail[i] = tail[i + 1] + qp[i] * weight[i];
  std::size_t i0 = 0;
  while (i0 < m && !(tail[i0 + 1] < 1.0)) ++i0;
  c.j0 = static_cast<int>(i0) + 2;
  auto total = [&](double qc) {
    Kahan k;
    for (std::size_t i = 0; i < m; ++i) k.add((i <= i0 ? qc : qp[i]) * weight[i]);
    return k.sum;
  };
  double lo = 0.0, hi = 1.0;
  while (total(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) < 1.0) lo = mid;
    else hi = mid;
  }
  // pick whichever bracket end is closer to the target
  c.q_const = std::abs(total(lo) - 1.0) <= std::abs(total(hi) - 1.0) ? lo : hi;
  for (std::size_t i = 0; i < m; ++i) c.q[i] = i <= i0 ? c.q_const : qp[i];
  fill_summaries(c);
  if (!(std::abs(c.normalization - 1.0) <= 1e-12))
    throw Error("normalization sum did not reach 1 (got " + std::to_string(c.normalization) + ")");
  if (!(c.sum_q_over_r < 2.0)) throw Error("bound sum q_j/r_j < 2 violated");
  if (!(c.sum_q_over_r_gap < 2.0)) throw Error("bound sum q_j/r_j (1/2 + r_j - s_j) < 2 violated");
  return c;
}

ChainSpec chain_from_json(const nlohmann::json& j) {
  const double alpha = j.value("alpha", 0.5);
  if (j.contains("q")) {
    return make_chain(j.at("q").get<std::vector<double>>(), j.at("r").get<std::vector<double>>(),
                      j.at("s").get<std::vector<double>>(), alpha);
  }
  return normalize_reuter(j.at("delta").get<double>(), j.value("r_profile", "j_squared"),
                          j.value("q_profile", "log"), j.at("N").get<int>(), alpha);
}

nlohmann::json to_json(const ChainSpec& c) {
  nlohmann::json j;
  j["N"] = c.N;
  j["alpha"] = c.alpha;
  j["delta"] = c.delta;
  j["r_profile"] = c.r_profile;
  j["q_profile"] = c.q_profile;
  j["j0"] = c.j0;
  j["q_const"] = c.q_const;
  j["normalization"] = c.normalization;
  j["sum_q_over_r"] = c.sum_q_over_r;
  j["sum_q_over_r_gap"] = c.sum_q_over_r_gap;
  j["inf_s_ratio"] = c.inf_s_ratio;
  j["q"] = c.q;
  j["r"] = c.r;
  j["s"] = c.s;
  return j;
}

PotentialTable potential_u(const ChainSpec& c) { return potential_u(c, c.alpha); }

PotentialTable potential_u(const ChainSpec& c, double alpha) {
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  const int n = c.N;
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);  // s q / ((a + r) r)
  Kahan sum;
  for (int j = 2; j <= n; ++j) {
    const double v = c.sj(j) * c.qj(j) / ((alpha + c.rj(j)) * c.rj(j));
    w[static_cast<std::size_t>(j - 1)] = v;
    sum.add(v);
  }
  const double u00 = 1.0 / (alpha + alpha * sum.sum);
  PotentialTable t;
  t.alpha = alpha;
  t.u.resize(n, n);
  t.m.resize(n);
  t.m(0) = 1.0;
  t.u(0, 0) = u00;
  for (int j = 2; j <= n; ++j) {
    const int b = j - 1;
    t.m(b) = c.qj(j) / c.rj(j);
    t.u(0, b) = u00 * w[static_cast<std::size_t>(b)];
  }
  for (int i = 2; i <= n; ++i) {
    const int a = i - 1;
    const double fi = c.rj(i) / (alpha + c.rj(i));
    t.u(a, 0) = u00 * fi;
    for (int j = 2; j <= n; ++j) {
      const int b = j - 1;
      t.u(a, b) = (i == j ? 1.0 / (alpha + c.rj(j)) : 0.0) + u00 * fi * w[static_cast<std::size_t>(b)];
    }
  }
  t.v = t.u * t.m.cwiseInverse().asDiagonal();
  return t;
}

ParamSeq to_params(const ChainSpec& c) {
  if (c.alpha != 0.5) throw Error("to_params needs the alpha = 1/2 normalization");
  if (!(std::abs(c.normalization - 1.0) <= 1e-12))
    throw Error("chain is not normalized: V(0,0) would differ from 1");
  const double a = 0.5;
  const std::size_t m = c.r.size();
  std::vector<double> lambda(m), df(m), dg(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = c.r[i], s = c.s[i], q = c.q[i];
    lambda[i] = r / (q * (a + r));
    df[i] = a / (a + r);
    dg[i] = (a + (r - s)) / (a + r);
  }
  return ParamSeq::from_deficits(std::move(lambda), std::move(df), std::move(dg));
}

Eigen::MatrixXd q_matrix(const ChainSpec& c) {
  const int n = c.N;
  const double alpha = c.alpha;
  const PotentialTable t = potential_u(c);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  Kahan out;
  for (int j = 2; j <= n; ++j) {
    const int b = j - 1;
    Q(0, b) = c.sj(j) * c.qj(j) / c.rj(j);
    out.add(c.qj(j) * c.sj(j) / (alpha + c.rj(j)));
    Q(b, 0) = c.rj(j);
    Q(b, b) = -(alpha + c.rj(j));
  }
  Q(0, 0) = -(1.0 / t.u(0, 0) + out.sum);
  return Q;
}

double default_test_function(double x) { return std::cos(std::numbers::pi * x); }

IdentityReport identity_suite(const ChainSpec& c, double alpha2,
                              const std::function<double(double)>& f,
                              const std::vector<double>& alpha_grid) {
  if (alpha2 == c.alpha) throw Error("identity_suite needs a second alpha different from the chain's");
  IdentityReport rep;
  const PotentialTable ta = potential_u(c, c.alpha);
  const PotentialTable tb = potential_u(c, alpha2);
  const Eigen::VectorXd rows = c.alpha * ta.u.rowwise().sum();
  rep.row_sum_residual = (rows.array() - 1.0).abs().maxCoeff();
  rep.sup_norm = (c.alpha * ta.u.cwiseAbs().rowwise().sum()).maxCoeff();
  const Eigen::MatrixXd res = ta.u - tb.u + (c.alpha - alpha2) * (ta.u * tb.u);
  rep.resolvent_residual = res.cwiseAbs().maxCoeff();

  const int n = c.N;
  Eigen::VectorXd fv(n);
  fv(0) = f(0.0);
  for (int i = 1; i < n; ++i) fv(i) = f(1.0 / static_cast<double>(i + 1));
  rep.alpha_grid = alpha_grid;
  for (double a : alpha_grid) {
    const PotentialTable t = potential_u(c, a);
    const Eigen::VectorXd af = a * (t.u * fv);
    rep.deviation.push_back((af - fv).cwiseAbs().maxCoeff());
    rep.alpha_u00.push_back(a * t.u(0, 0));
  }
  rep.deviation_decreasing = true;
  for (std::size_t i = 1; i < rep.deviation.size(); ++i) {
    if (!(rep.deviation[i] < rep.deviation[i - 1])) rep.deviation_decreasing = false;
    rep.worst_ratio = std::max(rep.worst_ratio, rep.deviation[i] / rep.deviation[i - 1]);
  }
  return rep;
}

LeftPotential left_potential(const ParamSeq& p) {
  const int n = p.n_max();
  LeftPotential lp;
  const StructuredKernel V = build_kernel(p, KernelTag::V, 0, n - 1);
  lp.h.resize(n);
  Kahan h0;
  h0.add(1.0);
  for (int k = 2; k <= n; ++k) {
    const double hk = p.ratio_g(k);
    lp.h(k - 1) = hk;
    h0.add(-p.f(k) * hk);
  }
  lp.h(0) = h0.sum;
  if (!(lp.h(0) > 0.0))
    throw Error("left potential h(0) is not positive: sum (1-f)/lambda, sum (1-g)/lambda bounds fail");
  lp.l1 = lp.h.sum();
  const Eigen::RowVectorXd hv = lp.h.transpose() * V.entries;
  lp.residual = (hv.array() - 1.0).abs().maxCoeff();
  lp.Vtilde = extend_with_star(V);
  return lp;
}

LocalTimeReport simulate_local_times(const ChainSpec& c, int start, long long paths,
                                     std::uint64_t seed, int threads) {
  const int n = c.N;
  if (start < 0 || start >= n) throw Error("start state out of range");
  if (paths < 1) throw Error("paths must be at least 1");
  const Eigen::MatrixXd Q = q_matrix(c);
  std::vector<double> rate(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rate[static_cast<std::size_t>(i)] = -Q(i, i);
  // cumulative jump probabilities out of 0; the remainder is killing
  std::vector<double> cum(static_cast<std::size_t>(n - 1));
  double acc = 0.0;
  for (int b = 1; b < n; ++b) {
    acc += Q(0, b) / rate[0];
    cum[static_cast<std::size_t>(b - 1)] = acc;
  }
  constexpr long long kJumpCap = 10'000'000;

  std::vector<double> occupation(static_cast<std::size_t>(paths * n), 0.0);
  std::vector<long long> jumps(static_cast<std::size_t>(paths), 0);
  parallel_for(paths, resolve_threads(threads), [&](long long begin, long long end) {
    for (long long path = begin; path < end; ++path) {
      CounterRng rng(seed, static_cast<std::uint64_t>(path));
      double* L = occupation.data() + path * n;
      int x = start;
      long long count = 0;
      while (true) {
        L[x] += rng.exponential() / rate[static_cast<std::size_t>(x)];
        const double u = rng.uniform();
        if (x == 0) {
          const auto it = std::upper_bound(cum.begin(), cum.end(), u);
          if (it == cum.end()) break;  // killed
          x = static_cast<int>(it - cum.begin()) + 1;
        } else {
          if (u < Q(x, 0) / rate[static_cast<std::size_t>(x)]) x = 0;
          else break;
        }
        if (++count > kJumpCap) {
          std::ostringstream os;
          os << "path " << path << " exceeded " << kJumpCap << " jumps";
          throw Error(os.str());
        }
      }
      jumps[static_cast<std::size_t>(path)] = count;
    }
  });

  LocalTimeReport rep;
  rep.start = start;
  rep.paths = paths;
  rep.mean = Eigen::VectorXd::Zero(n);
  rep.se = Eigen::VectorXd::Zero(n);
  const double P = static_cast<double>(paths);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sum2 = Eigen::VectorXd::Zero(n);
  double tsum = 0.0, tsum2 = 0.0;
  for (long long path = 0; path < paths; ++path) {
    double total = 0.0;
    for (int y = 0; y < n; ++y) {
      const double v = occupation[static_cast<std::size_t>(path * n + y)];
      sum(y) += v;
      sum2(y) += v * v;
      total += v;
    }
    tsum += total;
    tsum2 += total * total;
    rep.max_jumps = std::max(rep.max_jumps, jumps[static_cast<std::size_t>(path)]);
  }
  rep.mean = sum / P;
  for (int y = 0; y < n; ++y) {
    const double var = std::max(0.0, (sum2(y) - P * rep.mean(y) * rep.mean(y)) / (P - 1.0));
    rep.se(y) = std::sqrt(var / P);
  }
  rep.total_mean = tsum / P;
  rep.total_se = std::sqrt(std::max(0.0, (tsum2 - P * rep.total_mean * rep.total_mean) / (P - 1.0)) / P);
  return rep;
}

}  // namespace permaseq
