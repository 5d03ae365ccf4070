#include "permaseq/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "permaseq/error.hpp"
#include "permaseq/parallel.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/sampler.hpp"

namespace permaseq {

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::sup_abs: return "sup_abs";
    case Statistic::sup_signed: return "sup_signed";
    case Statistic::inf_signed: return "inf_signed";
    case Statistic::sup_sqrt: return "sup_sqrt";
    case Statistic::inf_sqrt: return "inf_sqrt";
    case Statistic::ratio_lambda_log: return "ratio_lambda_log";
  }
  return "?";
}

Statistic statistic_from_string(const std::string& name) {
  if (name == "sup_abs") return Statistic::sup_abs;
  if (name == "sup_signed") return Statistic::sup_signed;
  if (name == "inf_signed") return Statistic::inf_signed;
  if (name == "sup_sqrt") return Statistic::sup_sqrt;
  if (name == "inf_sqrt") return Statistic::inf_sqrt;
  if (name == "ratio_lambda_log") return Statistic::ratio_lambda_log;
  throw Error("unknown statistic '" + name + "'");
}

std::string to_string(Regime r) {
  return r == Regime::X0_lt_beta ? "X0_lt_beta" : "X0_ge_beta";
}

WindowSampler WindowSampler::from_rep(const GaussianRep& rep) {
  WindowSampler w;
  w.states_ = rep.index_map;
  w.lambda_ = rep.lambda;
  w.h_ = rep.h;
  w.a_ = rep.a;
  w.precompute();
  return w;
}

WindowSampler WindowSampler::ubar(const ParamSeq& p, int l, int n) {
  if (l < 0 || n < 1 || l + n > p.n_max()) throw Error("window does not fit the parameter range");
  WindowSampler w;
  const std::size_t d = static_cast<std::size_t>(n);
  w.states_.resize(d);
  w.lambda_.resize(d);
  w.h_.assign(d, 1.0);
  w.a_.assign(d, 1.0);
  w.states_[0] = 0;
  w.lambda_[0] = 0.0;
  for (std::size_t i = 1; i < d; ++i) {
    const int j = l + 1 + static_cast<int>(i);
    w.states_[i] = j;
    w.lambda_[i] = p.lambda(j);
  }
  w.precompute();
  return w;
}

WindowSampler WindowSampler::from_arrays(std::vector<int> states, std::vector<double> lambda,
                                         std::vector<double> h, std::vector<double> a) {
  if (states.empty() || lambda.size() != states.size() || h.size() != states.size() ||
      a.size() != states.size())
    throw Error("window arrays must be non-empty and of equal length");
  WindowSampler w;
  w.states_ = std::move(states);
  w.lambda_ = std::move(lambda);
  w.h_ = std::move(h);
  w.a_ = std::move(a);
  w.precompute();
  return w;
}

void WindowSampler::precompute() {
  const std::size_t d = states_.size();
  sqrt_lambda_.resize(d);
  inv_sqrt_norm_.assign(d, 0.0);
  inv_norm_.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    sqrt_lambda_[i] = std::sqrt(lambda_[i]);
    if (i == 0) continue;
    const double norm = lambda_[i] * std::log(static_cast<double>(states_[i]));
    if (norm >= 1e-12) {
      inv_sqrt_norm_[i] = 1.0 / std::sqrt(norm);
      inv_norm_[i] = 1.0 / norm;
    }
  }
}

void fill_predictions(ReplicaResult& r, double beta) {
  if (std::isinf(beta) || std::isnan(beta)) {
    r.predicted_sup = std::numeric_limits<double>::quiet_NaN();
    r.predicted_inf = std::numeric_limits<double>::quiet_NaN();
    r.regime = Regime::X0_lt_beta;
    return;
  }
  const double sb = std::sqrt(beta);
  const double sx = std::sqrt(r.X0);
  r.predicted_sup = sb + 2.0 * sx;
  if (r.X0 < beta) {
    r.regime = Regime::X0_lt_beta;
    r.predicted_inf = -r.X0 / sb;
  } else {
    r.regime = Regime::X0_ge_beta;
    r.predicted_inf = sb - 2.0 * sx;
  }
}

ReplicaResult window_statistics(const WindowSampler& w, int k, std::uint64_t seed,
                                long long replica, double beta) {
  if (k < 1) throw Error("k must be at least 1");
  CounterRng rng(seed, static_cast<std::uint64_t>(replica));
  std::vector<double> em1(static_cast<std::size_t>(k)), e0(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    em1[static_cast<std::size_t>(c)] = rng.normal();
    e0[static_cast<std::size_t>(c)] = rng.normal();
  }
  ReplicaResult r;
  r.replica = replica;
  double x0 = 0.0;
  for (int c = 0; c < k; ++c) {
    const double xi = w.h_[0] * em1[static_cast<std::size_t>(c)] + w.a_[0] * e0[static_cast<std::size_t>(c)];
    x0 += 0.5 * xi * xi;
  }
  r.X0 = x0;
  const double sx0 = std::sqrt(x0);
  double sup_signed = -std::numeric_limits<double>::infinity();
  double inf_signed = std::numeric_limits<double>::infinity();
  double sup_abs = 0.0;
  double sup_sqrt = -std::numeric_limits<double>::infinity();
  double inf_sqrt = std::numeric_limits<double>::infinity();
  double max_ratio = 0.0, bridge = 0.0;
  int used = 0;
  const std::size_t d = w.states_.size();
  for (std::size_t i = 1; i < d; ++i) {
    double x = 0.0;
    for (int c = 0; c < k; ++c) {
      const std::size_t u = static_cast<std::size_t>(c);
      const double xi = w.sqrt_lambda_[i] * rng.normal() + w.h_[i] * em1[u] + w.a_[i] * e0[u];
      x += 0.5 * xi * xi;
    }
    const double s = w.inv_sqrt_norm_[i];
    if (s == 0.0) continue;
    ++used;
    const double diff = x - x0;
    const double sx = std::sqrt(x);
    const double dsig = diff * s;
    const double dsq = (sx - sx0) * s;
    sup_signed = std::max(sup_signed, dsig);
    inf_signed = std::min(inf_signed, dsig);
    sup_abs = std::max(sup_abs, std::abs(dsig));
    sup_sqrt = std::max(sup_sqrt, dsq);
    inf_sqrt = std::min(inf_sqrt, dsq);
    max_ratio = std::max(max_ratio, x * w.inv_norm_[i]);
    const double scale = x + x0;
    if (scale > 0.0) bridge = std::max(bridge, std::abs(diff - (sx - sx0) * (sx + sx0)) / scale);
  }
  if (used == 0) {
    sup_signed = inf_signed = sup_sqrt = inf_sqrt = 0.0;
  }
  r.sup_signed = sup_signed;
  r.inf_signed = inf_signed;
  r.sup_abs = sup_abs;
  r.sup_sqrt = sup_sqrt;
  r.inf_sqrt = inf_sqrt;
  r.max_ratio = max_ratio;
  r.bridge_residual = bridge;
  r.used = used;
  fill_predictions(r, beta);
  return r;
}

namespace {

ExperimentConfig config_unchecked(const nlohmann::json& j) {
  ExperimentConfig c;
  c.params = j.at("params");
  c.k = j.value("k", c.k);
  c.l = j.value("l", c.l);
  c.n_max = j.value("n_max", c.n_max);
  c.replicas = j.value("replicas", c.replicas);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.kernel = j.value("kernel", c.kernel);
  c.statistic = statistic_from_string(j.value("statistic", to_string(c.statistic)));
  c.slack = j.value("slack", c.slack);
  if (j.contains("ratio_window")) {
    const auto w = j.at("ratio_window").get<std::vector<double>>();
    if (w.size() != 2) throw Error("ratio_window must have two entries");
    c.ratio_lo = w[0];
    c.ratio_hi = w[1];
  }
  c.out = j.value("out", c.out);
  if (c.k < 1) throw Error("k must be at least 1");
  if (c.replicas < 1) throw Error("replicas must be at least 1");
  if (c.l < 0) throw Error("l must be nonnegative");
  if (c.kernel != "gaussian_rep" && c.kernel != "ubar")
    throw Error("kernel must be gaussian_rep or ubar");
  return c;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  try {
    return config_unchecked(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["params"] = c.params;
  j["k"] = c.k;
  j["l"] = c.l;
  j["n_max"] = c.n_max;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["kernel"] = c.kernel;
  j["statistic"] = to_string(c.statistic);
  j["slack"] = c.slack;
  j["ratio_window"] = {c.ratio_lo, c.ratio_hi};
  j["out"] = c.out;
  return j;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

ExperimentResult limit_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ParamSeq p = from_json(cfg.params);
  const int top = cfg.n_max > 0 ? cfg.n_max : p.n_max();
  if (top > p.n_max()) throw Error("window end exceeds the parameter range");
  const int n = top - cfg.l;
  if (n < 2) throw Error("window must contain at least one state 1/j");
  const WindowSampler w = cfg.kernel == "ubar" ? WindowSampler::ubar(p, cfg.l, n)
                                               : WindowSampler::from_rep(build_rep(p, cfg.l, n));
  const double beta = p.beta_limit();

  ExperimentResult res;
  res.rows.resize(static_cast<std::size_t>(cfg.replicas));
  parallel_for(cfg.replicas, resolve_threads(cfg.threads), [&](long long begin, long long end) {
    for (long long i = begin; i < end; ++i)
      res.rows[static_cast<std::size_t>(i)] = window_statistics(w, cfg.k, cfg.seed, i, beta);
  });

  ExperimentSummary& s = res.summary;
  s.replicas = cfg.replicas;
  s.beta = beta;
  s.statistic = cfg.statistic;
  std::vector<double> sup_signed, sup_abs, inf_signed, sup_sqrt, inf_sqrt, pred_sup, pred_inf,
      pred_inf_sqrt;
  int exceed = 0, in_window = 0;
  double sum_ratio = 0.0;
  for (const auto& r : res.rows) {
    sup_signed.push_back(r.sup_signed);
    sup_abs.push_back(r.sup_abs);
    inf_signed.push_back(r.inf_signed);
    sup_sqrt.push_back(r.sup_sqrt);
    inf_sqrt.push_back(r.inf_sqrt);
    pred_sup.push_back(r.predicted_sup);
    pred_inf.push_back(r.predicted_inf);
    pred_inf_sqrt.push_back(-std::min(std::sqrt(r.X0 / beta), 1.0));
    if (r.sup_signed > r.predicted_sup + cfg.slack) ++exceed;
    if (r.max_ratio >= cfg.ratio_lo && r.max_ratio <= cfg.ratio_hi) ++in_window;
    sum_ratio += r.sup_signed / r.predicted_sup;
    const double err = std::abs(r.inf_signed - r.predicted_inf);
    if (r.regime == Regime::X0_lt_beta) {
      ++s.count_lt;
      s.inf_mae_lt += err;
    } else {
      ++s.count_ge;
      s.inf_mae_ge += err;
    }
    s.max_bridge_residual = std::max(s.max_bridge_residual, r.bridge_residual);
  }
  const double R = static_cast<double>(cfg.replicas);
  if (s.count_lt > 0) s.inf_mae_lt /= s.count_lt;
  if (s.count_ge > 0) s.inf_mae_ge /= s.count_ge;
  s.corr_sup_signed = pearson(sup_signed, pred_sup);
  s.corr_sup_abs = pearson(sup_abs, pred_sup);
  s.corr_inf = pearson(inf_signed, pred_inf);
  s.exceedance = exceed / R;
  s.ratio_fraction = in_window / R;
  s.mean_sup_over_pred = sum_ratio / R;
  switch (cfg.statistic) {
    case Statistic::sup_abs: s.corr_primary = s.corr_sup_abs; break;
    case Statistic::sup_signed: s.corr_primary = s.corr_sup_signed; break;
    case Statistic::inf_signed: s.corr_primary = s.corr_inf; break;
    case Statistic::inf_sqrt: s.corr_primary = pearson(inf_sqrt, pred_inf_sqrt); break;
    case Statistic::sup_sqrt:
    case Statistic::ratio_lambda_log:
      s.corr_primary = std::numeric_limits<double>::quiet_NaN();
      break;
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

nlohmann::json to_json(const ExperimentSummary& s) {
  nlohmann::json j;
  j["replicas"] = s.replicas;
  j["beta"] = std::isfinite(s.beta) ? nlohmann::json(s.beta) : nlohmann::json("inf");
  j["statistic"] = to_string(s.statistic);
  j["corr_sup_signed"] = s.corr_sup_signed;
  j["corr_sup_abs"] = s.corr_sup_abs;
  j["corr_inf"] = s.corr_inf;
  j["corr_primary"] = s.corr_primary;
  j["exceedance"] = s.exceedance;
  j["count_X0_lt_beta"] = s.count_lt;
  j["count_X0_ge_beta"] = s.count_ge;
  j["inf_mae_X0_lt_beta"] = s.inf_mae_lt;
  j["inf_mae_X0_ge_beta"] = s.inf_mae_ge;
  j["ratio_fraction"] = s.ratio_fraction;
  j["mean_sup_over_pred"] = s.mean_sup_over_pred;
  j["max_bridge_residual"] = s.max_bridge_residual;
  j["seconds"] = s.seconds;
  return j;
}

std::string results_csv(const std::vector<ReplicaResult>& rows) {
  std::string out =
      "replica,X0,sup_abs,sup_signed,inf_signed,sup_sqrt,inf_sqrt,predicted_sup,predicted_inf,"
      "regime,max_ratio\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s,%.17g\n",
                  r.replica, r.X0, r.sup_abs, r.sup_signed, r.inf_signed, r.sup_sqrt, r.inf_sqrt,
                  r.predicted_sup, r.predicted_inf, to_string(r.regime).c_str(), r.max_ratio);
    out += buf;
  }
  return out;
}

}  // namespace permaseq
