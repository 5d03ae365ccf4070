#include "permaseq/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "permaseq/error.hpp"
#include "permaseq/rng.hpp"

namespace permaseq {

std::string to_string(Family family) {
  switch (family) {
    case Family::beta: return "beta";
    case Family::vanishing: return "vanishing";
    case Family::diverging: return "diverging";
    case Family::explicit_seq: return "explicit";
  }
  return "explicit";
}

Family family_from_string(const std::string& name) {
  if (name == "beta" || name == "beta_family") return Family::beta;
  if (name == "vanishing") return Family::vanishing;
  if (name == "diverging") return Family::diverging;
  if (name == "explicit") return Family::explicit_seq;
  throw Error("unknown parameter family '" + name + "'");
}

double ParamSeq::beta_limit() const {
  switch (family_) {
    case Family::beta: return parameter_;
    case Family::vanishing: return 0.0;
    case Family::diverging: return std::numeric_limits<double>::infinity();
    case Family::explicit_seq: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double ParamSeq::ratio_f(int j) const { return std::exp(log_df_[idx(j)] - log_lambda_[idx(j)]); }
double ParamSeq::ratio_g(int j) const { return std::exp(log_dg_[idx(j)] - log_lambda_[idx(j)]); }

void ParamSeq::fill_derived() {
  const std::size_t m = lambda_.size();
  log_lambda_.resize(m);
  for (std::size_t i = 0; i < m; ++i) log_lambda_[i] = std::log(lambda_[i]);
}

namespace {

void validate_explicit(const std::vector<double>& lambda, const std::vector<double>& df,
                       const std::vector<double>& dg) {
  if (lambda.size() != df.size() || lambda.size() != dg.size())
    throw Error("lambda, f and g must have equal length");
  if (lambda.size() < 2) throw Error("need at least two indices (n_max >= 3)");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const int j = static_cast<int>(i) + 2;
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i]))
      throw Error("lambda_" + std::to_string(j) + " must be positive and finite");
    if (!(df[i] > 0.0))
      throw Error("1 - f_" + std::to_string(j) + " is not positive (underflow or f >= 1)");
    if (!(dg[i] > 0.0))
      throw Error("1 - g_" + std::to_string(j) + " is not positive (underflow or g >= 1)");
    if (!(df[i] < 1.0) || !(dg[i] < 1.0))
      throw Error("f_" + std::to_string(j) + " and g_" + std::to_string(j) + " must be positive");
  }
}

}  // namespace

ParamSeq ParamSeq::from_sequences(std::vector<double> lambda, std::vector<double> f,
                                  std::vector<double> g) {
  if (f.size() != lambda.size() || g.size() != lambda.size())
    throw Error("lambda, f and g must have equal length");
  std::vector<double> df(f.size()), dg(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    df[i] = 1.0 - f[i];
    dg[i] = 1.0 - g[i];
  }
  validate_explicit(lambda, df, dg);
  ParamSeq p;
  p.n_max_ = static_cast<int>(lambda.size()) + 1;
  p.lambda_ = std::move(lambda);
  p.f_ = std::move(f);
  p.g_ = std::move(g);
  p.log_df_.resize(df.size());
  p.log_dg_.resize(dg.size());
  for (std::size_t i = 0; i < df.size(); ++i) {
    p.log_df_[i] = std::log(df[i]);
    p.log_dg_[i] = std::log(dg[i]);
  }
  p.df_ = std::move(df);
  p.dg_ = std::move(dg);
  p.fill_derived();
  return p;
}

ParamSeq ParamSeq::from_deficits(std::vector<double> lambda, std::vector<double> deficit_f,
                                 std::vector<double> deficit_g) {
  validate_explicit(lambda, deficit_f, deficit_g);
  ParamSeq p;
  p.n_max_ = static_cast<int>(lambda.size()) + 1;
  const std::size_t m = lambda.size();
  p.f_.resize(m);
  p.g_.resize(m);
  p.log_df_.resize(m);
  p.log_dg_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    p.f_[i] = 1.0 - deficit_f[i];
    p.g_[i] = 1.0 - deficit_g[i];
    p.log_df_[i] = std::log(deficit_f[i]);
    p.log_dg_[i] = std::log(deficit_g[i]);
  }
  p.lambda_ = std::move(lambda);
  p.df_ = std::move(deficit_f);
  p.dg_ = std::move(deficit_g);
  p.fill_derived();
  return p;
}

ParamSeq make_param_family(Family family, double parameter, double eps_f, double eps_g,
                           int n_max) {
  if (n_max < 3) throw Error("n_max must be at least 3");
  if (!(eps_f > 0.0 && eps_f < 1.0) || !(eps_g > 0.0 && eps_g < 1.0))
    throw Error("eps_f and eps_g must lie in (0, 1)");
  if (eps_f == eps_g) throw Error("eps_f and eps_g must differ");
  switch (family) {
    case Family::beta:
      if (!(parameter > 0.0)) throw Error("beta must be positive");
      break;
    case Family::vanishing:
      if (!(parameter > 1.0)) throw Error("vanishing family needs gamma > 1");
      break;
    case Family::diverging:
      if (!(parameter > 0.0 && parameter < 1.0))
        throw Error("diverging family needs 0 < gamma < 1");
      break;
    case Family::explicit_seq:
      throw Error("explicit sequences are built with ParamSeq::from_sequences");
  }

  ParamSeq p;
  p.n_max_ = n_max;
  p.family_ = family;
  p.parameter_ = parameter;
  p.eps_f_ = eps_f;
  p.eps_g_ = eps_g;
  const std::size_t m = static_cast<std::size_t>(n_max - 1);
  p.lambda_.resize(m);
  p.log_lambda_.resize(m);
  p.f_.resize(m);
  p.g_.resize(m);
  p.df_.resize(m);
  p.dg_.resize(m);
  p.log_df_.resize(m);
  p.log_dg_.resize(m);

  const double log_eps_f = std::log(eps_f);
  const double log_eps_g = std::log(eps_g);
  for (std::size_t i = 0; i < m; ++i) {
    const int j = static_cast<int>(i) + 2;
    const double lj = std::log(static_cast<double>(j));
    double log_lambda = 0.0;
    if (family == Family::beta) {
      log_lambda = std::log(parameter) - std::log(lj);
    } else {
      log_lambda = -parameter * std::log(lj);
    }
    p.log_lambda_[i] = log_lambda;
    p.lambda_[i] = std::exp(log_lambda);
    const double tail = log_lambda - (j + 1) * std::numbers::ln2;
    p.log_df_[i] = log_eps_f + tail;
    p.log_dg_[i] = log_eps_g + tail;
    if (!std::isfinite(p.log_df_[i]) || !std::isfinite(p.log_dg_[i]))
      throw Error("deficit underflow at j = " + std::to_string(j));
    p.df_[i] = std::exp(p.log_df_[i]);
    p.dg_[i] = std::exp(p.log_dg_[i]);
    p.f_[i] = 1.0 - p.df_[i];
    p.g_[i] = 1.0 - p.dg_[i];
  }
  const AdmissibilityReport rep = check_admissibility(p);
  if (!rep.verdict) {
    std::ostringstream os;
    os << "non-admissible parameters: sum (1-f)/lambda = " << rep.sum_f
       << ", sum (1-g)/lambda = " << rep.sum_g;
    throw Error(os.str());
  }
  return p;
}

ParamSeq make_param_family(Family family, double parameter, double epsilon, int n_max) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error("epsilon must lie in (0, 1)");
  return make_param_family(family, parameter, epsilon, epsilon / 2.0, n_max);
}

ParamSeq random_admissible(std::uint64_t seed, int n_max) {
  if (n_max < 3) throw Error("n_max must be at least 3");
  CounterRng rng(seed, 0x5eed);
  const double beta = 0.5 + 1.5 * rng.uniform();
  const double eps_f = 0.2 + 0.75 * rng.uniform();
  const double eps_g = 0.2 + 0.75 * rng.uniform();
  // sum_{j>=2} 1/j^2 = pi^2/6 - 1 < 0.65, so the scaled sums stay below eps < 1
  constexpr double scale = 1.5;
  const std::size_t m = static_cast<std::size_t>(n_max - 1);
  std::vector<double> lambda(m), df(m), dg(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double j = static_cast<double>(i + 2);
    lambda[i] = beta * (1.0 + 0.5 * rng.uniform()) / std::log(j);
    const double vf = 0.05 + 0.95 * rng.uniform();
    const double vg = 0.05 + 0.95 * rng.uniform();
    df[i] = std::min(0.5, scale * eps_f * lambda[i] * vf / (j * j));
    dg[i] = std::min(0.5, scale * eps_g * lambda[i] * vg / (j * j));
  }
  return ParamSeq::from_deficits(std::move(lambda), std::move(df), std::move(dg));
}

AdmissibilityReport check_admissibility(const ParamSeq& p) {
  AdmissibilityReport rep;
  double sf = 0.0, sg = 0.0, cf = 0.0, cg = 0.0;  // Kahan sums
  bool nonincreasing = true;
  for (int j = 2; j <= p.n_max(); ++j) {
    const double yf = p.ratio_f(j) - cf;
    const double tf = sf + yf;
    cf = (tf - sf) - yf;
    sf = tf;
    const double yg = p.ratio_g(j) - cg;
    const double tg = sg + yg;
    cg = (tg - sg) - yg;
    sg = tg;
    if (j > 2 && p.lambda(j) > p.lambda(j - 1)) nonincreasing = false;
  }
  rep.sum_f = sf;
  rep.sum_g = sg;
  rep.verdict = sf < 1.0 && sg < 1.0;
  const int n = p.n_max();
  rep.lambda_last = p.lambda(n);
  rep.lambda_log_last = p.lambda(n) * std::log(static_cast<double>(n));
  const int lo = std::min(n, std::max(100, n / 10));
  rep.lambda_log_min_tail = std::numeric_limits<double>::infinity();
  rep.lambda_log_max_tail = -std::numeric_limits<double>::infinity();
  for (int j = lo; j <= n; ++j) {
    const double v = p.lambda(j) * std::log(static_cast<double>(j));
    rep.lambda_log_min_tail = std::min(rep.lambda_log_min_tail, v);
    rep.lambda_log_max_tail = std::max(rep.lambda_log_max_tail, v);
  }
  rep.lambda_nonincreasing = nonincreasing;
  return rep;
}

nlohmann::json to_json(const ParamSeq& p) {
  nlohmann::json j;
  j["family"] = to_string(p.family());
  switch (p.family()) {
    case Family::beta:
      j["beta"] = p.parameter();
      break;
    case Family::vanishing:
    case Family::diverging:
      j["gamma"] = p.parameter();
      break;
    case Family::explicit_seq: {
      std::vector<double> lambda, df, dg;
      for (int i = 2; i <= p.n_max(); ++i) {
        lambda.push_back(p.lambda(i));
        df.push_back(p.deficit_f(i));
        dg.push_back(p.deficit_g(i));
      }
      j["lambda"] = lambda;
      j["deficit_f"] = df;
      j["deficit_g"] = dg;
      j["n_max"] = p.n_max();
      return j;
    }
  }
  j["eps_f"] = p.eps_f();
  j["eps_g"] = p.eps_g();
  j["n_max"] = p.n_max();
  return j;
}

namespace {

ParamSeq from_json_unchecked(const nlohmann::json& j) {
  const Family family = family_from_string(j.at("family").get<std::string>());
  if (family == Family::explicit_seq) {
    auto lambda = j.at("lambda").get<std::vector<double>>();
    if (j.contains("f")) {
      return ParamSeq::from_sequences(std::move(lambda), j.at("f").get<std::vector<double>>(),
                                      j.at("g").get<std::vector<double>>());
    }
    return ParamSeq::from_deficits(std::move(lambda), j.at("deficit_f").get<std::vector<double>>(),
                                   j.at("deficit_g").get<std::vector<double>>());
  }
  const double parameter =
      family == Family::beta ? j.at("beta").get<double>() : j.at("gamma").get<double>();
  const int n_max = j.at("n_max").get<int>();
  if (j.contains("eps_f") || j.contains("eps_g")) {
    return make_param_family(family, parameter, j.at("eps_f").get<double>(),
                             j.at("eps_g").get<double>(), n_max);
  }
  return make_param_family(family, parameter, j.value("epsilon", 0.5), n_max);
}

}  // namespace

ParamSeq from_json(const nlohmann::json& j) {
  try {
    return from_json_unchecked(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("params: ") + e.what());
  }
}

}  // namespace permaseq
