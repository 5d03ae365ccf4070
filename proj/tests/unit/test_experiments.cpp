#include <cmath>
#include <limits>

#include <doctest.h>

#include "common.hpp"
#include "permaseq/error.hpp"
#include "permaseq/experiments.hpp"
#include "permaseq/io.hpp"

using namespace permaseq;

namespace {

ExperimentConfig small_config(double beta_family) {
  ExperimentConfig c;
  c.params = {{"family", "beta"}, {"beta", beta_family}, {"eps_f", 0.5}, {"eps_g", 0.25}, {"n_max", 3000}};
  c.l = 100;
  c.replicas = 12;
  c.seed = 42;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("names") {
  for (auto s : {Statistic::sup_abs, Statistic::sup_signed, Statistic::inf_signed, Statistic::sup_sqrt,
                 Statistic::inf_sqrt, Statistic::ratio_lambda_log})
    CHECK(statistic_from_string(to_string(s)) == s);
  CHECK_THROWS_AS(statistic_from_string("median"), Error);
}

TEST_CASE("predictions") {
  ReplicaResult r;
  r.X0 = 4.0;
  fill_predictions(r, 0.0);
  CHECK(r.predicted_sup == doctest::Approx(4.0));
  CHECK(r.predicted_inf == doctest::Approx(-4.0));
  CHECK(r.regime == Regime::X0_ge_beta);
  fill_predictions(r, 9.0);
  CHECK(r.regime == Regime::X0_lt_beta);
  CHECK(r.predicted_sup == doctest::Approx(7.0));
  CHECK(r.predicted_inf == doctest::Approx(-4.0 / 3.0));
  fill_predictions(r, 1.0);
  CHECK(r.predicted_inf == doctest::Approx(-3.0));
  fill_predictions(r, std::numeric_limits<double>::infinity());
  CHECK(std::isnan(r.predicted_sup));
  CHECK(std::isnan(r.predicted_inf));
}

TEST_CASE("degenerate window") {
  const WindowSampler w = WindowSampler::from_arrays({0, 2, 3}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0},
                                                     {1.0, 1.0, 1.0});
  const ReplicaResult r = window_statistics(w, 1, 1, 0, 0.0);
  CHECK(r.used == 0);
  CHECK(r.sup_abs == 0.0);
  CHECK(r.sup_signed == 0.0);
  CHECK(r.max_ratio == 0.0);
  CHECK(r.X0 > 0.0);
}

TEST_CASE("replica statistics") {
  const ParamSeq p = make_param_family(Family::beta, 1.0, 0.5, 0.25, 5000);
  const WindowSampler w = WindowSampler::from_rep(build_rep(p, 100, 2000));
  for (long long i = 0; i < 5; ++i) {
    const ReplicaResult r = window_statistics(w, 2, 3, i, 0.4342944819032518);
    CHECK(r.used == 1999);
    CHECK(r.bridge_residual <= 1e-12);
    CHECK(r.sup_abs == doctest::Approx(std::max(r.sup_signed, -r.inf_signed)));
    CHECK(r.inf_signed <= r.sup_signed);
    CHECK(r.inf_sqrt <= r.sup_sqrt);
    CHECK(r.max_ratio > 0.0);
    const ReplicaResult again = window_statistics(w, 2, 3, i, 0.4342944819032518);
    CHECK(again.sup_signed == r.sup_signed);
  }
}

TEST_CASE("Ubar window has X0 with mean k and variance 2k") {
  const ParamSeq p = make_param_family(Family::beta, 1.0, 0.5, 0.25, 500);
  const WindowSampler w = WindowSampler::ubar(p, 10, 50);
  const int N = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = window_statistics(w, 1, 9, i, 0.0).X0;
    s += x;
    s2 += x * x;
  }
  const double mean = s / N;
  const double var = s2 / N - mean * mean;
  // Var xi_0 = 2, so X0 = xi_0^2 / 2 has mean 1 and variance 2
  CHECK(std::abs(mean - 1.0) <= 4.0 * std::sqrt(2.0 / N));
  CHECK(var == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("experiment is independent of thread count") {
  ExperimentConfig c = small_config(1.0);
  const ExperimentResult a = limit_experiment(c);
  c.threads = 3;
  const ExperimentResult b = limit_experiment(c);
  REQUIRE(a.rows.size() == 12);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].X0 == b.rows[i].X0);
    CHECK(a.rows[i].sup_signed == b.rows[i].sup_signed);
  }
  CHECK(a.summary.count_lt + a.summary.count_ge == 12);
  CHECK(a.summary.max_bridge_residual <= 1e-12);
  for (const auto& r : a.rows) {
    const double beta = a.summary.beta;
    CHECK((r.regime == Regime::X0_lt_beta) == (r.X0 < beta));
  }
  const CsvTable t = parse_csv(results_csv(a.rows));
  CHECK(t.rows.size() == 12);
  CHECK(t.header.front() == "replica");
  CHECK(t.column("max_ratio") >= 0);
  CHECK(t.numeric("X0")[3] == a.rows[3].X0);
  const auto js = to_json(a.summary);
  CHECK(js.at("replicas").get<int>() == 12);
}

TEST_CASE("beta infinity summary") {
  ExperimentConfig c = small_config(0.5);
  c.params = {{"family", "diverging"}, {"gamma", 0.5}, {"eps_f", 0.5}, {"eps_g", 0.25}, {"n_max", 3000}};
  c.replicas = 3;
  const ExperimentResult r = limit_experiment(c);
  CHECK(std::isinf(r.summary.beta));
  CHECK(to_json(r.summary).at("beta").get<std::string>() == "inf");
}

TEST_CASE("config validation") {
  const nlohmann::json base = {
      {"params", {{"family", "beta"}, {"beta", 1.0}, {"n_max", 2000}}}, {"l", 10}, {"replicas", 4}};
  const ExperimentConfig c = experiment_config_from_json(base);
  CHECK(c.l == 10);
  CHECK(c.kernel == "gaussian_rep");
  auto bad = base;
  bad["replicas"] = 0;
  CHECK_THROWS_AS(experiment_config_from_json(bad), Error);
  bad = base;
  bad["statistic"] = "nope";
  CHECK_THROWS_AS(experiment_config_from_json(bad), Error);
  bad = base;
  bad["kernel"] = "K";
  CHECK_THROWS_AS(experiment_config_from_json(bad), Error);
  bad = base;
  bad.erase("params");
  CHECK_THROWS_AS(experiment_config_from_json(bad), Error);
  auto win = base;
  win["ratio_window"] = {0.4, 1.2};
  CHECK(experiment_config_from_json(win).ratio_hi == 1.2);
  const ExperimentConfig back = experiment_config_from_json(to_json(c));
  CHECK(back.l == c.l);
  CHECK(back.replicas == c.replicas);
}

TEST_CASE("pearson") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(std::isnan(pearson({1, 1, 1}, {1, 2, 3})));
}

}
