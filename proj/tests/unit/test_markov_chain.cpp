#include <cmath>

#include <doctest.h>

#include "common.hpp"
#include "permaseq/error.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/markov_chain.hpp"

using namespace permaseq;
using testutil::max_abs;

TEST_SUITE("markov_chain") {

TEST_CASE("normalization constants") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 50);
  CHECK(c.j0 == 2);
  CHECK(c.q_const == doctest::Approx(1.8401915812389091083).epsilon(1e-11));
  CHECK(std::abs(c.normalization - 1.0) <= 1e-12);
  CHECK(c.sum_q_over_r == doctest::Approx(1.1268467499157520766).epsilon(1e-11));
  CHECK(c.sum_q_over_r < 2.0);
  CHECK(c.sum_q_over_r_gap < 2.0);
  CHECK(c.inf_s_ratio > 0.75);
  for (int j = 2; j <= 50; ++j) CHECK(c.sj(j) == doctest::Approx(c.rj(j) - 0.5));
  const ChainSpec c8 = normalize_reuter(0.5, "j_squared", "log", 8);
  CHECK(c8.q_const == doctest::Approx(3.2309013884502849983).epsilon(1e-11));
}

TEST_CASE("bound violations are rejected") {
  // inf s/(1/2 + r) > 3/4 needs delta < r_2/4 - 3/8 = 0.625 for r = j^2
  CHECK_THROWS_WITH_AS(normalize_reuter(0.7, "j_squared", "log", 50), doctest::Contains("3/4"), Error);
  CHECK_THROWS_AS(normalize_reuter(1.2, "j_squared", "log", 50), Error);
  CHECK_THROWS_AS(normalize_reuter(0.5, "j_fourth", "log", 50), Error);
  CHECK_THROWS_AS(normalize_reuter(0.5, "j_squared", "log", 2), Error);
  CHECK_NOTHROW(normalize_reuter(0.9, "j_cubed", "sqrt_log", 30));
}

TEST_CASE("potential values") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 50);
  const PotentialTable t = potential_u(c);
  CHECK(t.u(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(t.u(0, 1) == doctest::Approx(0.35781502968534343773).epsilon(1e-12));
  CHECK(t.u(1, 1) == doctest::Approx(0.54028002638697194465).epsilon(1e-12));
  CHECK(t.u(2, 1) == doctest::Approx(0.33898265970190430943).epsilon(1e-12));
  CHECK((t.u.array() >= 0.0).all());
  for (int i = 2; i <= 50; ++i)
    CHECK(t.u(i - 1, 0) == doctest::Approx(t.u(0, 0) * c.rj(i) / (0.5 + c.rj(i))).epsilon(1e-14));
  CHECK(t.m(0) == 1.0);
  CHECK(t.m(3) == doctest::Approx(c.qj(4) / c.rj(4)));
  CHECK(max_abs(t.v.col(3) * t.m(3) - t.u.col(3)) <= 1e-15);
}

TEST_CASE("Q matrix") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 50);
  const Eigen::MatrixXd Q = q_matrix(c);
  for (int j = 2; j <= 50; ++j) {
    CHECK(Q(j - 1, j - 1) == doctest::Approx(-(0.5 + c.rj(j))));
    CHECK(Q(j - 1, 0) == doctest::Approx(c.rj(j)));
    for (int k = 2; k <= 50; ++k)
      if (k != j) REQUIRE(Q(j - 1, k - 1) == 0.0);
  }
  CHECK((Q.rowwise().sum().array() + 0.5).abs().maxCoeff() <= 1e-10);
  CHECK(max_abs(-Q.inverse() - potential_u(c).u) <= 1e-9);
}

TEST_CASE("identity suite") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 50);
  const IdentityReport r = identity_suite(c, 1.25, default_test_function);
  CHECK(r.row_sum_residual <= 1e-10);
  CHECK(r.sup_norm <= 1.0 + 1e-10);
  CHECK(r.resolvent_residual <= 1e-9);
  CHECK(r.deviation_decreasing);
  CHECK(r.worst_ratio <= 0.15);
  REQUIRE(r.alpha_u00.size() == 3);
  CHECK(r.alpha_u00[0] < r.alpha_u00[1]);
  CHECK(r.alpha_u00[1] < r.alpha_u00[2]);
  CHECK(r.alpha_u00[2] < 1.0);
  CHECK_THROWS_AS(identity_suite(c, 0.5, default_test_function), Error);
}

TEST_CASE("induced parameters and V") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 50);
  const ParamSeq p = to_params(c);
  for (int j = 2; j <= 50; ++j) {
    REQUIRE(p.f(j) > 0.0);
    REQUIRE(p.f(j) < 1.0);
    REQUIRE(p.g(j) > 0.0);
    REQUIRE(p.g(j) < 1.0);
    REQUIRE(p.lambda(j) > 0.0);
    if (j > 2) CHECK(p.f(j) > p.f(j - 1));
  }
  CHECK(check_admissibility(p).sum_f < 1.0);
  const auto V = build_kernel(p, KernelTag::V, 0, 49);
  CHECK(V.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(max_abs(V.entries - potential_u(c).v) <= 1e-10);
  ChainSpec raw = c;
  raw.normalization = 1.5;
  CHECK_THROWS_AS(to_params(raw), Error);
}

TEST_CASE("left potential") {
  const ChainSpec good = normalize_reuter(0.25, "j_squared", "log", 50);
  const LeftPotential lp = left_potential(to_params(good));
  CHECK(lp.residual <= 1e-10);
  CHECK(lp.h(0) == doctest::Approx(0.22780181876474338659).epsilon(1e-11));
  CHECK(lp.l1 == doctest::Approx(1.0443963624705132268).epsilon(1e-12));
  CHECK(lp.l1 > 1.0);
  CHECK(lp.l1 < 2.0);
  const int d = lp.Vtilde.dim();
  CHECK(lp.Vtilde.entries.row(d - 1).isOnes());
  CHECK(lp.Vtilde.entries.col(d - 1).isOnes());
  const auto U = build_kernel(to_params(good), KernelTag::U, 0, 49);
  CHECK(max_abs(lp.Vtilde.entries.topLeftCorner(d - 1, d - 1) - U.entries) == 0.0);
  // delta = 1/2 normalizes, but sum (1-g)/lambda = sum q/r > 1 and h(0) < 0
  const ChainSpec wide = normalize_reuter(0.5, "j_squared", "log", 50);
  CHECK_THROWS_AS(left_potential(to_params(wide)), Error);
}

TEST_CASE("local times") {
  const ChainSpec c = normalize_reuter(0.5, "j_squared", "log", 8);
  const PotentialTable t = potential_u(c);
  const LocalTimeReport a = simulate_local_times(c, 2, 20000, 5, 1);
  for (int y = 0; y < 8; ++y) CHECK(std::abs(a.mean(y) - t.u(2, y)) <= 4.0 * a.se(y));
  CHECK(std::abs(a.total_mean - 2.0) <= 4.0 * a.total_se);
  const LocalTimeReport b = simulate_local_times(c, 2, 20000, 5, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.se == b.se);
  const LocalTimeReport big = simulate_local_times(c, 2, 80000, 6, 1);
  CHECK(big.total_se / a.total_se == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(simulate_local_times(c, 8, 10, 1), Error);
  CHECK_THROWS_AS(simulate_local_times(c, 0, 0, 1), Error);
}

TEST_CASE("json and labels") {
  const ChainSpec c = chain_from_json(nlohmann::json::parse(
      R"({"N":50,"alpha":0.5,"delta":0.5,"r_profile":"j_squared","q_profile":"log"})"));
  CHECK(c.N == 50);
  CHECK(c.q_const == doctest::Approx(1.8401915812389091083).epsilon(1e-11));
  CHECK(to_json(c).at("N").get<int>() == 50);
  CHECK(state_label(0) == "0");
  CHECK(state_label(3) == "1/4");
  const ChainSpec e = make_chain({1.0, 1.0}, {4.0, 9.0}, {3.0, 8.0}, 0.5);
  CHECK(e.N == 3);
  CHECK_THROWS_AS(make_chain({1.0}, {4.0}, {5.0}, 0.5), Error);
}

}
