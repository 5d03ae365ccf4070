#include <cmath>

#include <doctest.h>

#include "common.hpp"
#include "permaseq/gaussian_rep.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/symmetrization.hpp"

using namespace permaseq;
using testutil::max_abs;
using testutil::running;

TEST_SUITE("gaussian_rep") {

TEST_CASE("coefficients of the running instance") {
  const GaussianRep rep = build_rep(running(), 0, 3);
  CHECK(rep.a[0] == doctest::Approx(0.99156185206245115679).epsilon(1e-13));
  CHECK(rep.a[1] == doctest::Approx(0.99151765506415825601).epsilon(1e-13));
  CHECK(rep.a[2] == doctest::Approx(0.99133295539933132653).epsilon(1e-13));
  CHECK(rep.m[0] == doctest::Approx(0.59730729109897863359).epsilon(1e-13));
  CHECK(rep.h[1] == doctest::Approx(std::sqrt(0.9 * 0.88)));
  CHECK(rep.tau == doctest::Approx(1.0084737478296735007).epsilon(1e-13));
  const double s = rep.m[0] + rep.m[1] * rep.h[1] + rep.m[2] * rep.h[2];
  CHECK(rep.a[0] == doctest::Approx(s / std::sqrt(rep.tau)).epsilon(1e-14));
  const Eigen::MatrixXd C = rep_covariance(rep);
  CHECK(C(0, 0) == doctest::Approx(1.0 + rep.a[0] * rep.a[0]));
}

TEST_CASE("size one") {
  const GaussianRep rep = build_rep(running(), 0, 1);
  CHECK(rep.a[0] == doctest::Approx(1.0));
  CHECK(rep.tau == doctest::Approx(1.0));
  CHECK(rep_covariance(rep)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("a close to 1 far out in the beta family") {
  const ParamSeq b = make_param_family(Family::beta, 1.0, 0.5, 10100);
  const GaussianRep rep = build_rep(b, 10000, 16);
  for (double a : rep.a) CHECK(std::abs(a - 1.0) <= 0.05);
}

TEST_CASE("asymptotic table is monotone and small at the largest l") {
  const ParamSeq b = make_param_family(Family::beta, 1.0, 0.5, 10100);
  const auto rows = asymptotic_report(b, {10, 100, 1000, 10000}, 16);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].max_da_over_lambda <= rows[i - 1].max_da_over_lambda);
    CHECK(rows[i].max_dh_over_lambda <= rows[i - 1].max_dh_over_lambda);
    CHECK(rows[i].tau_minus_1 <= rows[i - 1].tau_minus_1);
  }
  CHECK(rows.back().max_da_over_lambda < 0.01);
  CHECK(rows.back().max_dh_over_lambda < 0.01);
  CHECK(rows.back().tau_minus_1 < 0.01);
  // deficits far below the binary64 range
  CHECK(rows.back().max_dh_over_lambda == 0.0);
  CHECK(asymptotic_csv(rows).rfind("l,max_da_over_lambda,max_dh_over_lambda,tau_minus_1\n", 0) == 0);
}

TEST_CASE("(1-h)/lambda bound for geometric deficits") {
  const double eps = 0.5;
  const ParamSeq p = make_param_family(Family::beta, 1.0, eps, 0.25, 400);
  for (int l : {0, 5, 20, 100}) {
    const auto rows = asymptotic_report(p, {l}, 16);
    CHECK(rows[0].max_dh_over_lambda <= eps * std::ldexp(1.0, -l - 2) * (1 + 1e-12));
  }
}

// Property sweep over random admissible sequences.
TEST_CASE("covariance identities") {
  CounterRng rng(5, 0);
  const int ls[3] = {0, 10, 1000};
  for (int t = 0; t < 40; ++t) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 63);
    const int l = ls[t % 3];
    const ParamSeq p = random_admissible(300 + static_cast<std::uint64_t>(t), l + n + 2);
    CAPTURE(t);
    const GaussianRep rep = build_rep(p, l, n);
    const Eigen::MatrixXd C = rep_covariance(rep);
    const auto kw = build_K(p, l, n);
    CHECK(max_abs(C - k_isymi(kw.K.entries).bottomRightCorner(n, n)) <= 1e-8);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * C.trace());

    double sf = 0.0, sg = 0.0;
    for (int j = l + 2; j <= l + n; ++j) {
      sf += p.ratio_f(j);
      sg += p.ratio_g(j);
    }
    CHECK(std::abs(rep.m[0] - 1.0) <= sf + sg + 1e-15);
    for (double a : rep.a) {
      CHECK(a > 0.0);
      CHECK(a < 2.0);
    }
    for (int i = 1; i < n; ++i) {
      const double inc = C(i, i) + C(0, 0) - 2.0 * C(0, i);
      const double formula = rep.lambda[i] + rep.one_minus_h[i] * rep.one_minus_h[i] +
                             rep.a_minus_a0[i] * rep.a_minus_a0[i];
      CHECK(inc == doctest::Approx(formula).epsilon(1e-8));
    }
  }
}

TEST_CASE("windows beyond the dense limit") {
  const ParamSeq b = make_param_family(Family::beta, 1.0, 0.5, 1000000);
  const GaussianRep rep = build_rep(b, 1000, 999000);
  CHECK(rep.dim() == 999000);
  CHECK(std::isfinite(rep.tau));
  CHECK(rep.a.back() == doctest::Approx(1.0));
}

}
