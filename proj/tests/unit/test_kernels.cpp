#include <cmath>

#include <doctest.h>

#include "common.hpp"
#include "permaseq/error.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/symmetrization.hpp"

using namespace permaseq;
using testutil::max_abs;
using testutil::running;

TEST_SUITE("kernels") {

TEST_CASE("U corner and layout") {
  const ParamSeq p = running();
  const auto U = build_kernel(p, KernelTag::U, 0, 2);
  REQUIRE(U.dim() == 3);
  CHECK(U.entries(0, 0) == 2.0);
  CHECK(U.entries(0, 1) == doctest::Approx(1.88));
  CHECK(U.entries(1, 0) == doctest::Approx(1.9));
  CHECK(U.entries(1, 1) == doctest::Approx(0.5 + 1.0 + 0.9 * 0.88));
  CHECK(U.entries(2, 1) == doctest::Approx(1.0 + 0.92 * 0.88));
  CHECK(U.index_map == std::vector<int>{0, 2, 3});
}

TEST_CASE("H of size one") {
  const ParamSeq p = running();
  const auto H = build_kernel(p, KernelTag::H, 0, 1);
  CHECK(H.entries.rows() == 1);
  CHECK(H.entries(0, 0) == 1.0);
  const auto inv = inverse_H_closed(p, 0, 1);
  CHECK(inv.inverse(0, 0) == 1.0);
  CHECK(inv.det == 1.0);
}

TEST_CASE("H(0,3) row of state 2") {
  const auto H = build_kernel(running(), KernelTag::H, 0, 3);
  CHECK(H.entries(1, 0) == doctest::Approx(0.9));
  CHECK(H.entries(1, 1) == doctest::Approx(0.5 + 0.9 * 0.88));
  CHECK(H.entries(1, 2) == doctest::Approx(0.9 * 0.9));
}

TEST_CASE("closed-form inverse data of the running instance") {
  const auto inv = inverse_H_closed(running(), 0, 3);
  CHECK(inv.det == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(inv.rho == doctest::Approx(1.044).epsilon(1e-14));
  CHECK(inv.inverse(0, 0) == doctest::Approx(4.654).epsilon(1e-14));
  CHECK(inv.row_sums(0) == doctest::Approx(0.644).epsilon(1e-14));
  CHECK(inv.row_sums(1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(inv.row_sums(2) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(inv.col_sums(0) == doctest::Approx(0.554).epsilon(1e-14));
  CHECK(inv.col_sums(1) == doctest::Approx(0.24).epsilon(1e-14));
  CHECK(inv.col_sums(2) == doctest::Approx(0.25).epsilon(1e-14));
  const Eigen::MatrixXd H = build_kernel(running(), KernelTag::H, 0, 3).entries;
  CHECK(inv.rho == doctest::Approx(H.inverse().sum()).epsilon(1e-13));
}

TEST_CASE("bordered inverse by hand") {
  const Eigen::MatrixXd Hinv = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::VectorXd h = Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd expect(2, 2);
  expect << 2, -1, -1, 1;
  CHECK(max_abs(bordered_inverse(Hinv, h) - expect) == 0.0);
  CHECK_THROWS_AS(bordered_inverse(Hinv, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("K of size one") {
  const auto kw = build_K(running(), 0, 1);
  Eigen::MatrixXd K(2, 2), Ki(2, 2);
  K << 1, 1, 1, 2;
  Ki << 2, -1, -1, 1;
  CHECK(max_abs(kw.K.entries - K) == 0.0);
  CHECK(max_abs(kw.inverse - Ki) < 1e-15);
}

TEST_CASE("underflowing lambda is refused") {
  const ParamSeq p = ParamSeq::from_sequences({0.5, 1e-310}, {0.9, 0.9}, {0.9, 0.9});
  CHECK_THROWS_AS(inverse_H_closed(p, 0, 3), Error);
  CHECK_THROWS_AS(h_sums(p, 0, 3), Error);
}

TEST_CASE("window checks") {
  const ParamSeq p = running();
  CHECK_THROWS_AS(build_kernel(p, KernelTag::U, 0, 3), Error);
  CHECK_THROWS_AS(build_kernel(p, KernelTag::H, 0, 4), Error);
  CHECK_THROWS_AS(build_kernel(p, KernelTag::K, 0, 2), Error);
  CHECK_THROWS_AS(build_kernel(p, KernelTag::H, -1, 2), Error);
}

TEST_CASE("extended kernel") {
  const ParamSeq p = running();
  const auto V = build_kernel(p, KernelTag::V, 0, 2);
  const auto Vt = extend_with_star(V);
  REQUIRE(Vt.dim() == 4);
  CHECK(Vt.index_map.back() == kStarState);
  CHECK(Vt.entries.row(3).isOnes());
  CHECK(Vt.entries.col(3).isOnes());
  const auto U = build_kernel(p, KernelTag::U, 0, 2);
  CHECK(max_abs(Vt.entries.topLeftCorner(3, 3) - U.entries) == 0.0);
  CHECK(V.entries(0, 0) == 1.0);
}

TEST_CASE("csv export") {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, 2, 3, 4;
  CHECK(matrix_to_csv(m) == "0.10000000000000001,2\n3,4\n");
}

// Property sweep over random admissible sequences.
TEST_CASE("inverse, determinant, border and entry identities") {
  CounterRng rng(91, 0);
  const int ls[3] = {0, 10, 1000};
  for (int t = 0; t < 60; ++t) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 63);
    const int l = ls[t % 3];
    const ParamSeq p = random_admissible(500 + static_cast<std::uint64_t>(t), l + n + 2);
    CAPTURE(t);
    CAPTURE(n);
    CAPTURE(l);
    const auto H = build_kernel(p, KernelTag::H, l, n);
    const auto inv = inverse_H_closed(p, l, n);
    CHECK(max_abs(H.entries * inv.inverse - Eigen::MatrixXd::Identity(n, n)) <= 1e-9);
    const Eigen::MatrixXd dense = H.entries.inverse();
    CHECK(inv.rho == doctest::Approx(dense.sum()).epsilon(1e-9));
    CHECK(max_abs(inv.row_sums - dense.rowwise().sum()) <= 1e-9);
    CHECK(max_abs(inv.col_sums - dense.colwise().sum().transpose()) <= 1e-9);
    CHECK(inv.log_det == doctest::Approx(log_det_positive(H.entries)).epsilon(1e-10));

    const auto kw = build_K(p, l, n);
    const Eigen::MatrixXd viaborder = bordered_inverse(inv.inverse, Eigen::VectorXd::Ones(n));
    CHECK(max_abs(viaborder - kw.inverse) <= 1e-9);
    const int d = n + 1;
    CHECK(max_abs(kw.K.entries * kw.inverse - Eigen::MatrixXd::Identity(d, d)) <= 1e-9);
    const Eigen::VectorXd rows = kw.inverse.rowwise().sum();
    CHECK(rows(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows.tail(n).cwiseAbs().maxCoeff() <= 1e-9);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j) REQUIRE(kw.inverse(i, j) <= 1e-12);

    const auto G = build_kernel(p, KernelTag::G, l, n);
    const auto U = build_kernel(p, KernelTag::U, l, n);
    const auto V = build_kernel(p, KernelTag::V, l, n);
    const auto Ub = build_kernel(p, KernelTag::Ubar, l, n);
    CHECK(max_abs(G.entries.topLeftCorner(n, n) - (H.entries.array() + 1.0).matrix()) == 0.0);
    CHECK(max_abs(U.entries - (V.entries.array() + 1.0).matrix()) == 0.0);
    CHECK((U.entries.array() > 0.0).all());
    double bound = 0.0;
    for (int j = l + 2; j <= l + n + 1; ++j)
      bound = std::max({bound, 2.0 * p.deficit_f(j), 2.0 * p.deficit_g(j)});
    CHECK(max_abs(Ub.entries - U.entries) <= bound * (1 + 1e-12));
  }
}

}
