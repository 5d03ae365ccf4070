#include <cmath>
#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "common.hpp"
#include "permaseq/error.hpp"
#include "permaseq/gaussian_rep.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/sampler.hpp"
#include "permaseq/symmetrization.hpp"

using namespace permaseq;
using testutil::max_abs;
using testutil::running;

namespace {

Eigen::MatrixXd one(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("exact Laplace transform") {
  CHECK(laplace_exact(one(2.0), vec({0.5}), 0.5) == doctest::Approx(0.7071067811865475244));
  CHECK(laplace_exact(one(2.0), vec({0.0}), 0.5) == 1.0);
  const Eigen::MatrixXd inner = k_isymi(build_K(running(), 0, 3).K.entries).bottomRightCorner(3, 3);
  CHECK(laplace_exact(inner, vec({0.1, 0.2, 0.3}), 1.5) ==
        doctest::Approx(0.25728472005495424822).epsilon(1e-13));
}

TEST_CASE("chi-square mean") {
  const SampleBatch b = sample_half_integer(one(2.0), 1, 1000000, 11);
  const SampleMoments m = sample_moments(b);
  CHECK(std::abs(m.mean(0) - 1.0) <= 4.0 * m.mean_se(0));
  CHECK((b.samples.array() >= 0.0).all());
  const Estimate e = empirical_laplace(b, vec({0.5}));
  CHECK(std::abs(e.value - 0.7071067811865475244) <= 4.0 * e.se);
  CHECK(empirical_laplace(b, vec({1.0})).value < e.value);
  const Estimate z = empirical_laplace(b, vec({0.0}));
  CHECK(z.value == 1.0);
  CHECK(z.se == 0.0);
}

TEST_CASE("running instance with k = 3") {
  const GaussianRep rep = build_rep(running(), 0, 3);
  const SampleBatch b = sample_half_integer(rep, 3, 200000, 12);
  const Estimate e = empirical_laplace(b, vec({0.1, 0.2, 0.3}));
  CHECK(std::abs(e.value - 0.25728472005495424822) <= 4.0 * e.se);
  const Moments ex = moments_exact(rep_covariance(rep), 1.5);
  const SampleMoments sm = sample_moments(b);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(sm.mean(i) - ex.mean(i)) <= 4.0 * sm.mean_se(i));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(sm.cov(i, j) - ex.cov(i, j)) <= 4.0 * sm.cov_se(i, j));
  }
}

TEST_CASE("moment formulas") {
  const auto U = build_kernel(running(), KernelTag::U, 0, 2);
  const Moments m = moments_exact(U.entries, 0.5);
  CHECK(m.mean(0) == 1.0);
  CHECK(m.cov(0, 1) == doctest::Approx(0.5 * 1.88 * 1.9));
  CHECK(m.cov(0, 2) == doctest::Approx(0.5 * 1.9 * 1.92));
  Eigen::MatrixXd S(2, 2);
  S << 2, 1, 1, 3;
  CHECK(max_abs(moments_exact(S, 1.5).cov - 1.5 * S.cwiseProduct(S)) == 0.0);
}

TEST_CASE("reproducible across runs and thread counts") {
  const GaussianRep rep = build_rep(running(), 0, 3);
  const SampleBatch a = sample_half_integer(rep, 2, 5000, 99, 1);
  const SampleBatch b = sample_half_integer(rep, 2, 5000, 99, 3);
  CHECK(a.samples == b.samples);
  const SampleBatch c = sample_half_integer(rep, 2, 5000, 100, 1);
  CHECK_FALSE(a.samples == c.samples);
  const Eigen::MatrixXd C = rep_covariance(rep);
  CHECK(sample_half_integer(C, 1, 3000, 5, 1).samples == sample_half_integer(C, 1, 3000, 5, 2).samples);
}

TEST_CASE("factor checks") {
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(psd_factor(bad), Error);
  Eigen::MatrixXd rank1 = Eigen::MatrixXd::Ones(3, 3);
  const PsdFactor f = psd_factor(rank1);
  CHECK(max_abs(f.L * f.L.transpose() - rank1) <= 1e-12);
  CHECK_THROWS_AS(sample_half_integer(one(1.0), 0, 10, 1), Error);
}

TEST_CASE("Ubar with vanishing lambda collapses onto X0") {
  const ParamSeq p = ParamSeq::from_sequences({1e-12, 1e-12}, {0.9, 0.9}, {0.9, 0.8});
  const auto Ub = build_kernel(p, KernelTag::Ubar, 0, 2);
  const SampleBatch b = sample_half_integer(Ub.entries, 1, 2000, 3);
  double spread = 0.0;
  for (int i = 0; i < b.count(); ++i)
    for (int j = 1; j < 3; ++j)
      spread = std::max(spread, std::abs(std::sqrt(b.samples(i, j)) - std::sqrt(b.samples(i, 0))));
  // |xi_j - xi_0| / sqrt 2 <= sqrt(lambda) * 6 / sqrt 2 with overwhelming probability
  CHECK(spread <= 6.0 * std::sqrt(1e-12));
}

TEST_CASE("binary round trip and csv") {
  const SampleBatch b = sample_half_integer(build_rep(running(), 0, 3), 1, 64, 8);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string bin = (dir / "permaseq_batch.bin").string();
  const std::string csv = (dir / "permaseq_batch.csv").string();
  write_batch_binary(b, bin);
  const SampleBatch r = read_batch_binary(bin);
  CHECK(r.samples == b.samples);
  CHECK(r.seed == 8);
  CHECK(r.k == 1);
  CHECK(std::filesystem::file_size(bin) == 32 + 64 * 3 * 8);
  write_batch_csv(b, csv);
  CHECK(std::filesystem::file_size(csv) > 0);
  std::filesystem::remove(bin);
  std::filesystem::remove(csv);
}

TEST_CASE("exceedance estimate") {
  const SampleBatch b = sample_half_integer(one(2.0), 1, 100000, 4);
  const Estimate e = exceedance_probability(b, 1.0);
  // P(eta^2 > 1) = 0.31731050786291
  CHECK(std::abs(e.value - 0.31731050786291) <= 4.0 * e.se);
}

TEST_CASE("sandwich: inaccessible, accessible, degenerate and far tails") {
  const SandwichReport r3 = sandwich_check(running(), 0, 3, 1, 2.0, 100000, 1);
  CHECK(r3.status.rfind("inconclusive", 0) == 0);
  CHECK_FALSE(r3.accessible);
  CHECK(r3.lower <= r3.upper);
  const SandwichReport r2 = sandwich_check(running(), 0, 2, 1, 2.0, 200000, 2);
  CHECK(r2.accessible);
  CHECK(r2.status != "violated");
  const ParamSeq b = make_param_family(Family::beta, 1.0, 0.5, 6000);
  const SandwichReport flat = sandwich_check(b, 5000, 3, 1, 2.0, 100000, 3);
  CHECK(flat.tau == 1.0);
  CHECK(std::abs(flat.p - flat.p_tilde) <= 3.0 * flat.se_comb);
  const SandwichReport far = sandwich_check(running(), 0, 2, 1, 1e6, 10000, 4);
  CHECK(far.p == 0.0);
  CHECK(far.p_tilde == 0.0);
  CHECK(far.status != "violated");
  CHECK(to_json(r2).at("status").get<std::string>() == r2.status);
}

}
