#include "permaseq/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "permaseq/error.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/parallel.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/symmetrization.hpp"

namespace permaseq {

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

PsdFactor psd_factor(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) throw Error("covariance must be square");
  const Eigen::Index n = cov.rows();
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * cov.cwiseAbs().maxCoeff())
    throw Error("covariance is not symmetric");
  const double trace = cov.trace();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-10 * std::abs(trace)) {
    std::ostringstream os;
    os << "covariance is not positive semidefinite (smallest eigenvalue " << min_eig << ")";
    throw Error(os.str());
  }
  PsdFactor f;
  f.L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = cov(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d -= f.L(j, k) * f.L(j, k);
    if (d <= 0.0) {
      if (d < 0.0) ++f.clipped;
      continue;  // column stays zero
    }
    const double ljj = std::sqrt(d);
    f.L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = cov(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= f.L(i, k) * f.L(j, k);
      f.L(i, j) = v / ljj;
    }
  }
  return f;
}

SampleBatch sample_half_integer(const Eigen::MatrixXd& cov, int k, int count, std::uint64_t seed,
                                int threads, const std::string& tag) {
  if (k < 1) throw Error("k must be at least 1");
  if (count < 1) throw Error("count must be at least 1");
  const PsdFactor f = psd_factor(cov);
  const Eigen::Index n = cov.rows();
  SampleBatch b;
  b.k = k;
  b.kernel_tag = tag;
  b.seed = seed;
  b.clipped_pivots = f.clipped;
  b.index_map.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) b.index_map[static_cast<std::size_t>(i)] = static_cast<int>(i);
  b.samples.resize(count, n);
  parallel_for(count, resolve_threads(threads), [&](long long begin, long long end) {
    Eigen::VectorXd z(n), xi(n);
    for (long long row = begin; row < end; ++row) {
      CounterRng rng(seed, static_cast<std::uint64_t>(row));
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      for (int c = 0; c < k; ++c) {
        for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
        xi.noalias() = f.L.triangularView<Eigen::Lower>() * z;
        x += 0.5 * xi.cwiseProduct(xi);
      }
      b.samples.row(row) = x.transpose();
    }
  });
  return b;
}

SampleBatch sample_half_integer(const GaussianRep& rep, int k, int count, std::uint64_t seed,
                                int threads) {
  if (k < 1) throw Error("k must be at least 1");
  if (count < 1) throw Error("count must be at least 1");
  const int n = rep.n;
  SampleBatch b;
  b.k = k;
  b.kernel_tag = "gaussian_rep";
  b.seed = seed;
  b.index_map = rep.index_map;
  b.samples.resize(count, n);
  std::vector<double> sqrt_lambda(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    sqrt_lambda[static_cast<std::size_t>(i)] = std::sqrt(rep.lambda[static_cast<std::size_t>(i)]);
  parallel_for(count, resolve_threads(threads), [&](long long begin, long long end) {
    for (long long row = begin; row < end; ++row) {
      CounterRng rng(seed, static_cast<std::uint64_t>(row));
      for (int i = 0; i < n; ++i) b.samples(row, i) = 0.0;
      for (int c = 0; c < k; ++c) {
        const double em1 = rng.normal();
        const double e0 = rng.normal();
        for (int i = 0; i < n; ++i) {
          const std::size_t u = static_cast<std::size_t>(i);
          double xi = rep.h[u] * em1 + rep.a[u] * e0;
          if (i > 0) xi += sqrt_lambda[u] * rng.normal();
          b.samples(row, i) += 0.5 * xi * xi;
        }
      }
    }
  });
  return b;
}

double laplace_exact(const Eigen::MatrixXd& K, const Eigen::VectorXd& s, double alpha) {
  if (K.rows() != K.cols() || K.rows() != s.size()) throw Error("laplace_exact: dimension mismatch");
  const Eigen::Index n = K.rows();
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) + K * s.asDiagonal();
  const double det = M.partialPivLu().determinant();
  if (!(det > 0.0)) throw Error("laplace_exact: I + K S is singular or has nonpositive determinant");
  return std::exp(-alpha * std::log(det));
}

namespace {

Estimate jackknife_mean(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  Estimate e;
  if (y.empty()) return e;
  double total = 0.0;
  for (double v : y) total += v;
  e.value = total / n;
  if (y.size() < 2) return e;
  // leave-one-out means theta_i = (total - y_i)/(n-1)
  double mean_theta = 0.0;
  for (double v : y) mean_theta += (total - v) / (n - 1.0);
  mean_theta /= n;
  double ss = 0.0;
  for (double v : y) {
    const double d = (total - v) / (n - 1.0) - mean_theta;
    ss += d * d;
  }
  e.se = std::sqrt((n - 1.0) / n * ss);
  return e;
}

}  // namespace

Estimate empirical_laplace(const SampleBatch& batch, const Eigen::VectorXd& s) {
  if (s.size() != batch.dim()) throw Error("empirical_laplace: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(batch.count()));
  for (int i = 0; i < batch.count(); ++i) y[static_cast<std::size_t>(i)] = std::exp(-batch.samples.row(i).dot(s));
  return jackknife_mean(y);
}

Moments moments_exact(const Eigen::MatrixXd& K, double alpha) {
  if (K.rows() != K.cols()) throw Error("moments_exact: kernel must be square");
  Moments m;
  m.mean = alpha * K.diagonal();
  m.cov = alpha * K.cwiseProduct(K.transpose());
  return m;
}

SampleMoments sample_moments(const SampleBatch& batch) {
  const Eigen::Index n = batch.dim();
  const double N = static_cast<double>(batch.count());
  SampleMoments m;
  m.mean = batch.samples.colwise().mean().transpose();
  const RowMatrix centered = batch.samples.rowwise() - m.mean.transpose();
  m.mean_se = (centered.array().square().colwise().sum() / (N - 1.0) / N).sqrt().transpose();
  m.cov.resize(n, n);
  m.cov_se.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const Eigen::ArrayXd prod = centered.col(i).array() * centered.col(j).array();
      const double c = prod.sum() / (N - 1.0);
      const double var = (prod - prod.mean()).square().sum() / (N - 1.0);
      m.cov(i, j) = m.cov(j, i) = c;
      m.cov_se(i, j) = m.cov_se(j, i) = std::sqrt(var / N);
    }
  }
  return m;
}

Estimate exceedance_probability(const SampleBatch& batch, double c) {
  Estimate e;
  const double N = static_cast<double>(batch.count());
  long long hits = 0;
  for (int i = 0; i < batch.count(); ++i) {
    if (batch.samples.row(i).maxCoeff() > c) ++hits;
  }
  e.value = static_cast<double>(hits) / N;
  e.se = std::sqrt(e.value * (1.0 - e.value) / N);
  return e;
}

SandwichReport sandwich_check(const ParamSeq& p, int l, int n, int k, double c, int count,
                              std::uint64_t seed, int threads) {
  SandwichReport r;
  r.l = l;
  r.n = n;
  r.k = k;
  r.threshold = c;
  const GaussianRep rep = build_rep(p, l, n);
  r.tau = rep.tau;
  r.weight = std::pow(rep.tau, -0.5 * k);

  const SampleBatch tilde = sample_half_integer(rep, k, count, mix_seed(seed, 0), threads);
  const Estimate pt = exceedance_probability(tilde, c);
  r.p_tilde = pt.value;
  r.p_tilde_se = pt.se;
  r.lower = r.weight * r.p_tilde;
  r.upper = (1.0 - r.weight) + r.weight * r.p_tilde;

  const KernelWithInverse kw = build_K(p, l, n);
  const Eigen::MatrixXd G = kw.K.entries.block(1, 1, n, n);
  if (n <= 2) {
    r.accessible = true;
    r.access_route = "dimension <= 2";
  } else if (cycle_symmetrizable(G).symmetrizable) {
    r.accessible = true;
    r.access_route = "symmetrizable";
  }
  if (!r.accessible) {
    r.se_comb = r.weight * r.p_tilde_se;
    r.status = "inconclusive (law not accessible)";
    return r;
  }
  const SampleBatch direct =
      sample_half_integer(k_Sym(G), k, count, mix_seed(seed, 1), threads, "G_sym");
  const Estimate pd = exceedance_probability(direct, c);
  r.p = pd.value;
  r.p_se = pd.se;
  r.se_comb = std::sqrt(r.p_se * r.p_se + r.weight * r.weight * r.p_tilde_se * r.p_tilde_se);
  r.lower_margin = r.p - r.lower;
  r.upper_margin = r.upper - r.p;
  if (r.se_comb > 0.05) {
    r.status = "inconclusive (standard error too large)";
  } else if (r.lower_margin < -3.0 * r.se_comb || r.upper_margin < -3.0 * r.se_comb) {
    r.status = "violated";
  } else {
    r.status = "holds";
  }
  return r;
}

nlohmann::json to_json(const SandwichReport& r) {
  nlohmann::json j;
  j["l"] = r.l;
  j["n"] = r.n;
  j["k"] = r.k;
  j["threshold"] = r.threshold;
  j["tau"] = r.tau;
  j["weight"] = r.weight;
  j["accessible"] = r.accessible;
  j["access_route"] = r.access_route;
  j["p"] = r.p;
  j["p_se"] = r.p_se;
  j["p_tilde"] = r.p_tilde;
  j["p_tilde_se"] = r.p_tilde_se;
  j["lower"] = r.lower;
  j["upper"] = r.upper;
  j["se_comb"] = r.se_comb;
  j["status"] = r.status;
  return j;
}

void write_batch_csv(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  char buf[40];
  for (int i = 0; i < batch.count(); ++i) {
    for (int j = 0; j < batch.dim(); ++j) {
      if (j > 0) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", batch.samples(i, j));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw Error("truncated binary batch");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_batch_binary(const SampleBatch& batch, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  put_u64(out, static_cast<std::uint64_t>(batch.dim()));
  put_u64(out, static_cast<std::uint64_t>(batch.count()));
  put_u64(out, batch.seed);
  put_u64(out, static_cast<std::uint64_t>(batch.k));
  for (int i = 0; i < batch.count(); ++i) {
    for (int j = 0; j < batch.dim(); ++j) {
      std::uint64_t bits;
      const double v = batch.samples(i, j);
      std::memcpy(&bits, &v, 8);
      put_u64(out, bits);
    }
  }
  if (!out) throw Error("write failed for " + path);
}

SampleBatch read_batch_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  SampleBatch b;
  const auto dim = static_cast<Eigen::Index>(get_u64(in));
  const auto count = static_cast<Eigen::Index>(get_u64(in));
  b.seed = get_u64(in);
  b.k = static_cast<int>(get_u64(in));
  b.kernel_tag = "binary";
  b.samples.resize(count, dim);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      const std::uint64_t bits = get_u64(in);
      double v;
      std::memcpy(&v, &bits, 8);
      b.samples(i, j) = v;
    }
  }
  b.index_map.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index i = 0; i < dim; ++i) b.index_map[static_cast<std::size_t>(i)] = static_cast<int>(i);
  return b;
}

}  // namespace permaseq
