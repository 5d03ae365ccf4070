#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "permaseq/error.hpp"
#include "permaseq/experiments.hpp"
#include "permaseq/gaussian_rep.hpp"
#include "permaseq/io.hpp"
#include "permaseq/kernels.hpp"
#include "permaseq/markov_chain.hpp"
#include "permaseq/params.hpp"
#include "permaseq/rng.hpp"
#include "permaseq/sampler.hpp"
#include "permaseq/symmetrization.hpp"

using namespace permaseq;

namespace {

// Aggregates one named check over many trials.
struct Check {
  Check(std::string n, double t = 0.0) : name(std::move(n)), tol(t) {}
  std::string name;
  double tol = 0.0;
  int passed = 0, total = 0;
  double worst = 0.0;
  std::string note;

  void value(double v) {
    ++total;
    worst = std::max(worst, std::isnan(v) ? INFINITY : v);
    if (v <= tol) ++passed;
  }
  void flag(bool ok) {
    ++total;
    if (ok) ++passed;
  }
  bool ok() const { return total > 0 && passed == total; }
};

void print_checks(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    std::printf("%s %-28s %d/%d", c.ok() ? "PASS" : "FAIL", c.name.c_str(), c.passed, c.total);
    if (c.tol > 0.0) std::printf("  worst %.3e (tol %.0e)", c.worst, c.tol);
    if (!c.note.empty()) std::printf("  %s", c.note.c_str());
    std::printf("\n");
  }
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

int verify_kernels(int n, int trials, std::uint64_t seed) {
  if (n < 2 || n > 64) throw Error("--n must lie in [2, 64]");
  std::vector<Check> checks = {
      {"H inverse", 1e-9},       {"H determinant", 1e-10}, {"K inverse", 1e-9},
      {"K inverse row sums", 1e-9}, {"K inverse M-matrix"},  {"A_sym M-matrix"},
      {"tau in [1,2]"},          {"rep covariance", 1e-8}, {"G = H + 1", 0.0},
      {"U = V + 1", 0.0},        {"Ubar vs U"},
  };
  int trial_pass = 0;
  const int ls[3] = {0, 10, 1000};
  for (int t = 0; t < trials; ++t) {
    const int l = ls[t % 3];
    const ParamSeq p = random_admissible(mix_seed(seed, static_cast<std::uint64_t>(t)), l + n + 2);
    std::vector<int> before;
    for (const auto& c : checks) before.push_back(c.passed);
    try {
      const auto H = build_kernel(p, KernelTag::H, l, n);
      const auto inv = inverse_H_closed(p, l, n);
      checks[0].value(max_abs(H.entries * inv.inverse - Eigen::MatrixXd::Identity(n, n)));
      const Eigen::PartialPivLU<Eigen::MatrixXd> lu(H.entries);
      const Eigen::MatrixXd LU = lu.matrixLU();
      double logdet = 0.0;
      for (int i = 0; i < n; ++i) logdet += std::log(std::abs(LU(i, i)));
      checks[1].value(n > 30 ? std::abs(logdet - inv.log_det)
                             : std::abs(lu.determinant() - inv.det) / std::abs(inv.det));

      const auto kw = build_K(p, l, n);
      const int d = kw.K.dim();
      checks[2].value(max_abs(kw.K.entries * kw.inverse - Eigen::MatrixXd::Identity(d, d)));
      Eigen::VectorXd target = Eigen::VectorXd::Zero(d);
      target(0) = 1.0;
      checks[3].value((kw.inverse.rowwise().sum() - target).cwiseAbs().maxCoeff());
      checks[4].flag(is_nonsingular_M_matrix(kw.inverse).ok);
      checks[5].flag(is_nonsingular_M_matrix(a_sym(kw.inverse)).ok);
      const double tau = tau_ratio(p, l, n);
      checks[6].flag(tau >= 1.0 - 1e-9 && tau <= 2.0 + 1e-9);
      const Eigen::MatrixXd inner = k_isymi(kw.K.entries).bottomRightCorner(n, n);
      checks[7].value(max_abs(rep_covariance(build_rep(p, l, n)) - inner));

      const auto G = build_kernel(p, KernelTag::G, l, n);
      checks[8].value(max_abs(G.entries.topLeftCorner(n, n) -
                              (H.entries.array() + 1.0).matrix()));
      const auto U = build_kernel(p, KernelTag::U, l, n);
      const auto V = build_kernel(p, KernelTag::V, l, n);
      checks[9].value(max_abs(U.entries - (V.entries.array() + 1.0).matrix()));
      const auto Ub = build_kernel(p, KernelTag::Ubar, l, n);
      double bound = 0.0;
      for (int j = l + 2; j <= l + n + 1; ++j)
        bound = std::max({bound, 2.0 * p.deficit_f(j), 2.0 * p.deficit_g(j)});
      checks[10].flag(max_abs(Ub.entries - U.entries) <= bound + 1e-15);
    } catch (const Error& e) {
      std::printf("trial %d (l=%d): %s\n", t, l, e.what());
      for (auto& c : checks)
        if (c.total < t + 1) c.flag(false);
    }
    bool all = true;
    for (std::size_t i = 0; i < checks.size(); ++i)
      if (checks[i].passed == before[i]) all = false;
    if (all) ++trial_pass;
  }
  print_checks(checks);
  std::printf("%d/%d PASS\n", trial_pass, trials);
  return trial_pass == trials ? 0 : 1;
}

int verify_chain(ChainSpec c, double alpha2, long long paths, std::uint64_t seed, int threads) {
  std::vector<Check> checks = {
      {"row sums = 1/alpha", 1e-10},  {"sup norm <= 1"},
      {"resolvent identity", 1e-9},   {"-Q^-1 = u", 1e-9},
      {"u(1/i,0) relation", 1e-12},   {"alpha U f -> f"},
      {"V(0,0) = 1", 1e-10},          {"V vs v", 1e-10},
      {"U = V + 1", 0.0},             {"left potential", 1e-10},
      {"|h|_1 in (1,2)"},             {"local times (4 s.e.)"},
  };
  const IdentityReport ir = identity_suite(c, alpha2, default_test_function);
  checks[0].value(ir.row_sum_residual);
  checks[1].flag(ir.sup_norm <= 1.0 + 1e-10);
  checks[2].value(ir.resolvent_residual);
  const PotentialTable t = potential_u(c);
  checks[3].value(max_abs(-q_matrix(c).inverse() - t.u));
  double rel = 0.0;
  for (int j = 2; j <= c.N; ++j)
    rel = std::max(rel, std::abs(t.u(j - 1, 0) - t.u(0, 0) * c.rj(j) / (c.alpha + c.rj(j))) /
                            t.u(j - 1, 0));
  checks[4].value(rel);
  checks[5].flag(ir.deviation_decreasing && ir.worst_ratio <= 0.15);
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst ratio %.3f", ir.worst_ratio);
  checks[5].note = buf;

  const ParamSeq p = to_params(c);
  const auto V = build_kernel(p, KernelTag::V, 0, c.N - 1);
  checks[6].value(std::abs(V.entries(0, 0) - 1.0));
  checks[7].value(max_abs(V.entries - t.v));
  const auto U = build_kernel(p, KernelTag::U, 0, c.N - 1);
  checks[8].value(max_abs(U.entries - (V.entries.array() + 1.0).matrix()));
  const LeftPotential lp = left_potential(p);
  checks[9].value(lp.residual);
  checks[10].flag(lp.l1 > 1.0 && lp.l1 < 2.0);

  const LocalTimeReport lt = simulate_local_times(c, 0, paths, seed, threads);
  int within = 0;
  for (int y = 0; y < c.N; ++y)
    if (std::abs(lt.mean(y) - t.u(0, y)) <= 4.0 * lt.se(y)) ++within;
  if (std::abs(lt.total_mean - 1.0 / c.alpha) <= 4.0 * lt.total_se) ++within;
  checks[11].flag(within == c.N + 1);
  std::snprintf(buf, sizeof buf, "%d/%d estimates, %lld paths", within, c.N + 1, paths);
  checks[11].note = buf;

  std::printf("chain N=%d delta=%g j0=%d q=%.6g normalization=%.15f\n", c.N, c.delta, c.j0,
              c.q_const, c.normalization);
  print_checks(checks);
  for (const auto& ch : checks)
    if (!ch.ok()) return 1;
  return 0;
}

nlohmann::json load_config(const std::string& path) {
  return read_json_file(path);
}

int run_sample(const nlohmann::json& cfg, std::uint64_t seed, int threads, const std::string& out) {
  const ParamSeq p = from_json(cfg.at("params"));
  const int l = cfg.value("l", 0);
  const int n = cfg.value("n", 3);
  const int k = cfg.value("k", 1);
  const int count = cfg.value("count", 10000);
  const std::string kernel = cfg.value("kernel", "gaussian_rep");
  if (cfg.contains("sandwich")) {
    const double c = cfg.at("sandwich").value("threshold", 2.0);
    const SandwichReport r = sandwich_check(p, l, n, k, c, count, seed, threads);
    std::cout << to_json(r).dump(2) << "\n";
    return r.status == "violated" ? 1 : 0;
  }
  SampleBatch batch;
  if (kernel == "gaussian_rep") {
    batch = sample_half_integer(build_rep(p, l, n), k, count, seed, threads);
  } else if (kernel == "ubar") {
    const auto Ub = build_kernel(p, KernelTag::Ubar, l, n);
    batch = sample_half_integer(Ub.entries, k, count, seed, threads, "Ubar");
    batch.index_map = Ub.index_map;
  } else if (kernel == "k_isymi") {
    const auto kw = build_K(p, l, n);
    batch = sample_half_integer(k_isymi(kw.K.entries).bottomRightCorner(n, n), k, count, seed,
                                threads, "K_isymi");
  } else {
    throw Error("kernel must be gaussian_rep, ubar or k_isymi");
  }
  const std::string format = cfg.value("format", "csv");
  if (!out.empty()) {
    if (format == "binary")
      write_batch_binary(batch, out);
    else
      write_batch_csv(batch, out);
  }
  const SampleMoments sm = sample_moments(batch);
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < batch.dim(); ++i)
    rows.push_back({std::to_string(i), fmt_double(sm.mean(i)), fmt_double(sm.mean_se(i)),
                    fmt_double(sm.cov(i, i))});
  std::printf("%d samples, dim %d, k %d, seed %llu, clipped pivots %d\n", batch.count(),
              batch.dim(), batch.k, static_cast<unsigned long long>(seed), batch.clipped_pivots);
  std::cout << render_table({"coord", "mean", "mean_se", "var"}, rows);
  return 0;
}

int run_limits(ExperimentConfig cfg, const std::string& plot) {
  const ExperimentResult res = limit_experiment(cfg);
  const std::string csv = results_csv(res.rows);
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << csv;
    std::cerr << to_json(res.summary).dump(2) << "\n";
  } else {
    write_text_file(cfg.out, csv);
    std::cout << to_json(res.summary).dump(2) << "\n";
  }
  if (!plot.empty()) {
    std::vector<double> x, y;
    for (const auto& r : res.rows) {
      x.push_back(r.predicted_sup);
      y.push_back(r.sup_signed);
    }
    write_text_file(plot, scatter_svg(x, y, "sup_signed vs prediction", "predicted_sup",
                                      "sup_signed"));
  }
  return 0;
}

int run_report(const std::string& path, const std::string& stat, const std::string& plot,
               double slack) {
  const CsvTable t = read_csv_file(path);
  if (t.rows.empty()) throw Error(path + ": no rows");
  std::vector<std::vector<std::string>> rows;
  for (const std::string col : {"X0", "sup_abs", "sup_signed", "inf_signed", "sup_sqrt", "inf_sqrt",
                                "predicted_sup", "predicted_inf", "max_ratio"}) {
    if (t.column(col) < 0) continue;
    const auto v = t.numeric(col);
    double mean = 0.0, lo = INFINITY, hi = -INFINITY;
    for (double x : v) {
      mean += x;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
    rows.push_back({col, fmt_double(mean), fmt_double(sd), fmt_double(lo), fmt_double(hi)});
  }
  std::printf("%s: %zu replicas\n", path.c_str(), t.rows.size());
  std::cout << render_table({"column", "mean", "sd", "min", "max"}, rows);

  const std::string pred = stat.rfind("inf", 0) == 0 ? "predicted_inf" : "predicted_sup";
  const auto y = t.numeric(stat);
  const auto x = t.numeric(pred);
  int exceed = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (y[i] > x[i] + slack) ++exceed;
  std::map<std::string, int> regimes;
  if (t.column("regime") >= 0)
    for (const auto& r : t.rows) ++regimes[r[static_cast<std::size_t>(t.column("regime"))]];
  std::printf("pearson(%s, %s) = %s\n", stat.c_str(), pred.c_str(),
              fmt_double(pearson(y, x), 4).c_str());
  std::printf("fraction %s > %s + %g = %s\n", stat.c_str(), pred.c_str(), slack,
              fmt_double(static_cast<double>(exceed) / static_cast<double>(x.size()), 4).c_str());
  for (const auto& [name, cnt] : regimes) std::printf("regime %s: %d\n", name.c_str(), cnt);
  if (!plot.empty()) write_text_file(plot, scatter_svg(x, y, stat + " vs " + pred, pred, stat));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permaseq: structured permanental kernels, samplers and limit experiments"};
  app.require_subcommand(1);

  auto* vk = app.add_subcommand("verify-kernels", "invariant suite for kernels and inverses");
  int vk_n = 32, vk_trials = 100;
  std::uint64_t vk_seed = 7;
  vk->add_option("--n", vk_n, "window size n (2..64)")->capture_default_str();
  vk->add_option("--trials", vk_trials, "random admissible sequences")->capture_default_str();
  vk->add_option("--seed", vk_seed, "seed")->capture_default_str();

  auto* vc = app.add_subcommand("verify-chain", "identity suite for the truncated chain");
  std::string vc_config, r_profile = "j_squared", q_profile = "log";
  int vc_N = 50, vc_threads = 0;
  double vc_delta = 0.25, alpha2 = 1.25;
  long long vc_paths = 20000;
  std::uint64_t vc_seed = 7;
  vc->add_option("--config", vc_config, "chain JSON (overrides the flags below)");
  vc->add_option("--N", vc_N, "truncation")->capture_default_str();
  vc->add_option("--delta", vc_delta, "r_j - s_j")->capture_default_str();
  vc->add_option("--r-profile", r_profile, "j_squared or j_cubed")->capture_default_str();
  vc->add_option("--q-profile", q_profile, "log or sqrt_log")->capture_default_str();
  vc->add_option("--alpha2", alpha2, "second alpha for the resolvent identity")->capture_default_str();
  vc->add_option("--paths", vc_paths, "local-time paths from state 0")->capture_default_str();
  vc->add_option("--seed", vc_seed, "seed")->capture_default_str();
  vc->add_option("--threads", vc_threads, "worker threads (0: all)");

  auto* sm = app.add_subcommand("sample", "draw a batch of k/2-permanental samples");
  std::string sm_config, sm_out;
  std::uint64_t sm_seed = 0;
  int sm_threads = 0;
  sm->add_option("--config", sm_config, "sample JSON")->required();
  sm->add_option("--seed", sm_seed, "seed (overrides config)");
  sm->add_option("--threads", sm_threads, "worker threads (0: all)");
  sm->add_option("--out", sm_out, "batch output path (overrides config)");

  auto* lm = app.add_subcommand("limits", "windowed limit-law experiment");
  std::string lm_config, lm_out, lm_plot;
  std::uint64_t lm_seed = 0;
  int lm_threads = 0;
  lm->add_option("--config", lm_config, "experiment JSON")->required();
  lm->add_option("--seed", lm_seed, "seed (overrides config)");
  lm->add_option("--threads", lm_threads, "worker threads (overrides config)");
  lm->add_option("--out", lm_out, "CSV path, '-' for stdout (overrides config)");
  lm->add_option("--plot", lm_plot, "SVG scatter of sup_signed vs prediction");

  auto* rp = app.add_subcommand("report", "summarize a limits CSV");
  std::string rp_csv, rp_plot, rp_stat = "sup_signed";
  double rp_slack = 0.25;
  rp->add_option("csv,--csv", rp_csv, "results CSV")->required();
  rp->add_option("--stat", rp_stat, "statistic column")->capture_default_str();
  rp->add_option("--slack", rp_slack, "exceedance slack")->capture_default_str();
  rp->add_option("--plot", rp_plot, "SVG scatter of the statistic vs its prediction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*vk) return verify_kernels(vk_n, vk_trials, vk_seed);
    if (*vc) {
      ChainSpec c = vc_config.empty()
                        ? normalize_reuter(vc_delta, r_profile, q_profile, vc_N)
                        : chain_from_json(load_config(vc_config));
      return verify_chain(c, alpha2, vc_paths, vc_seed, vc_threads);
    }
    if (*sm) {
      const nlohmann::json cfg = load_config(sm_config);
      const std::uint64_t seed = sm->count("--seed") ? sm_seed : cfg.value("seed", std::uint64_t{1});
      const int threads = sm->count("--threads") ? sm_threads : cfg.value("threads", 0);
      const std::string out = sm->count("--out") ? sm_out : cfg.value("out", std::string());
      return run_sample(cfg, seed, threads, out);
    }
    if (*lm) {
      ExperimentConfig cfg;
      try {
        cfg = experiment_config_from_json(load_config(lm_config));
      } catch (const nlohmann::json::exception& e) {
        throw Error(lm_config + ": " + e.what());
      }
      if (lm->count("--seed")) cfg.seed = lm_seed;
      if (lm->count("--threads")) cfg.threads = lm_threads;
      if (lm->count("--out")) cfg.out = lm_out;
      return run_limits(cfg, lm_plot);
    }
    if (*rp) return run_report(rp_csv, rp_stat, rp_plot, rp_slack);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
