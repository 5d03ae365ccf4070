#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace permaseq {

enum class Family { beta, vanishing, diverging, explicit_seq };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

/// Parameter sequences (lambda_j, f_j, g_j) for 2 <= j <= n_max.
///
/// The deficits 1 - f_j and 1 - g_j are kept separately, both as binary64
/// values and as natural logarithms. Generated families make the deficits
/// exponentially small in j, so the log form is the authoritative one; the
/// binary64 deficit flushes to zero once it leaves the representable range.
class ParamSeq {
 public:
  /// Sequences given explicitly; element i corresponds to j = i + 2.
  /// Requires lambda_j > 0 and 0 < f_j, g_j < 1. Admissibility of the sums is
  /// not enforced here (see check_admissibility).
  static ParamSeq from_sequences(std::vector<double> lambda, std::vector<double> f,
                                 std::vector<double> g);

  /// Sequences given by lambda and the two deficit arrays (1 - f), (1 - g).
  static ParamSeq from_deficits(std::vector<double> lambda, std::vector<double> deficit_f,
                                std::vector<double> deficit_g);

  int n_max() const { return n_max_; }
  Family family() const { return family_; }
  /// beta for the beta family, gamma for vanishing/diverging, 0 otherwise.
  double parameter() const { return parameter_; }
  double eps_f() const { return eps_f_; }
  double eps_g() const { return eps_g_; }

  /// lim lambda_n log n implied by the family: beta, 0, +inf; NaN for explicit.
  double beta_limit() const;

  double lambda(int j) const { return lambda_[idx(j)]; }
  double log_lambda(int j) const { return log_lambda_[idx(j)]; }
  double f(int j) const { return f_[idx(j)]; }
  double g(int j) const { return g_[idx(j)]; }
  double deficit_f(int j) const { return df_[idx(j)]; }
  double deficit_g(int j) const { return dg_[idx(j)]; }
  double log_deficit_f(int j) const { return log_df_[idx(j)]; }
  double log_deficit_g(int j) const { return log_dg_[idx(j)]; }
  /// (1 - f_j) / lambda_j evaluated in log space.
  double ratio_f(int j) const;
  /// (1 - g_j) / lambda_j evaluated in log space.
  double ratio_g(int j) const;

  const std::vector<double>& lambdas() const { return lambda_; }

 private:
  friend ParamSeq make_param_family(Family, double, double, double, int);
  ParamSeq() = default;
  std::size_t idx(int j) const { return static_cast<std::size_t>(j - 2); }
  void fill_derived();

  int n_max_ = 0;
  Family family_ = Family::explicit_seq;
  double parameter_ = 0.0;
  double eps_f_ = 0.0;
  double eps_g_ = 0.0;
  std::vector<double> lambda_, log_lambda_;
  std::vector<double> f_, g_, df_, dg_, log_df_, log_dg_;
};

/// Generated family with 1 - f_j = eps_f lambda_j / 2^{j+1} and
/// 1 - g_j = eps_g lambda_j / 2^{j+1}.
///   beta:      lambda_j = beta / log j
///   vanishing: lambda_j = (log j)^{-gamma}, gamma > 1
///   diverging: lambda_j = (log j)^{-gamma}, gamma < 1
ParamSeq make_param_family(Family family, double parameter, double eps_f, double eps_g,
                           int n_max);

/// Convenience form: eps_f = epsilon, eps_g = epsilon / 2.
ParamSeq make_param_family(Family family, double parameter, double epsilon, int n_max);

/// Random admissible explicit sequence whose deficits decay like 1/j^2 instead
/// of 2^{-j}, so that windows far from the origin still carry visible
/// asymmetry. Used by the invariant sweeps.
ParamSeq random_admissible(std::uint64_t seed, int n_max);

struct AdmissibilityReport {
  double sum_f = 0.0;  // sum (1 - f_j) / lambda_j
  double sum_g = 0.0;  // sum (1 - g_j) / lambda_j
  bool verdict = false;
  // lambda trend evidence
  double lambda_last = 0.0;
  double lambda_log_last = 0.0;      // lambda_n log n at n = n_max
  double lambda_log_min_tail = 0.0;  // over j in [max(100, n_max/10), n_max]
  double lambda_log_max_tail = 0.0;
  bool lambda_nonincreasing = false;
};

AdmissibilityReport check_admissibility(const ParamSeq& p);

nlohmann::json to_json(const ParamSeq& p);
ParamSeq from_json(const nlohmann::json& j);

}  // namespace permaseq
