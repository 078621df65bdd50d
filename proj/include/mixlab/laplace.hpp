#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixlab {

/// f(t) = sum_i a_i e^{-lambda_i t} with a_i, lambda_i > 0.
class ExponentialSum {
 public:
  ExponentialSum(std::vector<double> a, std::vector<double> lam);

  std::size_t size() const noexcept { return a_.size(); }
  std::span<const double> a() const noexcept { return a_; }
  std::span<const double> lam() const noexcept { return lam_; }
  double total_mass() const noexcept { return total_; }

  /// View sorted by ascending lambda (stable on ties); a follows the same order.
  std::span<const double> sorted_a() const noexcept { return sorted_a_; }
  std::span<const double> sorted_lam() const noexcept { return sorted_lam_; }

 private:
  std::vector<double> a_, lam_, sorted_a_, sorted_lam_;
  double total_ = 0.0;
};

double exp_sum_log_eval(const ExponentialSum& s, double t);
/// Accurate even where individual terms underflow.
double exp_sum_eval(const ExponentialSum& s, double t);

/// 0 if f(0) <= eps, otherwise the root of f(t) = eps, bisected to the last
/// representable double; f(result) <= eps.
double exp_sum_mixing(const ExponentialSum& s, double eps);

/// j(c) (1-based, in ascending-lambda order), lambda(c) and tau(c); nullopt
/// when c >= sum a_i.
struct LambdaTau {
  std::size_t j = 0;
  double lambda_c = 0.0;
  double tau_c = 0.0;
};
std::optional<LambdaTau> lambda_tau(const ExponentialSum& s, double c);

// ---------------------------------------------------------------------------
// Cutoff-time formulas on rows of comparables

/// log t for t = max_i log(i+1)/l_i over a non-decreasing row (checked).
double theorem_tn(std::span<const double> lrow);
/// Same, from log l_i (so rows like e^{-n^gamma} never underflow).
double theorem_tn_log(std::span<const double> log_lrow);

enum class Direction { kIncreasing, kDecreasing };

/// u_n for a monotone sequence l_1..l_n, with the statistic whose divergence
/// decides cutoff: u_n itself when increasing, u_n l_n when decreasing.
struct UnResult {
  double log_u = 0.0;
  double log_statistic = 0.0;
};
UnResult theorem_un(std::span<const double> lseq, Direction direction);
UnResult theorem_un_log(std::span<const double> log_lseq, Direction direction);

// ---------------------------------------------------------------------------
// Finite-n trend test

enum class Trend { kGrowing, kBounded, kInconclusive };
std::string_view to_string(Trend t) noexcept;

struct TrendConfig {
  double slope_threshold = 0.2;  // least-squares slope against log n
  double growth_ratio = 3.0;     // last / first
  double bounded_ratio = 2.0;    // max / min over the upper half
  std::size_t burn_in = 0;       // leading points ignored (0 = none)
};

struct TrendResult {
  Trend verdict = Trend::kInconclusive;
  double slope = 0.0;
  double first = 0.0;
  double last = 0.0;
  double upper_max_over_min = 0.0;
  std::size_t points = 0;
};

/// Growing: slope of value against log n over the upper half > threshold and
/// last > growth_ratio * first. Bounded: max/min over the upper half below
/// bounded_ratio. Otherwise inconclusive.
TrendResult classify_trend(std::span<const double> n, std::span<const double> values,
                           const TrendConfig& config = {});

// ---------------------------------------------------------------------------
// Laplace cutoff criterion over a family of rows

struct CriterionRow {
  double n = 0.0;
  ExponentialSum sum;
};

struct CriterionSeries {
  double c = 0.0;
  std::optional<double> eps;  // set for T_n(eps) lambda_n(c) series
  std::vector<double> n;
  std::vector<double> values;
  std::vector<double> skipped_n;  // c beyond the total mass
  TrendResult trend;
};

struct CriterionReport {
  std::vector<CriterionSeries> tau_lambda;     // one per c
  std::vector<CriterionSeries> mixing_lambda;  // one per (eps, c)
  /// Growing tau(c) lambda(c) for some c implies growing for every larger c
  /// in the grid.
  bool monotone_in_c = true;
  std::vector<std::string> notes;
};

CriterionReport cutoff_criterion_scan(std::span<const CriterionRow> rows,
                                      std::span<const double> c_grid,
                                      std::span<const double> eps_grid,
                                      const TrendConfig& config = {});

// ---------------------------------------------------------------------------
// Boundedness probe for u_n and u_n l_n

/// Rules: "const", "power:<g>" (n^g), "logpower:<g>" (log(n+1)^g),
/// "exp:<g>" (e^{-n^g}), "geom:<r>" (r^n). Returns log l_n.
double sequence_rule_log(std::string_view rule, double n);

struct LemmaProbeRow {
  double n = 0.0;
  double log_n_over_l = 0.0;  // log n / l_n
  double ratio = 0.0;         // l_n / l_{n+1}
  double un_statistic = 0.0;  // u_n (increasing) or u_n l_n (decreasing)
};

struct LemmaProbeReport {
  Direction direction = Direction::kIncreasing;
  std::vector<LemmaProbeRow> rows;
  TrendResult statistic_trend;
  std::string clause;
};

LemmaProbeReport lemma_unln_probe(std::string_view rule, std::span<const double> n_values,
                                  const TrendConfig& config = {});

}  // namespace mixlab
