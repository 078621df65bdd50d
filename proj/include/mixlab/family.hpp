#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mixlab/group.hpp"
#include "mixlab/laplace.hpp"
#include "mixlab/product.hpp"

namespace mixlab {

// ---------------------------------------------------------------------------
// Random weight samplers

/// "uniform:a:b", "exponential:rate", "lognormal:mu:sigma", "constant:v".
class Sampler {
 public:
  explicit Sampler(std::string_view spec);
  /// Strictly positive draw (zero draws are redrawn).
  double draw(std::mt19937_64& rng) const;
  /// E[log X] in closed form.
  double mean_log() const;
  const std::string& spec() const noexcept { return spec_; }

 private:
  enum class Kind { kUniform, kExponential, kLogNormal, kConstant } kind_;
  double p1_ = 0.0, p2_ = 0.0;
  std::string spec_;
};

/// log p_i for i = 1..count. Rules:
///   const | poly:g (i^g) | heis:g (i^2 e^{-i^g}) | exp:g (e^{-i^g}) | geom:r (r^i)
///   randpoly:g:<sampler> ((X_1+...+X_i)^g) | randexp:<sampler> (X_1 * ... * X_i)
/// Random rules draw X_1, X_2, ... from a generator seeded with `seed`.
std::vector<double> weight_sequence_log(std::string_view rule, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Families

enum class FamilyKind {
  kTriangular,  // F^P: row n has k_n factors chosen by (n, i)
  kNested,      // G^P: row n is the product of the first n factors
};
std::string_view to_string(FamilyKind k) noexcept;

struct FamilySpec {
  FamilyKind kind = FamilyKind::kNested;
  /// Walk descriptor template; "{i}", "{n}", "{i+K}", "{n+K}" are substituted.
  /// Aliases: "cycle" = Z:{i+2}@lazy, "heisenberg" = H:{i+2}@uniform.
  std::string recipe = "cycle";
  std::string weights = "const";
  std::size_t row_length = 0;  // triangular only; 0 means k_n = n
  std::vector<std::size_t> n_values;
  std::uint64_t seed = 42;
  TrendConfig trend;
  std::vector<double> eps_grid{0.25};
  std::vector<double> c_grid{0.5};
  std::size_t cap = kDefaultEnumerationCap;
};

/// "1..60", "2,4,8", "1..10,20,30".
std::vector<std::size_t> parse_index_list(std::string_view text);

/// Flat key = value file; '#' starts a comment. Unknown keys are rejected.
/// Keys: kind, recipe, weights, row_length, n, seed, slope_threshold,
/// growth_ratio, bounded_ratio, burn_in, eps, c, cap.
FamilySpec parse_family_config(std::string_view text, FamilySpec base = {});
/// Round-trips through parse_family_config.
std::string family_config_string(const FamilySpec& fs);

std::string factor_descriptor(std::string_view recipe, std::size_t n, std::size_t i);

/// Diameter of the factor (support of its law). Above the enumeration cap a
/// Heisenberg factor H:m falls back to m - 1, the lower end of its known
/// bracket; anything else over the cap is a capacity error.
struct FactorDiameter {
  std::size_t rho = 0;
  bool exact = true;
};
FactorDiameter factor_diameter(std::string_view descriptor, std::size_t cap = kDefaultEnumerationCap);

struct FamilyRow {
  std::size_t n = 0;
  std::vector<std::string> descriptors;  // factor i
  std::vector<double> log_p;             // raw weight of factor i
  std::vector<std::size_t> rho;
  std::vector<bool> rho_exact;
  double log_q = 0.0;                    // log of the weight total
  std::vector<double> log_l;             // sorted log l_{n,i}, ascending
  std::vector<std::size_t> order;        // factor index behind each sorted entry
  double log_tn = 0.0;
  double log_statistic = 0.0;            // log(t_n l_{n,1})
  /// Nested families whose p_i / rho_i^2 is monotone in i.
  std::optional<Direction> un_direction;
  std::optional<UnResult> un;
  /// a_i = 1, lambda_i = l_{n,i} / l_{n,1}; times on this row are in units of 1/l_{n,1}.
  ExponentialSum proxy;
};

std::vector<FamilyRow> build_family(const FamilySpec& fs);

/// Actual product chain of row n (feasible only for small factors).
ProductWalkSpec family_product(const FamilyRow& row, std::size_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Cutoff reports

struct CutoffRow {
  std::size_t n = 0;
  double log_tn = 0.0;
  double log_l1 = 0.0;
  double statistic = 0.0;  // t_n l_{n,1}
  std::optional<double> log_un;
  std::optional<double> un_statistic;
  std::vector<double> log_mixing;         // log T_n(eps) per eps of the proxy
  std::vector<double> mixing_statistic;   // T_n(eps) l_{n,1}
};

struct CutoffReport {
  FamilySpec spec;
  std::vector<CutoffRow> rows;
  TrendResult trend;
  std::vector<std::string> notes;
};

CutoffReport cutoff_report(const FamilySpec& fs, const std::vector<FamilyRow>& rows);
CutoffReport cutoff_scan(const FamilySpec& fs);

/// The Laplace criterion on the proxy rows of a family.
CriterionReport family_criterion(const FamilySpec& fs, const std::vector<FamilyRow>& rows);

// ---------------------------------------------------------------------------
// Experiments

enum class ExperimentMode { kFormula, kExactSmall };

/// Exact continuous-time checks on a small nested Heisenberg product.
struct ExactSmallRow {
  std::size_t n = 0;
  double t = 0.0;
  double t_over_tn = 0.0;
  double hellinger = 0.0;          // product identity
  ProductHellingerBounds lemma;    // product sandwich
  double proof_lower = 0.0;        // 1 - exp(-g_n(2 C C1 t) / 16), on d_H^2
  double proof_upper = 1.0;        // 1 - exp(-2 C1^2 f_n(eta t / 2C)), on d_H^2
  bool proof_upper_applicable = false;  // t > A t_n
  std::optional<double> flat_hellinger;  // flat-chain oracle when small enough
  std::optional<double> discrete_tv;     // discrete clock at m = round(t)
  std::optional<double> discrete_hellinger;
  bool holds = true;
};

struct HeisenbergExperiment {
  double gamma = 0.0;
  ExperimentMode mode = ExperimentMode::kFormula;
  CutoffReport report;
  std::vector<ExactSmallRow> exact;
};

FamilySpec heisenberg_family(double gamma, std::vector<std::size_t> n_values);
HeisenbergExperiment experiment_heisenberg(double gamma, std::vector<std::size_t> n_values,
                                           ExperimentMode mode = ExperimentMode::kFormula,
                                           const TrendConfig& trend = {});

enum class RandomizedMode { kPoly, kExp };

struct RandomizedSpec {
  RandomizedMode mode = RandomizedMode::kPoly;
  double gamma = 1.0;  // poly mode
  std::string sampler = "uniform:0:2";
  std::uint64_t seed = 42;
  std::size_t trials = 20;
  std::vector<std::size_t> n_values;
  TrendConfig trend;
};

struct RandomizedTrial {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  TrendResult trend;
  std::vector<double> n;
  std::vector<double> statistic;
};

struct RandomizedExperiment {
  RandomizedSpec spec;
  std::vector<RandomizedTrial> trials;
  std::size_t growing = 0, bounded = 0, inconclusive = 0;
};

RandomizedExperiment experiment_randomized(const RandomizedSpec& spec);

}  // namespace mixlab
