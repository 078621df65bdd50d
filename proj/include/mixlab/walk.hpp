#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mixlab/group.hpp"
#include "mixlab/growth.hpp"

namespace mixlab {

/// Probability vector over the elements of a group.
struct Distribution {
  std::vector<double> probs;

  std::size_t size() const noexcept { return probs.size(); }
  double operator[](std::size_t i) const noexcept { return probs[i]; }

  static Distribution delta(std::size_t order, Index x);
  static Distribution uniform(std::size_t order);

  /// Throws invalid-parameter unless entries are >= 0 and sum to 1 (1e-12).
  void validate() const;
};

/// A random walk (G, Q, U): group, increment law and its support.
class WalkSpec {
 public:
  WalkSpec(GroupTable group, Distribution step_law);

  const GroupTable& group() const noexcept { return group_; }
  const Distribution& step_law() const noexcept { return law_; }
  const GeneratorSet& support() const noexcept { return support_; }
  std::span<const std::pair<Index, double>> sparse_law() const noexcept { return sparse_; }

  /// Q(x) = Q(x^{-1}) for every x.
  bool symmetric() const noexcept { return symmetric_; }
  bool lazy() const noexcept { return law_[group_.identity()] >= 0.5; }
  /// min{Q(x) | x in supp Q}
  double eta() const noexcept { return eta_; }

  /// Stable identity for caches: label plus a hash of the law's bit pattern.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

  /// op(z, s_j) for the j-th support element, row-major by z; empty when the
  /// table would be too large (callers then fall back to group().op).
  std::span<const Index> neighbours() const noexcept {
    return neighbours_ ? std::span<const Index>(*neighbours_) : std::span<const Index>();
  }

 private:
  GroupTable group_;
  Distribution law_;
  GeneratorSet support_;
  std::vector<std::pair<Index, double>> sparse_;
  bool symmetric_ = false;
  double eta_ = 0.0;
  std::string fingerprint_;
  std::shared_ptr<const std::vector<Index>> neighbours_;
};

/// Q(id) = 1/2, the remaining mass spread evenly over E \ {id}.
WalkSpec lazy_walk(const GroupTable& g, const GeneratorSet& e);
/// Q uniform on E.
WalkSpec uniform_walk(const GroupTable& g, const GeneratorSet& e);

/// Law names: "lazy", "uniform", or "explicit:p0,p1,..." (one value per
/// element index). Generators as in parse_generators().
WalkSpec parse_walk(const GroupTable& g, std::string_view law, std::string_view gens = "default");

/// Walk descriptor "<group>@<law>[@<gens>]", e.g. "Z:9@lazy@sqrt".
WalkSpec parse_walk_descriptor(std::string_view descriptor,
                               std::size_t cap = kDefaultEnumerationCap);

// ---------------------------------------------------------------------------
// Evolution

/// f*g(x) = sum_z f(z) g(z^{-1} x).
Distribution convolve(const Distribution& f, const Distribution& g, const GroupTable& group);

/// One step of the walk: p * Q, using the sparse law.
Distribution step(const WalkSpec& w, const Distribution& p);

/// Q^{(m)} by repeated squaring.
Distribution walk_distribution(const WalkSpec& w, std::size_t m);

/// Caches Q^{(2^k)} so that many Q^{(m)} share the squaring work.
/// Safe for concurrent use.
class DoublingLadder {
 public:
  explicit DoublingLadder(const WalkSpec& w) : walk_(&w) {}
  Distribution power(std::size_t m) const;

 private:
  const Distribution& rung(std::size_t k) const;

  const WalkSpec* walk_;
  mutable std::mutex mutex_;
  mutable std::vector<Distribution> rungs_;
};

inline constexpr double kDefaultHeatTolerance = 1e-13;

/// H_t(id, .) = e^{-t} sum_m t^m/m! Q^{(m)}, truncated so the dropped Poisson
/// mass is at most `tol`, then renormalised.
Distribution heat_distribution(const WalkSpec& w, double t, double tol = kDefaultHeatTolerance);

/// Poisson window [first, last] with captured mass >= 1 - tol, grown outward
/// from the mode. Weights are returned alongside.
struct PoissonWindow {
  std::size_t first = 0;
  std::vector<double> weights;
  double mass = 0.0;
};
PoissonWindow poisson_window(double t, double tol);

// ---------------------------------------------------------------------------
// Distances to the uniform law

enum class Metric { kTotalVariation, kHellinger };
enum class Clock { kDiscrete, kContinuous };

std::string_view to_string(Metric m) noexcept;
std::string_view to_string(Clock c) noexcept;
Metric parse_metric(std::string_view s);
Clock parse_clock(std::string_view s);

/// sum_y max(p(y) - 1/|G|, 0)
double tv_distance(const Distribution& p);
/// sqrt( (1/2) sum_y (sqrt p(y) - sqrt(1/|G|))^2 )
double hellinger_distance(const Distribution& p);
double distance(const Distribution& p, Metric metric);

/// min over both sides of 1 - sqrt(1 - tv^2) <= h^2 <= tv.
double sandwich_slack(double tv, double hellinger) noexcept;

struct CurvePoint {
  double time = 0.0;
  double tv = 0.0;
  double hellinger = 0.0;
};

/// Discrete curve at m = 0..max_steps by stepping the walk.
std::vector<CurvePoint> discrete_curve(const WalkSpec& w, std::size_t max_steps);
std::vector<CurvePoint> continuous_curve(const WalkSpec& w, std::span<const double> times,
                                         double tol = kDefaultHeatTolerance);

struct MixingOptions {
  std::size_t step_cap = 1u << 22;      // discrete clock
  double time_cap = 1e9;                // continuous clock
  double time_tolerance = 1e-6;         // absolute, continuous clock
  double heat_tolerance = kDefaultHeatTolerance;
};

/// Discrete clock: the smallest m with distance <= eps. Continuous clock: the
/// crossing time located by bisection to `time_tolerance`.
double mixing_time(const WalkSpec& w, Metric metric, Clock clock, double eps,
                   const MixingOptions& options = {});

// ---------------------------------------------------------------------------
// Spectrum

/// 1 - (second largest eigenvalue of K). Dense symmetric eigensolver up to
/// `dense_limit` elements, restarted Lanczos on the complement of the
/// constants above it.
double spectral_gap(const WalkSpec& w, std::size_t dense_limit = 2000);
double spectral_gap_dense(const WalkSpec& w);
/// Stops once the estimated Ritz value error is below rel_tol * gap (or at
/// rounding level). krylov_dim = 0 sizes the basis from a memory budget.
double spectral_gap_lanczos(const WalkSpec& w, double rel_tol = 1e-10,
                            std::size_t krylov_dim = 0, std::size_t max_restarts = 50);
/// Plain deflated power iteration on (I + K)/2. Slow when the gap is tiny;
/// kept as an independent cross-check.
double spectral_gap_power(const WalkSpec& w, double rel_tol = 1e-10,
                          std::size_t max_iterations = 2'000'000);

/// E = supp Q together with the identity: the support of the lazified walk
/// (I + K)/2, which the continuous-time bounds are stated against.
GeneratorSet lazified_support(const WalkSpec& w);

/// Eigenvalues sum_x Q(x) cos(2 pi <k,x>) for every character k of an abelian
/// product of cyclic groups, in the group's index order of k.
std::vector<double> abelian_character_eigenvalues(const WalkSpec& w);

// ---------------------------------------------------------------------------
// Bound checks

enum class CheckStatus { kPass, kFail, kPrerequisiteNotMet, kSkipped };
std::string_view to_string(CheckStatus s) noexcept;

struct BoundSample {
  double time = 0.0;
  double tv = 0.0;
  double hellinger = 0.0;
  std::optional<double> upper;
  std::optional<double> lower;
};

struct BoundVerdict {
  CheckStatus status = CheckStatus::kSkipped;
  std::string note;
  /// min over samples of (bound - value) for upper, (value - bound) for lower
  double min_margin = 0.0;
};

struct ModerateBoundReport {
  double C1 = 0.0;  // A^{1/2} 2^{d(d+3)/4}
  double C2 = 0.0;  // A^2 2^{4d+2}
  double eta = 0.0;
  std::size_t rho = 0;
  BoundVerdict upper;
  BoundVerdict lower;
  std::vector<BoundSample> samples;
};

double moderate_upper_constant(double A, double d);
double moderate_lower_constant(double A, double d);

/// Discrete-time bounds d_TV(m) <= C1 e^{-eta m / rho^2} and, when
/// rho >= A 2^{2d+2}, d_TV(m) >= (1/2) e^{-C2 m / rho^2}. `p` must be the
/// growth profile of the walk's support.
ModerateBoundReport check_moderate_bounds(const WalkSpec& w, const ModerateGrowthCert& cert,
                                          const GrowthProfile& p,
                                          std::span<const std::size_t> steps);

struct ContinuousBoundReport {
  double spectral_gap = 0.0;
  double C1 = 0.0;
  double eta = 0.0;
  std::size_t rho = 0;
  bool rho_at_least_4 = false;
  /// Smallest C with (1/2) e^{-C t / rho^2} <= d_TV(t) on the sampled times.
  double fitted_lower_constant = 0.0;
  BoundVerdict tv_lower;         // d_TV >= (1/2) e^{-lambda t}
  BoundVerdict tv_upper;         // d_TV <= C1 e^{-eta t / (2 rho^2)}
  BoundVerdict hellinger_lower;  // through the TV/Hellinger sandwich
  BoundVerdict hellinger_upper;
  std::vector<BoundSample> samples;  // lower/upper hold the TV bounds
};

ContinuousBoundReport check_cts_bounds(const WalkSpec& w, const GrowthProfile& p,
                                       const ModerateGrowthCert& cert,
                                       std::span<const double> times,
                                       double tol = kDefaultHeatTolerance);

}  // namespace mixlab
