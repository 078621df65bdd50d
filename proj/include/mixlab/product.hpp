#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mixlab/walk.hpp"

namespace mixlab {

/// Product of walks chosen coordinate-wise with probabilities `weights`.
struct ProductWalkSpec {
  std::vector<WalkSpec> factors;
  std::vector<double> weights;

  /// Throws invalid-parameter unless there is at least one factor and the
  /// weights are positive, one per factor, and sum to 1 (1e-12).
  void validate() const;
};

/// Builds weights proportional to `raw` (normalised).
ProductWalkSpec make_product_walk(std::vector<WalkSpec> factors, std::vector<double> raw_weights);

/// The walk on G_1 x ... x G_n with law sum_i p_i (Q_i lifted to coordinate i).
WalkSpec build_flat(const ProductWalkSpec& pw, std::size_t cap = kDefaultEnumerationCap);

/// Memo table for factor quantities that families evaluate many times:
/// continuous Hellinger distances d_H^(c)(t) and Hellinger mixing times.
/// Keys use the walk fingerprint and the exact bit patterns of the arguments.
/// Optionally persisted as a text file under a cache directory. Thread-safe.
class FactorCurveCache {
 public:
  explicit FactorCurveCache(std::optional<std::filesystem::path> directory = std::nullopt);

  double hellinger(const WalkSpec& w, double t, double tol = kDefaultHeatTolerance);
  double hellinger_mixing_time(const WalkSpec& w, double eps);

  std::size_t hits() const;
  std::size_t misses() const;
  const std::optional<std::filesystem::path>& directory() const noexcept { return directory_; }

  /// Process-wide cache; persisted when MIXLAB_CACHE_DIR is set.
  static FactorCurveCache& global();

 private:
  using Key = std::tuple<std::string, char, double, double>;
  std::optional<double> find(const Key& key);
  void store(const Key& key, double value);
  void load();

  std::optional<std::filesystem::path> directory_;
  mutable std::mutex mutex_;
  std::map<Key, double> values_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Continuous-time Hellinger distance of the product from the exact identity
/// d_H^2 = 1 - prod_i (1 - d_{i,H}(p_i t)^2).
double product_hellinger_ct(const ProductWalkSpec& pw, double t,
                            double tol = kDefaultHeatTolerance, FactorCurveCache* cache = nullptr);

/// Combination step of the identity, from factor distances already evaluated
/// at their own times p_i t. Computed with log1p/expm1.
double combine_product_hellinger(const std::vector<double>& factor_distances);

inline constexpr double kDefaultLemmaA = 0.70710678118654752440;  // 1/sqrt(2)

/// Product sandwich, every value on the d_H scale (square roots of the
/// displayed d_H^2 bounds):
///   max_i d_i(p_i t) <= d_H(t),  sqrt(1 - e^{-S}) <= d_H(t) <= sqrt(1 - e^{-S/(1-A^2)})
/// with S = sum_i d_i(p_i t)^2. The upper bound needs t >= max_i T_{i,H}(A)/p_i.
struct ProductHellingerBounds {
  double A = kDefaultLemmaA;
  double max_factor = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  double required_time = 0.0;  // max_i T_{i,H}(A) / p_i
  bool precondition_met = false;
};

ProductHellingerBounds product_hellinger_bounds(const ProductWalkSpec& pw, double t,
                                                double A = kDefaultLemmaA,
                                                double tol = kDefaultHeatTolerance,
                                                FactorCurveCache* cache = nullptr);

/// TV bracket implied by the TV/Hellinger sandwich: [h^2, sqrt(h^2 (2 - h^2))].
struct TvBracket {
  double lower = 0.0;
  double upper = 0.0;
};
TvBracket tv_bracket_from_hellinger(double h);
TvBracket product_tv_bracket(const ProductWalkSpec& pw, double t,
                             double tol = kDefaultHeatTolerance, FactorCurveCache* cache = nullptr);

}  // namespace mixlab
