#include "mixlab/product.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mixlab/error.hpp"
#include "mixlab/numeric.hpp"

namespace mixlab {

void ProductWalkSpec::validate() const {
  require(!factors.empty(), "a product needs at least one factor");
  require(weights.size() == factors.size(), "one weight per factor is required");
  for (double p : weights) require(std::isfinite(p) && p > 0.0, "product weights must be positive");
  require(std::abs(compensated_sum(weights) - 1.0) <= 1e-12, "product weights must sum to 1");
}

ProductWalkSpec make_product_walk(std::vector<WalkSpec> factors, std::vector<double> raw_weights) {
  require(raw_weights.size() == factors.size(), "one weight per factor is required");
  for (double p : raw_weights) require(std::isfinite(p) && p > 0.0, "product weights must be positive");
  const double total = compensated_sum(raw_weights);
  for (double& p : raw_weights) p /= total;
  ProductWalkSpec pw{std::move(factors), std::move(raw_weights)};
  pw.validate();
  return pw;
}

WalkSpec build_flat(const ProductWalkSpec& pw, std::size_t cap) {
  pw.validate();
  std::vector<GroupTable> groups;
  for (const auto& f : pw.factors) groups.push_back(f.group());
  const auto g = make_product(groups, cap);
  std::vector<double> q(g.order(), 0.0);
  for (std::size_t i = 0; i < pw.factors.size(); ++i) {
    for (const auto& [s, qs] : pw.factors[i].sparse_law()) q[g.lift(i, s)] += pw.weights[i] * qs;
  }
  return WalkSpec(g, Distribution{std::move(q)});
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kHellingerTag = 'h';
constexpr char kMixingTag = 'm';
constexpr const char* kCacheFile = "factor_cache.txt";

std::string hex_bits(double x) {
  std::ostringstream os;
  os << std::hex << std::bit_cast<std::uint64_t>(x);
  return os.str();
}

double from_hex_bits(const std::string& s) {
  return std::bit_cast<double>(static_cast<std::uint64_t>(std::stoull(s, nullptr, 16)));
}

}  // namespace

FactorCurveCache::FactorCurveCache(std::optional<std::filesystem::path> directory)
    : directory_(std::move(directory)) {
  if (directory_) load();
}

FactorCurveCache& FactorCurveCache::global() {
  static FactorCurveCache cache = [] {
    const char* dir = std::getenv("MIXLAB_CACHE_DIR");
    return dir && *dir ? FactorCurveCache(std::filesystem::path(dir)) : FactorCurveCache();
  }();
  return cache;
}

void FactorCurveCache::load() {
  std::ifstream in(*directory_ / kCacheFile);
  std::string fp, tag, a, b, v;
  // One entry per line: fingerprint tag arg tol value (doubles as hex bits).
  while (in >> fp >> tag >> a >> b >> v) {
    try {
      values_[{fp, tag.at(0), from_hex_bits(a), from_hex_bits(b)}] = from_hex_bits(v);
    } catch (const std::exception&) {
      // Ignore damaged lines; the value is simply recomputed.
    }
  }
}

std::optional<double> FactorCurveCache::find(const Key& key) {
  std::lock_guard lock(mutex_);
  const auto it = values_.find(key);
  if (it == values_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

void FactorCurveCache::store(const Key& key, double value) {
  std::lock_guard lock(mutex_);
  if (!values_.emplace(key, value).second) return;  // another writer got there first
  if (!directory_) return;
  std::filesystem::create_directories(*directory_);
  std::ofstream out(*directory_ / kCacheFile, std::ios::app);
  out << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << hex_bits(std::get<2>(key)) << ' '
      << hex_bits(std::get<3>(key)) << ' ' << hex_bits(value) << '\n';
}

double FactorCurveCache::hellinger(const WalkSpec& w, double t, double tol) {
  const Key key{w.fingerprint(), kHellingerTag, t, tol};
  if (auto v = find(key)) return *v;
  const double value = hellinger_distance(heat_distribution(w, t, tol));
  store(key, value);
  return value;
}

double FactorCurveCache::hellinger_mixing_time(const WalkSpec& w, double eps) {
  const Key key{w.fingerprint(), kMixingTag, eps, 0.0};
  if (auto v = find(key)) return *v;
  const double value = mixing_time(w, Metric::kHellinger, Clock::kContinuous, eps);
  store(key, value);
  return value;
}

std::size_t FactorCurveCache::hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t FactorCurveCache::misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> factor_distances(const ProductWalkSpec& pw, double t, double tol,
                                     FactorCurveCache* cache) {
  pw.validate();
  require(t >= 0.0 && std::isfinite(t), "time must be finite and >= 0");
  auto& c = cache ? *cache : FactorCurveCache::global();
  std::vector<double> d;
  d.reserve(pw.factors.size());
  for (std::size_t i = 0; i < pw.factors.size(); ++i) {
    d.push_back(c.hellinger(pw.factors[i], pw.weights[i] * t, tol));
  }
  return d;
}

}  // namespace

double combine_product_hellinger(const std::vector<double>& factor_distances) {
  double log_keep = 0.0;  // log prod (1 - d_i^2)
  for (double d : factor_distances) {
    const double d2 = d * d;
    if (d2 >= 1.0) return 1.0;
    log_keep += std::log1p(-d2);
  }
  return std::sqrt(std::clamp(-std::expm1(log_keep), 0.0, 1.0));
}

double product_hellinger_ct(const ProductWalkSpec& pw, double t, double tol, FactorCurveCache* cache) {
  return combine_product_hellinger(factor_distances(pw, t, tol, cache));
}

ProductHellingerBounds product_hellinger_bounds(const ProductWalkSpec& pw, double t, double A,
                                                double tol, FactorCurveCache* cache) {
  require(A > 0.0 && A < 1.0, "A must lie in (0, 1)");
  const auto d = factor_distances(pw, t, tol, cache);
  auto& c = cache ? *cache : FactorCurveCache::global();
  ProductHellingerBounds b;
  b.A = A;
  CompensatedSum s;
  for (double di : d) {
    b.max_factor = std::max(b.max_factor, di);
    s.add(di * di);
  }
  b.lower = std::sqrt(-std::expm1(-s.value()));
  b.upper = std::sqrt(-std::expm1(-s.value() / (1.0 - A * A)));
  for (std::size_t i = 0; i < pw.factors.size(); ++i) {
    b.required_time =
        std::max(b.required_time, c.hellinger_mixing_time(pw.factors[i], A) / pw.weights[i]);
  }
  b.precondition_met = t >= b.required_time;
  return b;
}

TvBracket tv_bracket_from_hellinger(double h) {
  const double h2 = std::clamp(h * h, 0.0, 1.0);
  return {h2, std::clamp(std::sqrt(h2 * (2.0 - h2)), 0.0, 1.0)};
}

TvBracket product_tv_bracket(const ProductWalkSpec& pw, double t, double tol, FactorCurveCache* cache) {
  return tv_bracket_from_hellinger(product_hellinger_ct(pw, t, tol, cache));
}

}  // namespace mixlab
