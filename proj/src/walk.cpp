#include "mixlab/walk.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "mixlab/error.hpp"
#include "mixlab/numeric.hpp"

namespace mixlab {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kSymmetryTolerance = 1e-14;
// Absolute slack when comparing a computed distance with a bound.
constexpr double kBoundSlack = 1e-12;

std::string fingerprint_of(const GroupTable& g, const Distribution& law) {
  std::uint64_t h = 1469598103934665603ull;
  for (double p : law.probs) {
    h ^= std::bit_cast<std::uint64_t>(p);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return g.label() + "#" + buf;
}

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorKind::kInvalidParameter, "cannot parse number from '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

Distribution Distribution::delta(std::size_t order, Index x) {
  require(x < order, "delta index out of range");
  Distribution d;
  d.probs.assign(order, 0.0);
  d.probs[x] = 1.0;
  return d;
}

Distribution Distribution::uniform(std::size_t order) {
  require(order >= 1, "uniform law needs a non-empty group");
  return Distribution{std::vector<double>(order, 1.0 / static_cast<double>(order))};
}

void Distribution::validate() const {
  require(!probs.empty(), "empty distribution");
  for (double p : probs) {
    require(std::isfinite(p) && p >= 0.0, "distribution has a negative or non-finite entry");
  }
  const double total = compensated_sum(probs);
  if (std::abs(total - 1.0) > kMassTolerance) {
    fail(ErrorKind::kInvalidParameter,
         "distribution sums to " + std::to_string(total) + ", expected 1");
  }
}

WalkSpec::WalkSpec(GroupTable group, Distribution step_law)
    : group_(std::move(group)), law_(std::move(step_law)) {
  require(law_.size() == group_.order(), "step law length does not match the group order");
  law_.validate();
  std::vector<Index> members;
  eta_ = 1.0;
  for (Index x = 0; x < law_.size(); ++x) {
    if (law_[x] > 0.0) {
      sparse_.emplace_back(x, law_[x]);
      members.push_back(x);
      eta_ = std::min(eta_, law_[x]);
    }
  }
  support_ = make_generator_set(group_, std::move(members));
  if (!generates(group_, support_.members)) {
    fail(ErrorKind::kNotGenerating, "support of the step law does not generate " + group_.label());
  }
  symmetric_ = std::all_of(sparse_.begin(), sparse_.end(), [&](const auto& entry) {
    return std::abs(entry.second - law_[group_.inv(entry.first)]) <= kSymmetryTolerance;
  });
  fingerprint_ = fingerprint_of(group_, law_);
  constexpr std::size_t kNeighbourTableLimit = std::size_t{1} << 24;
  if (group_.order() * sparse_.size() <= kNeighbourTableLimit) {
    auto table = std::make_shared<std::vector<Index>>(group_.order() * sparse_.size());
    for (Index z = 0; z < group_.order(); ++z) {
      for (std::size_t j = 0; j < sparse_.size(); ++j) (*table)[z * sparse_.size() + j] = group_.op(z, sparse_[j].first);
    }
    neighbours_ = std::move(table);
  }
}

WalkSpec lazy_walk(const GroupTable& g, const GeneratorSet& e) {
  std::vector<double> q(g.order(), 0.0);
  std::size_t moving = 0;
  for (Index x : e.members) moving += (x != g.identity());
  q[g.identity()] = moving == 0 ? 1.0 : 0.5;
  for (Index x : e.members) {
    if (x != g.identity()) q[x] = 0.5 / static_cast<double>(moving);
  }
  return WalkSpec(g, Distribution{std::move(q)});
}

WalkSpec uniform_walk(const GroupTable& g, const GeneratorSet& e) {
  require(!e.members.empty(), "uniform law needs a non-empty set");
  std::vector<double> q(g.order(), 0.0);
  for (Index x : e.members) q[x] = 1.0 / static_cast<double>(e.members.size());
  return WalkSpec(g, Distribution{std::move(q)});
}

WalkSpec parse_walk(const GroupTable& g, std::string_view law, std::string_view gens) {
  if (law == "lazy") return lazy_walk(g, parse_generators(g, gens));
  if (law == "uniform") return uniform_walk(g, parse_generators(g, gens));
  constexpr std::string_view kExplicit = "explicit:";
  if (law.substr(0, kExplicit.size()) == kExplicit) {
    auto body = law.substr(kExplicit.size());
    std::vector<double> q;
    while (true) {
      const auto comma = body.find(',');
      q.push_back(parse_double(body.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      body.remove_prefix(comma + 1);
    }
    return WalkSpec(g, Distribution{std::move(q)});
  }
  fail(ErrorKind::kInvalidParameter, "unknown law '" + std::string(law) + "'");
}

WalkSpec parse_walk_descriptor(std::string_view descriptor, std::size_t cap) {
  const auto first = descriptor.find('@');
  require(first != std::string_view::npos,
          "walk descriptor must look like <group>@<law>[@<gens>]");
  const auto group = parse_group(descriptor.substr(0, first), cap);
  auto rest = descriptor.substr(first + 1);
  const auto second = rest.find('@');
  if (second == std::string_view::npos) return parse_walk(group, rest);
  return parse_walk(group, rest.substr(0, second), rest.substr(second + 1));
}

// ---------------------------------------------------------------------------

Distribution convolve(const Distribution& f, const Distribution& g, const GroupTable& group) {
  require(f.size() == group.order() && g.size() == group.order(),
          "convolution operands do not live on the group");
  std::vector<std::pair<Index, double>> g_sparse;
  for (Index y = 0; y < g.size(); ++y) {
    if (g[y] != 0.0) g_sparse.emplace_back(y, g[y]);
  }
  Distribution out{std::vector<double>(group.order(), 0.0)};
  for (Index z = 0; z < f.size(); ++z) {
    const double fz = f[z];
    if (fz == 0.0) continue;
    for (const auto& [y, gy] : g_sparse) out.probs[group.op(z, y)] += fz * gy;
  }
  return out;
}

Distribution step(const WalkSpec& w, const Distribution& p) {
  const auto& g = w.group();
  const auto nb = w.neighbours();
  const auto law = w.sparse_law();
  const std::size_t k = law.size();
  Distribution out{std::vector<double>(g.order(), 0.0)};
  for (Index z = 0; z < p.size(); ++z) {
    const double pz = p[z];
    if (pz == 0.0) continue;
    if (!nb.empty()) {
      for (std::size_t j = 0; j < k; ++j) out.probs[nb[z * k + j]] += pz * law[j].second;
    } else {
      for (const auto& [s, q] : law) out.probs[g.op(z, s)] += pz * q;
    }
  }
  return out;
}

Distribution walk_distribution(const WalkSpec& w, std::size_t m) {
  const auto& g = w.group();
  // Sparse stepping beats dense squaring for short walks.
  const double stepping = static_cast<double>(m) * static_cast<double>(w.sparse_law().size());
  const double squaring = static_cast<double>(g.order()) * 2.0 * std::log2(static_cast<double>(m) + 1.0);
  if (stepping <= squaring) {
    Distribution p = Distribution::delta(g.order(), g.identity());
    for (std::size_t i = 0; i < m; ++i) p = step(w, p);
    return p;
  }
  Distribution result = Distribution::delta(g.order(), g.identity());
  Distribution base = w.step_law();
  bool first = true;
  while (m > 0) {
    if (m & 1u) {
      result = first ? base : convolve(result, base, g);
      first = false;
    }
    m >>= 1u;
    if (m > 0) base = convolve(base, base, g);
  }
  return result;
}

const Distribution& DoublingLadder::rung(std::size_t k) const {
  // Caller holds the mutex.
  if (rungs_.empty()) rungs_.push_back(walk_->step_law());
  while (rungs_.size() <= k) {
    const auto& last = rungs_.back();
    rungs_.push_back(convolve(last, last, walk_->group()));
  }
  return rungs_[k];
}

Distribution DoublingLadder::power(std::size_t m) const {
  const auto& g = walk_->group();
  Distribution result = Distribution::delta(g.order(), g.identity());
  std::lock_guard lock(mutex_);
  bool first = true;
  for (std::size_t k = 0; m > 0; ++k, m >>= 1u) {
    if (m & 1u) {
      result = first ? rung(k) : convolve(result, rung(k), g);
      first = false;
    }
  }
  return result;
}

PoissonWindow poisson_window(double t, double tol) {
  require(t >= 0.0 && std::isfinite(t), "time must be finite and >= 0");
  require(tol > 0.0 && tol <= 1e-6, "tolerance must lie in (0, 1e-6]");
  PoissonWindow win;
  if (t == 0.0) {
    win.weights = {1.0};
    win.mass = 1.0;
    return win;
  }
  const double log_t = std::log(t);
  const auto log_weight = [&](std::size_t m) {
    const double md = static_cast<double>(m);
    return -t + md * log_t - std::lgamma(md + 1.0);
  };
  const auto mode = static_cast<std::size_t>(std::floor(t));
  std::vector<double> left;   // mode-1, mode-2, ...
  std::vector<double> right;  // mode, mode+1, ...
  CompensatedSum mass;
  right.push_back(std::exp(log_weight(mode)));
  mass.add(right.back());
  std::size_t lo = mode, hi = mode;
  while (1.0 - mass.value() > tol) {
    const double wl = lo > 0 ? std::exp(log_weight(lo - 1)) : 0.0;
    const double wr = std::exp(log_weight(hi + 1));
    if (wl == 0.0 && wr == 0.0) break;
    if (wl >= wr) {
      left.push_back(wl);
      mass.add(wl);
      --lo;
    } else {
      right.push_back(wr);
      mass.add(wr);
      ++hi;
    }
  }
  win.first = lo;
  win.weights.assign(left.rbegin(), left.rend());
  win.weights.insert(win.weights.end(), right.begin(), right.end());
  win.mass = mass.value();
  return win;
}

Distribution heat_distribution(const WalkSpec& w, double t, double tol) {
  const auto& g = w.group();
  const auto win = poisson_window(t, tol);
  // Reach Q^{(first)} by stepping or by squaring, whichever is cheaper.
  Distribution p;
  const double stepping = static_cast<double>(win.first) * static_cast<double>(w.sparse_law().size());
  const double squaring = static_cast<double>(g.order()) *
                          (2.0 * std::log2(static_cast<double>(win.first) + 1.0) + 1.0);
  if (stepping <= squaring) {
    p = Distribution::delta(g.order(), g.identity());
    for (std::size_t m = 0; m < win.first; ++m) p = step(w, p);
  } else {
    p = walk_distribution(w, win.first);
  }
  std::vector<double> acc(g.order(), 0.0);
  for (std::size_t k = 0; k < win.weights.size(); ++k) {
    if (k > 0) p = step(w, p);
    const double weight = win.weights[k];
    for (std::size_t x = 0; x < acc.size(); ++x) acc[x] += weight * p[x];
  }
  for (double& a : acc) a /= win.mass;
  return Distribution{std::move(acc)};
}

// ---------------------------------------------------------------------------

std::string_view to_string(Metric m) noexcept {
  return m == Metric::kTotalVariation ? "tv" : "hellinger";
}

std::string_view to_string(Clock c) noexcept {
  return c == Clock::kDiscrete ? "discrete" : "continuous";
}

Metric parse_metric(std::string_view s) {
  if (s == "tv") return Metric::kTotalVariation;
  if (s == "hellinger") return Metric::kHellinger;
  fail(ErrorKind::kInvalidParameter, "unknown metric '" + std::string(s) + "'");
}

Clock parse_clock(std::string_view s) {
  if (s == "discrete") return Clock::kDiscrete;
  if (s == "continuous") return Clock::kContinuous;
  fail(ErrorKind::kInvalidParameter, "unknown clock '" + std::string(s) + "'");
}

double tv_distance(const Distribution& p) {
  const double u = 1.0 / static_cast<double>(p.size());
  CompensatedSum acc;
  for (double x : p.probs) {
    if (x > u) acc.add(x - u);
  }
  return std::clamp(acc.value(), 0.0, 1.0);
}

double hellinger_distance(const Distribution& p) {
  const double su = std::sqrt(1.0 / static_cast<double>(p.size()));
  CompensatedSum acc;
  for (double x : p.probs) {
    const double diff = std::sqrt(std::max(x, 0.0)) - su;
    acc.add(diff * diff);
  }
  return std::sqrt(std::clamp(0.5 * acc.value(), 0.0, 1.0));
}

double distance(const Distribution& p, Metric metric) {
  return metric == Metric::kTotalVariation ? tv_distance(p) : hellinger_distance(p);
}

double sandwich_slack(double tv, double hellinger) noexcept {
  const double h2 = hellinger * hellinger;
  const double low = 1.0 - std::sqrt(std::max(0.0, 1.0 - tv * tv));
  return std::min(h2 - low, tv - h2);
}

std::vector<CurvePoint> discrete_curve(const WalkSpec& w, std::size_t max_steps) {
  std::vector<CurvePoint> out;
  out.reserve(max_steps + 1);
  auto p = Distribution::delta(w.group().order(), w.group().identity());
  for (std::size_t m = 0; m <= max_steps; ++m) {
    if (m > 0) p = step(w, p);
    out.push_back({static_cast<double>(m), tv_distance(p), hellinger_distance(p)});
  }
  return out;
}

std::vector<CurvePoint> continuous_curve(const WalkSpec& w, std::span<const double> times,
                                         double tol) {
  std::vector<CurvePoint> out;
  out.reserve(times.size());
  for (double t : times) {
    const auto h = heat_distribution(w, t, tol);
    out.push_back({t, tv_distance(h), hellinger_distance(h)});
  }
  return out;
}

double mixing_time(const WalkSpec& w, Metric metric, Clock clock, double eps,
                   const MixingOptions& options) {
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0, 1)");
  const auto& g = w.group();
  if (distance(Distribution::delta(g.order(), g.identity()), metric) <= eps) return 0.0;

  if (clock == Clock::kDiscrete) {
    // Both distances are non-increasing in m: double, then bisect.
    DoublingLadder ladder(w);
    std::size_t hi = 1;
    while (distance(ladder.power(hi), metric) > eps) {
      if (hi > options.step_cap / 2) {
        fail(ErrorKind::kCapExceeded, "no mixing within " + std::to_string(options.step_cap) + " steps");
      }
      hi *= 2;
    }
    std::size_t lo = hi / 2;  // distance(lo) > eps (lo = 0 handled above)
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (distance(ladder.power(mid), metric) <= eps ? hi : lo) = mid;
    }
    return static_cast<double>(hi);
  }

  const auto dist_at = [&](double t) {
    return distance(heat_distribution(w, t, options.heat_tolerance), metric);
  };
  double hi = 1.0;
  while (dist_at(hi) > eps) {
    if (hi > options.time_cap) {
      fail(ErrorKind::kCapExceeded, "no mixing before time " + std::to_string(options.time_cap));
    }
    hi *= 2.0;
  }
  double lo = hi == 1.0 ? 0.0 : hi / 2.0;
  while (hi - lo > options.time_tolerance) {
    const double mid = 0.5 * (lo + hi);
    (dist_at(mid) <= eps ? hi : lo) = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------

namespace {

void require_symmetric(const WalkSpec& w) {
  if (!w.symmetric()) fail(ErrorKind::kUnsupported, "spectral gap needs a symmetric step law");
  require(w.group().order() >= 2, "spectral gap needs at least two elements");
}

// Flattened cyclic coordinates (first factor most significant).
void cyclic_coords(const GroupTable& g, Index x, std::vector<std::uint32_t>& out) {
  if (g.kind() == GroupTable::Kind::kCyclic) {
    out.push_back(x);
    return;
  }
  const auto coords = g.coordinates(x);
  const auto fs = g.factors();
  for (std::size_t f = 0; f < fs.size(); ++f) cyclic_coords(fs[f], coords[f], out);
}

}  // namespace

double spectral_gap_dense(const WalkSpec& w) {
  require_symmetric(w);
  const auto& g = w.group();
  const auto n = static_cast<Eigen::Index>(g.order());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Index x = 0; x < g.order(); ++x) {
    for (const auto& [s, q] : w.sparse_law()) k(x, g.op(x, s)) += q;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) fail(ErrorKind::kUnsupported, "eigensolver did not converge");
  return 1.0 - solver.eigenvalues()(n - 2);
}

double spectral_gap_power(const WalkSpec& w, double rel_tol, std::size_t max_iterations) {
  require_symmetric(w);
  const auto& g = w.group();
  const std::size_t n = g.order();
  // Iterate M = (I + K)/2, which is positive semi-definite, on the complement
  // of the constants.
  std::mt19937_64 rng(0x5eed5eedull);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> v(n), mv(n);
  for (auto& x : v) x = unif(rng);
  const auto project_normalize = [](std::vector<double>& x) {
    const double mean = compensated_sum(x) / static_cast<double>(x.size());
    double norm = 0.0;
    for (auto& xi : x) {
      xi -= mean;
      norm += xi * xi;
    }
    norm = std::sqrt(norm);
    for (auto& xi : x) xi /= norm;
  };
  project_normalize(v);
  double prev_gap = 0.0, prev_delta = 0.0;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (const auto& [s, q] : w.sparse_law()) acc += q * v[g.op(static_cast<Index>(x), s)];
      mv[x] = 0.5 * (v[x] + acc);
    }
    double rayleigh = 0.0;
    for (std::size_t x = 0; x < n; ++x) rayleigh += v[x] * mv[x];
    const double gap = 2.0 * (1.0 - rayleigh);
    v.swap(mv);
    project_normalize(v);
    if (it > 2) {
      // Geometric error model: the remaining error is delta * r / (1 - r).
      const double delta = std::abs(gap - prev_gap);
      const double r = prev_delta > 0.0 ? std::min(delta / prev_delta, 0.999999) : 0.0;
      const double remaining = delta * r / (1.0 - r) + delta;
      if (remaining <= rel_tol * std::abs(gap)) return gap;
      prev_delta = delta;
    } else if (it > 0) {
      prev_delta = std::abs(gap - prev_gap);
    }
    prev_gap = gap;
  }
  fail(ErrorKind::kCapExceeded, "power iteration did not converge");
}

namespace {

// Largest eigenpair (and the runner-up eigenvalue) of the Lanczos
// tridiagonal matrix with diagonal alpha and off-diagonal beta[0..k-2].
struct RitzPair {
  double theta = 0.0;
  double next = 0.0;
  Eigen::VectorXd vector;
};

RitzPair top_ritz_pair(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const auto k = static_cast<Eigen::Index>(alpha.size());
  RitzPair out;
  if (k == 1) {
    out.theta = alpha[0];
    out.next = -std::numeric_limits<double>::infinity();
    out.vector = Eigen::VectorXd::Ones(1);
    return out;
  }
  Eigen::VectorXd diag(k), sub(k - 1);
  for (Eigen::Index i = 0; i < k; ++i) diag(i) = alpha[i];
  for (Eigen::Index i = 0; i + 1 < k; ++i) sub(i) = beta[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  out.theta = solver.eigenvalues()(k - 1);
  out.next = solver.eigenvalues()(k - 2);
  // Inverse iteration with a slightly shifted theta, tridiagonal solves.
  const double shift = out.theta + 1e-13 * std::max(1.0, std::abs(out.theta));
  Eigen::VectorXd x = Eigen::VectorXd::Ones(k);
  Eigen::VectorXd c(k), d(k);
  for (int pass = 0; pass < 3; ++pass) {
    // Thomas algorithm on (T - shift I) y = x.
    double denom = diag(0) - shift;
    c(0) = sub(0) / denom;
    d(0) = x(0) / denom;
    for (Eigen::Index i = 1; i < k; ++i) {
      denom = diag(i) - shift - sub(i - 1) * c(i - 1);
      if (denom == 0.0) denom = 1e-300;
      if (i + 1 < k) c(i) = sub(i) / denom;
      d(i) = (x(i) - sub(i - 1) * d(i - 1)) / denom;
    }
    x(k - 1) = d(k - 1);
    for (Eigen::Index i = k - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    x.normalize();
  }
  out.vector = x;
  return out;
}

}  // namespace

double spectral_gap_lanczos(const WalkSpec& w, double rel_tol, std::size_t krylov_dim,
                            std::size_t max_restarts) {
  require_symmetric(w);
  const auto& g = w.group();
  const std::size_t n = g.order();
  constexpr std::size_t kBasisBudget = 30'000'000;  // doubles held by the basis
  if (krylov_dim == 0) krylov_dim = std::max<std::size_t>(64, kBasisBudget / n);
  const std::size_t dim = std::min(krylov_dim, n - 1);

  const auto apply_k = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t x = 0; x < n; ++x) {
      double acc = 0.0;
      for (const auto& [s, q] : w.sparse_law()) acc += q * v[g.op(static_cast<Index>(x), s)];
      out[x] = acc;
    }
  };
  const auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
  };
  const auto deflate = [](std::vector<double>& x) {
    const double mean = compensated_sum(x) / static_cast<double>(x.size());
    for (auto& xi : x) xi -= mean;
  };
  const auto normalize = [&](std::vector<double>& x) {
    const double norm = std::sqrt(dot(x, x));
    for (auto& xi : x) xi /= norm;
  };

  std::mt19937_64 rng(0x1a2c05ull);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> start(n);
  for (auto& x : start) x = unif(rng);
  deflate(start);
  normalize(start);

  const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon();
  std::vector<std::vector<double>> basis;
  std::vector<double> w_vec(n);
  for (std::size_t restart = 0; restart <= max_restarts; ++restart) {
    basis.assign(1, start);
    std::vector<double> alpha, beta;
    double gap = 0.0;
    Eigen::VectorXd ritz;
    for (std::size_t j = 0; j < dim; ++j) {
      apply_k(basis[j], w_vec);
      deflate(w_vec);
      alpha.push_back(dot(basis[j], w_vec));
      // Full reorthogonalisation against the whole basis, applied twice.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) {
          const double c = dot(b, w_vec);
          for (std::size_t i = 0; i < n; ++i) w_vec[i] -= c * b[i];
        }
      }
      const double b = std::sqrt(dot(w_vec, w_vec));
      beta.push_back(b);
      const bool exhausted = b <= floor_tol;
      const bool last = exhausted || j + 1 == dim;
      if (last || j % 8 == 7) {
        const auto ritz_pair = top_ritz_pair(alpha, beta);
        const auto k = static_cast<Eigen::Index>(alpha.size());
        const double theta = ritz_pair.theta;
        ritz = ritz_pair.vector;
        gap = 1.0 - theta;
        // The Ritz value error is at most the residual, and about
        // residual^2 / delta once the residual is below the distance delta
        // to the next Ritz value.
        const double residual = std::abs(b * ritz(k - 1));
        double error = residual;
        if (k >= 2) {
          const double delta = theta - ritz_pair.next;
          if (delta > residual) error = std::min(error, residual * residual / delta);
        }
        if (exhausted || error <= std::max(rel_tol * std::abs(gap), floor_tol)) return gap;
      }
      if (last) break;
      for (auto& x : w_vec) x /= b;
      basis.push_back(w_vec);
    }
    // Basis budget used up: restart from the Ritz vector.
    std::fill(start.begin(), start.end(), 0.0);
    for (Eigen::Index i = 0; i < ritz.size(); ++i) {
      for (std::size_t x = 0; x < n; ++x) start[x] += ritz(i) * basis[i][x];
    }
    deflate(start);
    normalize(start);
  }
  fail(ErrorKind::kCapExceeded, "Lanczos iteration did not converge");
}

double spectral_gap(const WalkSpec& w, std::size_t dense_limit) {
  return w.group().order() <= dense_limit ? spectral_gap_dense(w) : spectral_gap_lanczos(w);
}

GeneratorSet lazified_support(const WalkSpec& w) {
  auto members = w.support().members;
  members.push_back(w.group().identity());
  return make_generator_set(w.group(), std::move(members));
}

std::vector<double> abelian_character_eigenvalues(const WalkSpec& w) {
  const auto& g = w.group();
  if (!g.is_abelian_cyclic_product()) {
    fail(ErrorKind::kUnsupported, "character formula needs a product of cyclic groups");
  }
  const auto moduli = g.cyclic_moduli();
  std::vector<std::pair<std::vector<std::uint32_t>, double>> support;
  for (const auto& [x, q] : w.sparse_law()) {
    std::vector<std::uint32_t> c;
    cyclic_coords(g, x, c);
    support.emplace_back(std::move(c), q);
  }
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::vector<double> out(g.order());
  std::vector<std::uint32_t> k;
  for (Index ki = 0; ki < g.order(); ++ki) {
    k.clear();
    cyclic_coords(g, ki, k);
    CompensatedSum acc;
    for (const auto& [x, q] : support) {
      double phase = 0.0;
      for (std::size_t f = 0; f < moduli.size(); ++f) {
        const std::uint64_t kx = (std::uint64_t{k[f]} * x[f]) % moduli[f];
        phase += static_cast<double>(kx) / moduli[f];
      }
      acc.add(q * std::cos(kTwoPi * phase));
    }
    out[ki] = acc.value();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(CheckStatus s) noexcept {
  switch (s) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kPrerequisiteNotMet: return "prerequisite not met";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

double moderate_upper_constant(double A, double d) {
  return std::sqrt(A) * std::exp2(d * (d + 3.0) / 4.0);
}

double moderate_lower_constant(double A, double d) {
  return A * A * std::exp2(4.0 * d + 2.0);
}

namespace {

// Fills status and margin from per-sample margins (negative = violation).
void settle(BoundVerdict& v, const std::vector<double>& margins) {
  v.status = CheckStatus::kPass;
  v.min_margin = margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end());
  if (v.min_margin < -kBoundSlack) v.status = CheckStatus::kFail;
}

std::string walk_prerequisites(const WalkSpec& w, const ModerateGrowthCert& cert,
                               const GrowthProfile& p) {
  if (!w.symmetric()) return "step law is not symmetric";
  if (p.group_order != w.group().order()) return "growth profile belongs to another group";
  if (!cert.satisfied) return "moderate growth certificate is not satisfied";
  if (!(w.eta() > 0.0)) return "eta is not positive";
  return {};
}

}  // namespace

ModerateBoundReport check_moderate_bounds(const WalkSpec& w, const ModerateGrowthCert& cert,
                                          const GrowthProfile& p,
                                          std::span<const std::size_t> steps) {
  ModerateBoundReport r;
  r.C1 = moderate_upper_constant(cert.A, cert.d);
  r.C2 = moderate_lower_constant(cert.A, cert.d);
  r.eta = w.eta();
  r.rho = p.diameter;

  std::string upper_gate = walk_prerequisites(w, cert, p);
  if (upper_gate.empty() && !w.support().contains(w.group().identity())) {
    upper_gate = "support does not contain the identity";
  }
  std::string lower_gate = upper_gate;
  const double rho_needed = cert.A * std::exp2(2.0 * cert.d + 2.0);
  if (lower_gate.empty() && static_cast<double>(r.rho) < rho_needed) {
    lower_gate = "rho = " + std::to_string(r.rho) + " < A 2^(2d+2) = " + std::to_string(rho_needed);
  }

  const std::size_t max_step = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  const auto curve = discrete_curve(w, max_step);
  const double rho2 = static_cast<double>(r.rho) * static_cast<double>(r.rho);
  std::vector<double> upper_margins, lower_margins;
  for (std::size_t m : steps) {
    const auto& pt = curve[m];
    BoundSample s{pt.time, pt.tv, pt.hellinger, std::nullopt, std::nullopt};
    const double md = static_cast<double>(m);
    if (upper_gate.empty()) {
      s.upper = r.C1 * std::exp(-r.eta * md / rho2);
      upper_margins.push_back(*s.upper - pt.tv);
    }
    if (lower_gate.empty()) {
      s.lower = 0.5 * std::exp(-r.C2 * md / rho2);
      lower_margins.push_back(pt.tv - *s.lower);
    }
    r.samples.push_back(s);
  }
  if (upper_gate.empty()) {
    settle(r.upper, upper_margins);
  } else {
    r.upper = {CheckStatus::kPrerequisiteNotMet, upper_gate, 0.0};
  }
  if (lower_gate.empty()) {
    settle(r.lower, lower_margins);
  } else {
    r.lower = {CheckStatus::kPrerequisiteNotMet, lower_gate, 0.0};
  }
  return r;
}

ContinuousBoundReport check_cts_bounds(const WalkSpec& w, const GrowthProfile& p,
                                       const ModerateGrowthCert& cert,
                                       std::span<const double> times, double tol) {
  ContinuousBoundReport r;
  r.C1 = moderate_upper_constant(cert.A, cert.d);
  r.eta = w.eta();
  r.rho = p.diameter;
  r.rho_at_least_4 = r.rho >= 4;
  const std::string symmetric_gate = w.symmetric() ? std::string{} : "step law is not symmetric";
  const std::string upper_gate = walk_prerequisites(w, cert, p);
  if (symmetric_gate.empty()) r.spectral_gap = spectral_gap(w);

  const double rho2 = static_cast<double>(r.rho) * static_cast<double>(r.rho);
  std::vector<double> tl, tu, hl, hu;
  for (const auto& pt : continuous_curve(w, times, tol)) {
    BoundSample s{pt.time, pt.tv, pt.hellinger, std::nullopt, std::nullopt};
    if (symmetric_gate.empty()) {
      const double lower = 0.5 * std::exp(-r.spectral_gap * pt.time);
      s.lower = lower;
      tl.push_back(pt.tv - lower);
      hl.push_back(pt.hellinger - std::sqrt(1.0 - std::sqrt(1.0 - lower * lower)));
      if (pt.time > 0.0 && pt.tv > 0.0) {
        r.fitted_lower_constant =
            std::max(r.fitted_lower_constant, -rho2 * std::log(2.0 * pt.tv) / pt.time);
      }
    }
    if (upper_gate.empty()) {
      const double upper = r.C1 * std::exp(-r.eta * pt.time / (2.0 * rho2));
      s.upper = upper;
      tu.push_back(upper - pt.tv);
      hu.push_back(std::sqrt(std::min(1.0, upper)) - pt.hellinger);
    }
    r.samples.push_back(s);
  }
  if (symmetric_gate.empty()) {
    settle(r.tv_lower, tl);
    settle(r.hellinger_lower, hl);
  } else {
    r.tv_lower = r.hellinger_lower = {CheckStatus::kPrerequisiteNotMet, symmetric_gate, 0.0};
  }
  if (upper_gate.empty()) {
    settle(r.tv_upper, tu);
    settle(r.hellinger_upper, hu);
  } else {
    r.tv_upper = r.hellinger_upper = {CheckStatus::kPrerequisiteNotMet, upper_gate, 0.0};
  }
  return r;
}

}  // namespace mixlab
