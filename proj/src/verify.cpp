#include "mixlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "json.hpp"
#include "mixlab/error.hpp"
#include "mixlab/growth.hpp"

namespace mixlab {

namespace {

constexpr double kSlack = 1e-10;
constexpr double kIdentityTol = 1e-9;
constexpr double kWitnessGap = 1e-3;
constexpr std::size_t kAxiomLimit = 1000;
constexpr std::size_t kSubmultHorizon = 40;
constexpr std::size_t kModerateSteps = 100;
constexpr std::size_t kRandomDistributions = 64;

// Tracks the worst slack over many cases of one check.
struct Tally {
  double margin = std::numeric_limits<double>::infinity();
  std::size_t cases = 0;
  std::string worst;
  void add(double slack, const std::string& where) {
    ++cases;
    if (slack < margin) {
      margin = slack;
      worst = where;
    }
  }
  CheckResult result(std::string suite, const std::string& fixture, double floor = -kSlack) const {
    CheckResult r;
    r.suite = std::move(suite);
    r.fixture = fixture;
    r.cases = cases;
    r.margin = cases ? margin : 0.0;
    r.status = cases == 0 ? CheckStatus::kSkipped : margin >= floor ? CheckStatus::kPass : CheckStatus::kFail;
    if (cases) r.detail = "worst at " + worst;
    return r;
  }
};

CheckResult skipped(std::string suite, const std::string& fixture, std::string why) {
  CheckResult r;
  r.suite = std::move(suite);
  r.fixture = fixture;
  r.status = CheckStatus::kSkipped;
  r.detail = std::move(why);
  return r;
}

std::string at(const char* what, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.17g", what, v);
  return buf;
}

double growth_dimension(const GroupTable& g) {
  switch (g.kind()) {
    case GroupTable::Kind::kCyclic: return 1.0;
    case GroupTable::Kind::kHeisenberg: return 3.0;
    case GroupTable::Kind::kProduct: {
      double d = 0.0;
      for (const auto& f : g.factors()) d += growth_dimension(f);
      return d;
    }
  }
  return 1.0;
}

// Profile of supp Q with the identity added; the time scale rho^2 comes from it.
GrowthProfile lazy_profile(const WalkSpec& w) { return growth_profile(w.group(), lazified_support(w)); }

std::vector<double> continuous_grid(double rho) {
  const double r2 = rho * rho;
  std::vector<double> t{0.0, 0.5, 1.0, 2.0, 4.0, 8.0, r2, 4.0 * r2};
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// --- suites -----------------------------------------------------------------

CheckResult suite_axioms(const VerifyFixture& f, const VerifyOptions&) {
  const auto& g = f.walk.group();
  const std::size_t n = g.order();
  if (n > kAxiomLimit) return skipped("group-axioms", f.name, "order above the exhaustive limit");
  Tally t;
  const Index e = g.identity();
  for (Index x = 0; x < n; ++x) {
    t.add(g.op(e, x) == x && g.op(x, e) == x && g.op(x, g.inv(x)) == e ? 0.0 : -1.0, "x=" + std::to_string(x));
    for (Index y = 0; y < n; ++y) {
      const Index xy = g.op(x, y);
      bool ok = true;
      for (Index z = 0; z < n && ok; ++z) ok = g.op(xy, z) == g.op(x, g.op(y, z));
      if (!ok) t.add(-1.0, "associativity x=" + std::to_string(x) + " y=" + std::to_string(y));
    }
  }
  return t.result("group-axioms", f.name);
}

CheckResult suite_growth(const VerifyFixture& f, const VerifyOptions&) {
  const auto& w = f.walk;
  Tally t;
  const auto support = w.support();
  const bool has_id = support.contains(w.group().identity());
  const auto p = growth_profile(w.group(), support);
  for (std::size_t m = 2; m <= p.diameter; ++m) {
    t.add(static_cast<double>(p.volume(m)) - static_cast<double>(p.volume(m - 1)), "m=" + std::to_string(m));
  }
  if (has_id) {
    t.add(p.volume(1) == support.members.size() ? 0.0 : -1.0, "V(1)");
  }
  t.add(p.volume(p.diameter) == w.group().order() ? 0.0 : -1.0, "V(rho)");
  if (f.product) {
    std::size_t sum = 0;
    bool lazy_factors = true;
    for (const auto& fac : f.product->factors) {
      lazy_factors &= fac.support().contains(fac.group().identity());
      sum += growth_profile(fac.group(), fac.support()).diameter;
    }
    if (lazy_factors) t.add(sum == p.diameter ? 0.0 : -1.0, "rho = sum of factor diameters");
  }
  return t.result("growth", f.name);
}

CheckResult suite_sandwich(const VerifyFixture& f, const VerifyOptions& o) {
  const auto& w = f.walk;
  Tally t;
  for (const auto& pt : discrete_curve(w, o.max_step)) {
    t.add(sandwich_slack(pt.tv, pt.hellinger), at("m", pt.time));
  }
  const auto prof = lazy_profile(w);
  const auto times = continuous_grid(static_cast<double>(prof.diameter));
  for (const auto& pt : continuous_curve(w, times)) {
    t.add(sandwich_slack(pt.tv, pt.hellinger), at("t", pt.time));
  }
  // seeded random laws on the same group
  std::mt19937_64 rng(o.seed);
  std::exponential_distribution<double> ex(1.0);
  const std::size_t n = w.group().order();
  for (std::size_t k = 0; k < kRandomDistributions; ++k) {
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = ex(rng));
    for (auto& v : p) v /= s;
    const Distribution d{std::move(p)};
    t.add(sandwich_slack(tv_distance(d), hellinger_distance(d)), "random law " + std::to_string(k));
  }
  return t.result("sandwich", f.name);
}

CheckResult suite_monotone(const VerifyFixture& f, const VerifyOptions& o) {
  const auto& w = f.walk;
  Tally t;
  const auto disc = discrete_curve(w, o.max_step);
  for (std::size_t i = 1; i < disc.size(); ++i) {
    t.add(disc[i - 1].tv - disc[i].tv, at("tv m", disc[i].time));
  }
  const auto prof = lazy_profile(w);
  const double r2 = static_cast<double>(prof.diameter * prof.diameter);
  std::vector<double> times;
  for (int k = 0; k <= 16; ++k) times.push_back(0.25 * k * std::max(1.0, r2));
  const auto cts = continuous_curve(w, times);
  for (std::size_t i = 1; i < cts.size(); ++i) {
    t.add(cts[i - 1].tv - cts[i].tv, at("tv t", cts[i].time));
    t.add(cts[i - 1].hellinger - cts[i].hellinger, at("hellinger t", cts[i].time));
  }
  return t.result("monotone", f.name);
}

CheckResult suite_submultiplicative(const VerifyFixture& f, const VerifyOptions&) {
  const auto& w = f.walk;
  Tally t;
  const auto disc = discrete_curve(w, kSubmultHorizon);
  for (std::size_t a = 0; a <= kSubmultHorizon; ++a) {
    if (a > 0) t.add(4 * disc[a - 1].hellinger - 4 * disc[a].hellinger, "monotone m=" + std::to_string(a));
    for (std::size_t b = 0; a + b <= kSubmultHorizon; ++b) {
      t.add(16 * disc[a].hellinger * disc[b].hellinger - 4 * disc[a + b].hellinger,
            "m=" + std::to_string(a) + "+" + std::to_string(b));
    }
  }
  // 10-point grid and all pairwise sums
  const auto prof = lazy_profile(w);
  const double unit = 0.1 * std::max(1.0, static_cast<double>(prof.diameter * prof.diameter));
  std::vector<double> times;
  for (int k = 0; k <= 18; ++k) times.push_back(unit * k);
  const auto cts = continuous_curve(w, times);
  for (std::size_t a = 0; a < 10; ++a) {
    if (a > 0) t.add(4 * cts[a - 1].hellinger - 4 * cts[a].hellinger, at("monotone t", cts[a].time));
    for (std::size_t b = 0; b < 10; ++b) {
      t.add(16 * cts[a].hellinger * cts[b].hellinger - 4 * cts[a + b].hellinger,
            at("t", cts[a].time) + "+" + at("s", cts[b].time));
    }
  }
  return t.result("submultiplicative", f.name);
}

ModerateGrowthCert fixture_certificate(const WalkSpec& w, const GrowthProfile& p) {
  const double d = growth_dimension(w.group());
  return check_moderate_growth(p, minimal_A(p, d), d);
}

CheckResult from_verdict(std::string suite, const std::string& fixture, const BoundVerdict& v, std::size_t cases) {
  CheckResult r;
  r.suite = std::move(suite);
  r.fixture = fixture;
  r.status = v.status;
  r.margin = v.min_margin;
  r.cases = cases;
  r.detail = v.note;
  return r;
}

std::vector<CheckResult> suite_moderate(const VerifyFixture& f, const VerifyOptions&) {
  const auto& w = f.walk;
  if (!w.symmetric()) {
    return {skipped("moderate-upper", f.name, "law is not symmetric"),
            skipped("moderate-lower", f.name, "law is not symmetric")};
  }
  if (!w.support().contains(w.group().identity())) {
    return {skipped("moderate-upper", f.name, "identity not in the support"),
            skipped("moderate-lower", f.name, "identity not in the support")};
  }
  const auto p = growth_profile(w.group(), w.support());
  const auto cert = fixture_certificate(w, p);
  std::vector<std::size_t> steps(kModerateSteps + 1);
  for (std::size_t m = 0; m <= kModerateSteps; ++m) steps[m] = m;
  const auto rep = check_moderate_bounds(w, cert, p, steps);
  return {from_verdict("moderate-upper", f.name, rep.upper, steps.size()),
          from_verdict("moderate-lower", f.name, rep.lower, steps.size())};
}

std::vector<CheckResult> suite_continuous(const VerifyFixture& f, const VerifyOptions&) {
  const auto& w = f.walk;
  if (!w.symmetric()) {
    return {skipped("continuous-lower", f.name, "law is not symmetric"),
            skipped("continuous-upper", f.name, "law is not symmetric")};
  }
  const auto p = lazy_profile(w);
  const auto cert = fixture_certificate(w, p);
  const double r2 = static_cast<double>(p.diameter * p.diameter);
  const std::vector<double> times{0.5 * r2, r2, 2 * r2, 4 * r2};
  const auto rep = check_cts_bounds(w, p, cert, times);
  return {from_verdict("continuous-lower", f.name, rep.tv_lower, times.size()),
          from_verdict("continuous-upper", f.name, rep.tv_upper, times.size())};
}

CheckResult suite_spectral(const VerifyFixture& f, const VerifyOptions&) {
  const auto& w = f.walk;
  if (!w.symmetric()) return skipped("spectral", f.name, "law is not symmetric");
  Tally t;
  const double dense = spectral_gap_dense(w);
  const double power = spectral_gap_power(w);
  t.add(1e-8 - std::abs(dense - power) / dense, "dense vs power");
  if (w.group().is_abelian_cyclic_product()) {
    auto ev = abelian_character_eigenvalues(w);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    const double chars = 1.0 - ev.at(1);
    t.add(1e-10 - std::abs(dense - chars), "dense vs characters");
  }
  auto r = t.result("spectral", f.name, 0.0);
  r.detail += "; gap=" + std::to_string(dense);
  return r;
}

CheckResult suite_product_identity(const VerifyFixture& f, const VerifyOptions&) {
  if (!f.product) return skipped("product-identity", f.name, "not a product chain");
  const auto& pw = *f.product;
  Tally t;
  const auto p = lazy_profile(f.walk);
  const double r2 = static_cast<double>(p.diameter * p.diameter);
  for (double time : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, r2}) {
    const double formula = product_hellinger_ct(pw, time);
    const double flat = hellinger_distance(heat_distribution(f.walk, time));
    t.add(kIdentityTol - std::abs(formula - flat), at("t", time));
  }
  return t.result("product-identity", f.name, 0.0);
}

CheckResult suite_heat_tensor(const VerifyFixture& f, const VerifyOptions&) {
  if (!f.product) return skipped("heat-tensor", f.name, "not a product chain");
  const auto& pw = *f.product;
  const auto& g = f.walk.group();
  Tally t;
  for (double time : {0.5, 2.0, 7.0}) {
    const auto flat = heat_distribution(f.walk, time);
    std::vector<Distribution> parts;
    for (std::size_t i = 0; i < pw.factors.size(); ++i) {
      parts.push_back(heat_distribution(pw.factors[i], pw.weights[i] * time));
    }
    double worst = 0.0;
    for (Index x = 0; x < g.order(); ++x) {
      const auto c = g.coordinates(x);
      double v = 1.0;
      for (std::size_t i = 0; i < c.size(); ++i) v *= parts[i][c[i]];
      worst = std::max(worst, std::abs(v - flat[x]));
    }
    t.add(kIdentityTol - worst, at("t", time));
  }
  return t.result("heat-tensor", f.name, 0.0);
}

CheckResult suite_lemma_a1(const VerifyFixture& f, const VerifyOptions&) {
  if (!f.product) return skipped("product-sandwich", f.name, "not a product chain");
  const auto& pw = *f.product;
  Tally t;
  const auto p = lazy_profile(f.walk);
  const double r2 = static_cast<double>(p.diameter * p.diameter);
  for (double time : {0.5, 1.0, 2.0, 5.0, 10.0, r2, 4 * r2}) {
    const double h = product_hellinger_ct(pw, time);
    const auto b = product_hellinger_bounds(pw, time);
    t.add(h - b.max_factor, at("max factor t", time));
    t.add(h - b.lower, at("lower t", time));
    if (b.precondition_met) t.add(b.upper - h, at("upper t", time));
  }
  return t.result("product-sandwich", f.name);
}

CheckResult suite_discrete_witness(const VerifyFixture& f, const VerifyOptions&) {
  if (!f.product) return skipped("discrete-witness", f.name, "not a product chain");
  const auto& pw = *f.product;
  // The continuous identity applied to discrete steps: factor i runs round(p_i m) steps.
  double gap = 0.0;
  std::size_t where = 0;
  for (std::size_t m = 1; m <= 8; ++m) {
    std::vector<double> d;
    for (std::size_t i = 0; i < pw.factors.size(); ++i) {
      const auto steps = static_cast<std::size_t>(std::llround(pw.weights[i] * static_cast<double>(m)));
      d.push_back(hellinger_distance(walk_distribution(pw.factors[i], steps)));
    }
    const double formula = combine_product_hellinger(d);
    const double exact = hellinger_distance(walk_distribution(f.walk, m));
    if (std::abs(formula - exact) > gap) {
      gap = std::abs(formula - exact);
      where = m;
    }
  }
  CheckResult r;
  r.suite = "discrete-witness";
  r.fixture = f.name;
  r.cases = 8;
  r.margin = gap - kWitnessGap;
  r.status = gap >= kWitnessGap ? CheckStatus::kPass : CheckStatus::kFail;
  r.detail = "largest discrete mismatch at m=" + std::to_string(where);
  return r;
}

using SuiteFn = std::vector<CheckResult> (*)(const VerifyFixture&, const VerifyOptions&);

template <CheckResult (*F)(const VerifyFixture&, const VerifyOptions&)>
std::vector<CheckResult> one(const VerifyFixture& f, const VerifyOptions& o) {
  return {F(f, o)};
}

struct Suite {
  const char* name;
  SuiteFn fn;
};

const std::vector<Suite>& suites() {
  static const std::vector<Suite> s{
      {"group-axioms", one<suite_axioms>},
      {"growth", one<suite_growth>},
      {"sandwich", one<suite_sandwich>},
      {"monotone", one<suite_monotone>},
      {"submultiplicative", one<suite_submultiplicative>},
      {"moderate", suite_moderate},
      {"continuous", suite_continuous},
      {"spectral", one<suite_spectral>},
      {"product-identity", one<suite_product_identity>},
      {"heat-tensor", one<suite_heat_tensor>},
      {"product-sandwich", one<suite_lemma_a1>},
      {"discrete-witness", one<suite_discrete_witness>},
  };
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

VerifyFixture make_fixture(const std::string& descriptor, std::size_t cap) {
  if (descriptor.find('*') == std::string::npos) {
    return {descriptor, parse_walk_descriptor(descriptor, cap), std::nullopt};
  }
  std::vector<WalkSpec> factors;
  std::size_t start = 0;
  while (true) {
    const auto pos = descriptor.find('*', start);
    factors.push_back(parse_walk_descriptor(descriptor.substr(start, pos - start), cap));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  std::vector<double> weights(factors.size(), 1.0);
  auto pw = make_product_walk(std::move(factors), std::move(weights));
  auto flat = build_flat(pw, cap);
  return {descriptor, std::move(flat), std::move(pw)};
}

std::vector<VerifyFixture> default_fixtures() {
  std::vector<VerifyFixture> out;
  for (const char* d : {"Z:3@lazy", "Z:11@lazy", "Z:9@lazy@sqrt", "H:3@uniform", "H:4@uniform", "Z:3@lazy*Z:5@lazy"}) {
    out.push_back(make_fixture(d));
  }
  return out;
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& s : suites()) n.emplace_back(s.name);
    return n;
  }();
  return names;
}

VerifyReport verify_all(const VerifyOptions& options) {
  for (const auto& s : options.suites) {
    const auto& names = verify_suite_names();
    require(std::find(names.begin(), names.end(), s) != names.end(), "unknown verify suite '" + s + "'");
  }
  std::vector<VerifyFixture> fixtures;
  if (options.fixtures.empty()) {
    fixtures = default_fixtures();
  } else {
    for (const auto& d : options.fixtures) fixtures.push_back(make_fixture(d));
  }
  VerifyReport rep;
  rep.options = options;
  for (const auto& s : suites()) {
    if (!options.suites.empty() &&
        std::find(options.suites.begin(), options.suites.end(), s.name) == options.suites.end()) {
      continue;
    }
    for (const auto& f : fixtures) {
      for (auto& r : s.fn(f, options)) rep.checks.push_back(std::move(r));
    }
  }
  for (const auto& c : rep.checks) {
    switch (c.status) {
      case CheckStatus::kPass: ++rep.passed; break;
      case CheckStatus::kFail: ++rep.failed; break;
      default: ++rep.skipped; break;  // skipped, prerequisite not met
    }
  }
  return rep;
}

std::string VerifyReport::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = options.seed;
  j["max_step"] = options.max_step;
  j["suites"] = options.suites;
  j["fixtures"] = options.fixtures;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["suite"] = c.suite;
    e["fixture"] = c.fixture;
    e["status"] = std::string(to_string(c.status));
    e["cases"] = c.cases;
    e["margin"] = std::isfinite(c.margin) ? nlohmann::ordered_json(c.margin) : nlohmann::ordered_json(nullptr);
    e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  j["checks"] = std::move(arr);
  j["passed"] = passed;
  j["failed"] = failed;
  j["skipped"] = skipped;
  j["ok"] = ok();
  return j.dump(2);
}

}  // namespace mixlab
