#include "mixlab/family.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "mixlab/error.hpp"
#include "mixlab/growth.hpp"
#include "mixlab/numeric.hpp"

namespace mixlab {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view s, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    fail(ErrorKind::kInvalidParameter, "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

std::uint64_t to_uint(std::string_view s, std::string_view what) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kInvalidParameter, "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

std::vector<double> to_double_list(std::string_view s, std::string_view what) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (auto part : split(s, ',')) out.push_back(to_double(part, what));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

Sampler::Sampler(std::string_view spec) : spec_(spec) {
  const auto parts = split(spec, ':');
  const auto name = parts[0];
  auto arg = [&](std::size_t k) {
    require(parts.size() > k, "sampler '" + spec_ + "' is missing a parameter");
    return to_double(parts[k], "sampler parameter");
  };
  std::size_t expected = 0;
  if (name == "uniform") {
    kind_ = Kind::kUniform;
    p1_ = arg(1), p2_ = arg(2), expected = 3;
    require(p1_ >= 0.0 && p2_ > p1_, "uniform sampler needs 0 <= a < b");
  } else if (name == "exponential") {
    kind_ = Kind::kExponential;
    p1_ = arg(1), expected = 2;
    require(p1_ > 0.0, "exponential sampler needs a positive rate");
  } else if (name == "lognormal") {
    kind_ = Kind::kLogNormal;
    p1_ = arg(1), p2_ = arg(2), expected = 3;
    require(p2_ > 0.0, "lognormal sampler needs sigma > 0");
  } else if (name == "constant") {
    kind_ = Kind::kConstant;
    p1_ = arg(1), expected = 2;
    require(p1_ > 0.0, "constant sampler needs a positive value");
  } else {
    fail(ErrorKind::kInvalidParameter, "unknown sampler '" + spec_ + "'");
  }
  require(parts.size() == expected, "sampler '" + spec_ + "' has too many parameters");
}

double Sampler::draw(std::mt19937_64& rng) const {
  while (true) {
    double x = 0.0;
    switch (kind_) {
      case Kind::kUniform: x = std::uniform_real_distribution<double>(p1_, p2_)(rng); break;
      case Kind::kExponential: x = std::exponential_distribution<double>(p1_)(rng); break;
      case Kind::kLogNormal: x = std::lognormal_distribution<double>(p1_, p2_)(rng); break;
      case Kind::kConstant: x = p1_; break;
    }
    if (x > 0.0) return x;
  }
}

double Sampler::mean_log() const {
  constexpr double kEulerGamma = 0.57721566490153286061;
  switch (kind_) {
    case Kind::kUniform: {
      auto F = [](double x) { return x > 0.0 ? x * std::log(x) - x : 0.0; };  // antiderivative of log
      return (F(p2_) - F(p1_)) / (p2_ - p1_);
    }
    case Kind::kExponential: return -kEulerGamma - std::log(p1_);
    case Kind::kLogNormal: return p1_;
    case Kind::kConstant: return std::log(p1_);
  }
  return 0.0;
}

std::vector<double> weight_sequence_log(std::string_view rule, std::size_t count, std::uint64_t seed) {
  const auto parts = split(rule, ':');
  const auto name = parts[0];
  std::vector<double> out(count);
  auto param = [&] {
    require(parts.size() >= 2, "weight rule '" + std::string(rule) + "' needs a parameter");
    return to_double(parts[1], "weight parameter");
  };
  auto rest_from = [&](std::size_t k) {
    require(parts.size() > k, "weight rule '" + std::string(rule) + "' needs a sampler");
    const auto pos = [&] {
      std::size_t p = 0;
      for (std::size_t j = 0; j < k; ++j) p = rule.find(':', p) + 1;
      return p;
    }();
    return rule.substr(pos);
  };
  if (name == "const") {
    require(parts.size() == 1, "const takes no parameter");
    return out;
  }
  if (name == "poly" || name == "heis" || name == "exp" || name == "geom") {
    const double g = param();
    require(parts.size() == 2, "weight rule '" + std::string(rule) + "' takes one parameter");
    if (name == "geom") require(g > 0.0, "geometric ratio must be positive");
    if (name == "heis" || name == "exp") require(g > 0.0, "gamma must be positive");
    for (std::size_t k = 0; k < count; ++k) {
      const double i = static_cast<double>(k + 1);
      if (name == "poly") out[k] = g * std::log(i);
      else if (name == "heis") out[k] = 2.0 * std::log(i) - std::pow(i, g);
      else if (name == "exp") out[k] = -std::pow(i, g);
      else out[k] = i * std::log(g);
    }
    return out;
  }
  std::mt19937_64 rng(seed);
  if (name == "randpoly") {
    const double g = param();
    require(g > 0.0, "gamma must be positive");
    const Sampler sampler(rest_from(2));
    CompensatedSum s;
    for (std::size_t k = 0; k < count; ++k) {
      s.add(sampler.draw(rng));
      out[k] = g * std::log(s.value());
    }
    return out;
  }
  if (name == "randexp") {
    const Sampler sampler(rest_from(1));
    CompensatedSum s;
    for (std::size_t k = 0; k < count; ++k) {
      s.add(std::log(sampler.draw(rng)));
      out[k] = s.value();
    }
    return out;
  }
  fail(ErrorKind::kInvalidParameter, "unknown weight rule '" + std::string(rule) + "'");
}

// ---------------------------------------------------------------------------

std::string_view to_string(FamilyKind k) noexcept {
  return k == FamilyKind::kTriangular ? "triangular" : "nested";
}

std::vector<std::size_t> parse_index_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    const auto dots = part.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(to_uint(part, "index"));
      continue;
    }
    const auto lo = to_uint(part.substr(0, dots), "range start");
    const auto hi = to_uint(part.substr(dots + 2), "range end");
    require(lo <= hi, "empty range '" + std::string(part) + "'");
    require(hi - lo < 10'000'000, "range too long");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

FamilySpec parse_family_config(std::string_view text, FamilySpec fs) {
  for (auto line : split(text, '\n')) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, "config line without '=': '" + std::string(line) + "'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (value == "F" || value == "triangular") fs.kind = FamilyKind::kTriangular;
      else if (value == "G" || value == "nested") fs.kind = FamilyKind::kNested;
      else fail(ErrorKind::kInvalidParameter, "unknown family kind '" + std::string(value) + "'");
    } else if (key == "recipe") {
      fs.recipe = value;
    } else if (key == "weights") {
      fs.weights = value;
    } else if (key == "row_length") {
      fs.row_length = to_uint(value, key);
    } else if (key == "n") {
      fs.n_values = parse_index_list(value);
    } else if (key == "seed") {
      fs.seed = to_uint(value, key);
    } else if (key == "slope_threshold") {
      fs.trend.slope_threshold = to_double(value, key);
    } else if (key == "growth_ratio") {
      fs.trend.growth_ratio = to_double(value, key);
    } else if (key == "bounded_ratio") {
      fs.trend.bounded_ratio = to_double(value, key);
    } else if (key == "burn_in") {
      fs.trend.burn_in = to_uint(value, key);
    } else if (key == "eps") {
      fs.eps_grid = to_double_list(value, key);
    } else if (key == "c") {
      fs.c_grid = to_double_list(value, key);
    } else if (key == "cap") {
      fs.cap = to_uint(value, key);
    } else {
      fail(ErrorKind::kInvalidParameter, "unknown config key '" + std::string(key) + "'");
    }
  }
  return fs;
}

std::string family_config_string(const FamilySpec& fs) {
  std::ostringstream os;
  os << "kind = " << to_string(fs.kind) << "\n"
     << "recipe = " << fs.recipe << "\n"
     << "weights = " << fs.weights << "\n"
     << "row_length = " << fs.row_length << "\n"
     << "n = ";
  for (std::size_t i = 0; i < fs.n_values.size(); ++i) os << (i ? "," : "") << fs.n_values[i];
  os << "\n"
     << "seed = " << fs.seed << "\n"
     << "slope_threshold = " << format_double(fs.trend.slope_threshold) << "\n"
     << "growth_ratio = " << format_double(fs.trend.growth_ratio) << "\n"
     << "bounded_ratio = " << format_double(fs.trend.bounded_ratio) << "\n"
     << "burn_in = " << fs.trend.burn_in << "\n"
     << "eps = " << join_doubles(fs.eps_grid) << "\n"
     << "c = " << join_doubles(fs.c_grid) << "\n"
     << "cap = " << fs.cap << "\n";
  return os.str();
}

std::string factor_descriptor(std::string_view recipe, std::size_t n, std::size_t i) {
  std::string tmpl(recipe);
  if (recipe == "cycle") tmpl = "Z:{i+2}@lazy";
  else if (recipe == "heisenberg") tmpl = "H:{i+2}@uniform";
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out += tmpl.substr(pos);
      break;
    }
    out += tmpl.substr(pos, open - pos);
    const auto close = tmpl.find('}', open);
    require(close != std::string::npos, "unterminated '{' in recipe '" + tmpl + "'");
    const std::string_view body = std::string_view(tmpl).substr(open + 1, close - open - 1);
    require(!body.empty() && (body[0] == 'i' || body[0] == 'n'), "recipe placeholders use i or n");
    std::uint64_t value = body[0] == 'i' ? i : n;
    if (body.size() > 1) {
      require(body[1] == '+', "recipe placeholders take the form {i+K}");
      value += to_uint(body.substr(2), "recipe offset");
    }
    out += std::to_string(value);
    pos = close + 1;
  }
  return out;
}

FactorDiameter factor_diameter(std::string_view descriptor, std::size_t cap) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, std::size_t>, FactorDiameter> memo;
  const auto key = std::make_pair(std::string(descriptor), cap);
  {
    std::lock_guard lock(mutex);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
  }
  FactorDiameter d;
  bool done = false;
  if (descriptor.starts_with("H:")) {
    const auto end = descriptor.find_first_not_of("0123456789", 2);
    const auto m = to_uint(descriptor.substr(2, end == std::string_view::npos ? end : end - 2), "modulus");
    if (m >= 2 && static_cast<long double>(m) * m * m > static_cast<long double>(cap)) {
      d = {static_cast<std::size_t>(m - 1), false};
      done = true;
    }
  }
  if (!done) {
    const auto w = parse_walk_descriptor(descriptor, cap);
    d.rho = growth_profile(w.group(), w.support()).diameter;
    d.exact = true;
  }
  require(d.rho >= 1, "factor '" + std::string(descriptor) + "' is trivial (diameter 0)");
  std::lock_guard lock(mutex);
  memo.emplace(key, d);
  return d;
}

// ---------------------------------------------------------------------------

std::vector<FamilyRow> build_family(const FamilySpec& fs) {
  require(!fs.n_values.empty(), "family needs at least one n");
  const auto row_len = [&](std::size_t n) {
    return fs.kind == FamilyKind::kTriangular && fs.row_length > 0 ? fs.row_length : n;
  };
  std::size_t k_max = 0;
  for (auto n : fs.n_values) {
    require(n >= 1, "family indices start at 1");
    k_max = std::max(k_max, row_len(n));
  }
  const auto log_p_all = weight_sequence_log(fs.weights, k_max, fs.seed);

  // Direction of p_i / rho_i^2 over the whole nested range, for u_n.
  std::optional<Direction> direction;
  if (fs.kind == FamilyKind::kNested) {
    std::vector<double> s(k_max);
    for (std::size_t k = 0; k < k_max; ++k) {
      const auto d = factor_diameter(factor_descriptor(fs.recipe, k + 1, k + 1), fs.cap);
      s[k] = log_p_all[k] - 2.0 * std::log(static_cast<double>(d.rho));
    }
    if (k_max > 1 && std::is_sorted(s.begin(), s.end())) direction = Direction::kIncreasing;
    else if (k_max > 1 && std::is_sorted(s.rbegin(), s.rend())) direction = Direction::kDecreasing;
  }

  std::vector<FamilyRow> rows;
  for (auto n : fs.n_values) {
    const auto k = row_len(n);
    std::vector<double> log_l(k);
    std::vector<std::string> desc(k);
    std::vector<std::size_t> rho(k);
    std::vector<bool> exact(k);
    const std::vector<double> log_p(log_p_all.begin(), log_p_all.begin() + static_cast<std::ptrdiff_t>(k));
    const double log_q = log_sum_exp(log_p);
    std::vector<double> un_seq(k);
    for (std::size_t i = 0; i < k; ++i) {
      desc[i] = factor_descriptor(fs.recipe, n, i + 1);
      const auto d = factor_diameter(desc[i], fs.cap);
      rho[i] = d.rho;
      exact[i] = d.exact;
      un_seq[i] = log_p[i] - 2.0 * std::log(static_cast<double>(d.rho));
      log_l[i] = un_seq[i] - log_q;
    }
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return log_l[a] < log_l[b]; });
    std::vector<double> sorted(k);
    for (std::size_t i = 0; i < k; ++i) sorted[i] = log_l[order[i]];

    std::vector<double> lam(k);
    for (std::size_t i = 0; i < k; ++i) lam[i] = std::exp(sorted[i] - sorted[0]);
    FamilyRow row{n, std::move(desc), log_p, std::move(rho), std::move(exact), log_q, sorted, std::move(order),
                  0.0, 0.0, std::nullopt, std::nullopt, ExponentialSum(std::vector<double>(k, 1.0), lam)};
    row.log_tn = theorem_tn_log(sorted);
    row.log_statistic = row.log_tn + sorted[0];
    if (direction) {
      row.un_direction = direction;
      row.un = theorem_un_log(un_seq, *direction);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ProductWalkSpec family_product(const FamilyRow& row, std::size_t cap) {
  std::vector<WalkSpec> factors;
  for (const auto& d : row.descriptors) factors.push_back(parse_walk_descriptor(d, cap));
  const double top = *std::max_element(row.log_p.begin(), row.log_p.end());
  std::vector<double> raw;
  for (double lp : row.log_p) raw.push_back(std::exp(lp - top));
  return make_product_walk(std::move(factors), std::move(raw));
}

// ---------------------------------------------------------------------------

CutoffReport cutoff_report(const FamilySpec& fs, const std::vector<FamilyRow>& rows) {
  CutoffReport rep;
  rep.spec = fs;
  std::vector<double> ns, stats;
  bool any_bracket = false;
  for (const auto& r : rows) {
    CutoffRow c;
    c.n = r.n;
    c.log_tn = r.log_tn;
    c.log_l1 = r.log_l.front();
    c.statistic = std::exp(r.log_statistic);
    if (r.un) {
      c.log_un = r.un->log_u;
      c.un_statistic = std::exp(r.un->log_statistic);
    }
    for (double eps : fs.eps_grid) {
      const double t = exp_sum_mixing(r.proxy, eps);
      c.mixing_statistic.push_back(t);
      c.log_mixing.push_back(std::log(t) - c.log_l1);
    }
    for (bool e : r.rho_exact) any_bracket |= !e;
    ns.push_back(static_cast<double>(r.n));
    stats.push_back(c.statistic);
    rep.rows.push_back(std::move(c));
  }
  rep.trend = classify_trend(ns, stats, fs.trend);
  if (any_bracket) {
    rep.notes.push_back("some Heisenberg diameters exceed the enumeration cap; the lower end m - 1 of the bracket is used");
  }
  return rep;
}

CutoffReport cutoff_scan(const FamilySpec& fs) { return cutoff_report(fs, build_family(fs)); }

CriterionReport family_criterion(const FamilySpec& fs, const std::vector<FamilyRow>& rows) {
  std::vector<CriterionRow> crit;
  for (const auto& r : rows) crit.push_back({static_cast<double>(r.n), r.proxy});
  return cutoff_criterion_scan(crit, fs.c_grid, fs.eps_grid, fs.trend);
}

// ---------------------------------------------------------------------------

FamilySpec heisenberg_family(double gamma, std::vector<std::size_t> n_values) {
  require(gamma > 0.0, "gamma must be positive");
  FamilySpec fs;
  fs.kind = FamilyKind::kNested;
  fs.recipe = "heisenberg";
  fs.weights = "heis:" + format_double(gamma);
  fs.n_values = std::move(n_values);
  return fs;
}

namespace {

constexpr std::size_t kExactMaxFactors = 3;  // H_3, H_4, H_5
constexpr std::size_t kFlatLimit = 2000;
constexpr double kExactSlack = 1e-10;
// The flat oracle and discrete clock stop where every distance is at the
// heat-kernel tolerance floor anyway.
constexpr double kFlatMaxMultiple = 8.0;

std::vector<ExactSmallRow> exact_small_rows(const FamilyRow& row) {
  auto& cache = FactorCurveCache::global();
  const auto pw = family_product(row);
  const std::size_t k = pw.factors.size();

  // Uniform moderate-growth constant over the factors.
  double A = 48.0;
  const double d = 3.0;
  double eta = 1.0;
  for (const auto& f : pw.factors) {
    const auto prof = growth_profile(f.group(), f.support());
    A = std::max(A, minimal_A(prof, d));
    eta = std::min(eta, f.eta());
  }
  const double C = 1.0;
  const double C1 = moderate_upper_constant(A, d);
  const double a_time = (4.0 * C / eta) * (std::log2(C1) + 0.5);
  const double tn = std::exp(row.log_tn);

  std::optional<WalkSpec> flat;
  std::size_t flat_order = 1;
  for (const auto& f : pw.factors) flat_order *= f.group().order();
  if (flat_order <= kFlatLimit) flat = build_flat(pw);

  // l_{n,i} by factor index.
  std::vector<double> l(k);
  for (std::size_t s = 0; s < k; ++s) l[row.order[s]] = std::exp(row.log_l[s]);

  std::vector<double> multiples{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 1.01 * a_time, 2.0 * a_time};
  std::vector<ExactSmallRow> out;
  for (double mult : multiples) {
    ExactSmallRow e;
    e.n = row.n;
    e.t = mult * tn;
    e.t_over_tn = mult;
    e.hellinger = product_hellinger_ct(pw, e.t, kDefaultHeatTolerance, &cache);
    e.lemma = product_hellinger_bounds(pw, e.t, kDefaultLemmaA, kDefaultHeatTolerance, &cache);
    CompensatedSum f, g;
    for (std::size_t i = 0; i < k; ++i) {
      f.add(std::exp(-l[i] * eta * e.t / (2.0 * C)));
      if (row.rho[i] >= 4) g.add(std::exp(-l[i] * 2.0 * C * C1 * e.t));
    }
    e.proof_lower = -std::expm1(-g.value() / 16.0);
    e.proof_upper = -std::expm1(-2.0 * C1 * C1 * f.value());
    e.proof_upper_applicable = e.t > a_time * tn;
    if (flat && mult <= kFlatMaxMultiple) {
      e.flat_hellinger = hellinger_distance(heat_distribution(*flat, e.t));
      const auto m = static_cast<std::size_t>(std::llround(e.t));
      const auto p = walk_distribution(*flat, m);
      e.discrete_tv = tv_distance(p);
      e.discrete_hellinger = hellinger_distance(p);
    }
    const double h2 = e.hellinger * e.hellinger;
    e.holds = e.lemma.max_factor <= e.hellinger + kExactSlack && e.lemma.lower <= e.hellinger + kExactSlack &&
              (!e.lemma.precondition_met || e.hellinger <= e.lemma.upper + kExactSlack) &&
              e.proof_lower <= h2 + kExactSlack &&
              (!e.proof_upper_applicable || h2 <= e.proof_upper + kExactSlack) &&
              (!e.flat_hellinger || std::abs(*e.flat_hellinger - e.hellinger) <= 1e-9);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

HeisenbergExperiment experiment_heisenberg(double gamma, std::vector<std::size_t> n_values, ExperimentMode mode,
                                           const TrendConfig& trend) {
  HeisenbergExperiment ex;
  ex.gamma = gamma;
  ex.mode = mode;
  auto fs = heisenberg_family(gamma, std::move(n_values));
  fs.trend = trend;
  const auto rows = build_family(fs);
  ex.report = cutoff_report(fs, rows);
  if (mode == ExperimentMode::kExactSmall) {
    for (const auto& r : rows) {
      if (r.n > kExactMaxFactors) continue;
      auto e = exact_small_rows(r);
      ex.exact.insert(ex.exact.end(), e.begin(), e.end());
    }
    if (ex.exact.empty()) ex.report.notes.push_back("exact-small mode covers n <= 3 only; no such n requested");
  }
  return ex;
}

RandomizedExperiment experiment_randomized(const RandomizedSpec& spec) {
  require(spec.trials >= 1, "need at least one trial");
  require(!spec.n_values.empty(), "need at least one n");
  const Sampler sampler(spec.sampler);
  std::string rule;
  if (spec.mode == RandomizedMode::kPoly) {
    require(spec.gamma > 0.0, "gamma must be positive");
    rule = "randpoly:" + format_double(spec.gamma) + ":" + spec.sampler;
  } else {
    require(sampler.mean_log() > 0.0, "exp mode needs E[log X] > 0 (got " + format_double(sampler.mean_log()) + ")");
    rule = "randexp:" + spec.sampler;
  }
  RandomizedExperiment ex;
  ex.spec = spec;
  ex.trials.resize(spec.trials);

  auto run_trial = [&](std::size_t t) {
    FamilySpec fs;
    fs.kind = FamilyKind::kNested;
    fs.recipe = "cycle";
    fs.weights = rule;
    fs.n_values = spec.n_values;
    fs.seed = spec.seed + t;
    fs.trend = spec.trend;
    fs.eps_grid.clear();
    const auto rep = cutoff_scan(fs);
    RandomizedTrial tr;
    tr.trial = t;
    tr.seed = fs.seed;
    tr.trend = rep.trend;
    for (const auto& r : rep.rows) {
      tr.n.push_back(static_cast<double>(r.n));
      tr.statistic.push_back(r.statistic);
    }
    return tr;
  };
  // Warm the diameter memo once so worker threads only read it.
  const auto n_max = *std::max_element(spec.n_values.begin(), spec.n_values.end());
  for (std::size_t i = 1; i <= n_max; ++i) factor_diameter(factor_descriptor("cycle", i, i));

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(spec.trials, std::thread::hardware_concurrency()));
  for (std::size_t base = 0; base < spec.trials; base += workers) {
    std::vector<std::future<RandomizedTrial>> jobs;
    for (std::size_t t = base; t < std::min(spec.trials, base + workers); ++t) {
      jobs.push_back(std::async(std::launch::async, run_trial, t));
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) ex.trials[base + j] = jobs[j].get();
  }
  for (const auto& t : ex.trials) {
    switch (t.trend.verdict) {
      case Trend::kGrowing: ++ex.growing; break;
      case Trend::kBounded: ++ex.bounded; break;
      case Trend::kInconclusive: ++ex.inconclusive; break;
    }
  }
  return ex;
}

}  // namespace mixlab
