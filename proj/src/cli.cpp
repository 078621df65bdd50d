#include "mixlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <variant>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixlab/error.hpp"
#include "mixlab/family.hpp"
#include "mixlab/growth.hpp"
#include "mixlab/laplace.hpp"
#include "mixlab/product.hpp"
#include "mixlab/verify.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

namespace {

using Json = nlohmann::ordered_json;
using Cell = std::variant<double, long long, std::string, bool>;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return json_number(v);
        else return Json(v);
      },
      c);
}

std::string to_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return fmt(v);
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(v);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string q = "\"";
          for (char ch : v) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return q + "\"";
        }
      },
      c);
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

struct Result {
  std::optional<Table> table;
  Json summary = Json::object();
  int exit_code = 0;
  bool prefer_json = false;  // format auto picks JSON even with a table
};

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used > 0 && used == tok.size(), "cannot parse " + what + " value '" + tok + "'");
    out.push_back(v);
  }
  require(!out.empty(), what + " needs at least one value");
  return out;
}

// "a..b" (step 1), "a..b:step" for reals, or a comma list.
std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) return parse_doubles(s, what);
  const auto colon = s.find(':', dots);
  const double lo = parse_doubles(s.substr(0, dots), what).at(0);
  const double hi = parse_doubles(s.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2), what).at(0);
  const double step = colon == std::string::npos ? 1.0 : parse_doubles(s.substr(colon + 1), what).at(0);
  require(step > 0.0 && hi >= lo, "bad " + what + " range '" + s + "'");
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double v = lo + step * static_cast<double>(k);
    if (v > hi + 1e-12 * std::max(1.0, std::abs(hi))) break;
    out.push_back(v);
    require(out.size() <= 10'000'000, what + " range too long");
  }
  return out;
}

std::size_t parse_max_step(const std::string& s) {
  const auto v = parse_index_list(s);
  if (v.size() == 1) return v.front();
  require(!v.empty() && v.front() == 0 && v.size() == v.back() + 1, "--steps must be N or 0..N");
  return v.back();
}

// key = value lines appended as --key=value so they win over the command line.
std::vector<std::string> config_arguments(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read config file '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, "config line without '=': '" + line + "'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    require(!key.empty(), "config line without a key");
    out.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

struct Common {
  std::string format = "auto";
  std::string output;
  std::uint64_t seed = 42;
  std::size_t cap = kDefaultEnumerationCap;
  double tol = kDefaultHeatTolerance;
  double time_cap = 1e9;
  bool progress = false;
  std::string cache_dir;
  std::string config;
};

struct WalkArgs {
  std::string walk;
  std::string group;
  std::string law = "lazy";
  std::string gens = "default";

  void add(CLI::App* app) {
    app->add_option("--walk", walk, "walk descriptor <group>@<law>[@<gens>]");
    app->add_option("--group", group, "group descriptor (Z:n, H:m, P:...)");
    app->add_option("--law", law, "lazy | uniform | explicit:p0,p1,...")->capture_default_str();
    app->add_option("--gens", gens, "default | sqrt | comma list")->capture_default_str();
  }
  std::string descriptor() const {
    if (!walk.empty()) return walk;
    require(!group.empty(), "give --walk or --group");
    return group + "@" + law + "@" + gens;
  }
  WalkSpec build(std::size_t cap) const { return parse_walk_descriptor(descriptor(), cap); }
};

void progress(const Common& c, std::ostream& err, const std::string& msg) {
  if (c.progress) err << "[mixlab] " << msg << "\n";
}

ProductWalkSpec parse_product(const std::string& factors, const std::string& weights, std::size_t cap) {
  std::vector<WalkSpec> fs;
  std::size_t start = 0;
  while (true) {
    const auto pos = factors.find('*', start);
    fs.push_back(parse_walk_descriptor(factors.substr(start, pos == std::string::npos ? pos : pos - start), cap));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  std::vector<double> w(fs.size(), 1.0);
  if (!weights.empty()) w = parse_doubles(weights, "weights");
  require(w.size() == fs.size(), "need one weight per factor");
  return make_product_walk(std::move(fs), std::move(w));
}

Json trend_json(const TrendResult& t, const TrendConfig& c) {
  Json j;
  j["verdict"] = std::string(to_string(t.verdict));
  j["slope"] = json_number(t.slope);
  j["first"] = json_number(t.first);
  j["last"] = json_number(t.last);
  j["upper_max_over_min"] = json_number(t.upper_max_over_min);
  j["points"] = t.points;
  j["thresholds"] = {{"slope_threshold", c.slope_threshold},
                     {"growth_ratio", c.growth_ratio},
                     {"bounded_ratio", c.bounded_ratio},
                     {"burn_in", c.burn_in}};
  return j;
}

Json verdict_json(const BoundVerdict& v) {
  return {{"status", std::string(to_string(v.status))}, {"margin", json_number(v.min_margin)}, {"note", v.note}};
}

// --- commands -----------------------------------------------------------------

Result cmd_group(const std::string& desc, const Common& c) {
  const auto g = parse_group(desc, c.cap);
  Result r;
  Table t{{"index", "coordinates", "inverse", "element_order"}, {}};
  for (Index x = 0; x < g.order(); ++x) {
    std::string coords;
    if (g.kind() == GroupTable::Kind::kHeisenberg) {
      const auto h = g.heisenberg_coords(x);
      coords = std::to_string(h.i) + "/" + std::to_string(h.j) + "/" + std::to_string(h.k);
    } else if (g.kind() == GroupTable::Kind::kProduct) {
      const auto v = g.coordinates(x);
      for (std::size_t i = 0; i < v.size(); ++i) coords += (i ? " " : "") + std::to_string(v[i]);
    } else {
      coords = std::to_string(x);
    }
    long long ord = 1;
    for (Index y = x; y != g.identity(); y = g.op(y, x)) ++ord;
    t.rows.push_back({static_cast<long long>(x), coords, static_cast<long long>(g.inv(x)), ord});
  }
  r.table = std::move(t);
  r.summary["label"] = g.label();
  r.summary["order"] = g.order();
  r.summary["abelian_cyclic_product"] = g.is_abelian_cyclic_product();
  return r;
}

double default_dimension(const GroupTable& g) {
  if (g.kind() == GroupTable::Kind::kCyclic) return 1.0;
  if (g.kind() == GroupTable::Kind::kHeisenberg) return 3.0;
  double d = 0.0;
  for (const auto& f : g.factors()) d += default_dimension(f);
  return d;
}

Result cmd_growth(const std::string& desc, const std::string& gens, std::optional<double> A_opt,
                  std::optional<double> d_opt, const Common& c) {
  const auto g = parse_group(desc, c.cap);
  const auto e = parse_generators(g, gens);
  const auto p = growth_profile(g, e);
  const double d = d_opt.value_or(default_dimension(g));
  require(d > 0.0, "--d must be positive");
  const double minA = p.group_order > 1 ? minimal_A(p, d) : 0.0;
  const double A = A_opt.value_or(minA);
  require(A > 0.0, "--A must be positive");
  const auto cert = check_moderate_growth(p, A, d);
  Result r;
  Table t{{"m", "V(m)", "ball_fraction", "modgrowth_lhs", "modgrowth_rhs"}, {}};
  const double rho = static_cast<double>(p.diameter);
  const double vr = static_cast<double>(p.volume(p.diameter));
  for (std::size_t m = 1; m <= p.diameter; ++m) {
    const double v = static_cast<double>(p.volume(m));
    t.rows.push_back({static_cast<long long>(m), static_cast<long long>(p.volume(m)),
                      v / static_cast<double>(p.group_order), v / vr,
                      std::pow(static_cast<double>(m) / rho, d) / A});
  }
  r.table = std::move(t);
  r.summary["group"] = g.label();
  r.summary["generators"] = e.members;
  r.summary["diameter"] = p.diameter;
  r.summary["A"] = A;
  r.summary["d"] = d;
  r.summary["minimal_A"] = json_number(minA);
  r.summary["satisfied"] = cert.satisfied;
  return r;
}

Result cmd_walk_curve(const WalkArgs& wa, const std::string& clock, const std::string& steps,
                      const std::string& times, const Common& c) {
  const auto w = wa.build(c.cap);
  const auto ck = parse_clock(clock);
  std::vector<CurvePoint> pts;
  if (ck == Clock::kDiscrete) {
    pts = discrete_curve(w, parse_max_step(steps.empty() ? "0..64" : steps));
  } else {
    const auto ts = parse_grid(times.empty() ? "0..8:0.5" : times, "times");
    pts = continuous_curve(w, ts, c.tol);
  }
  Result r;
  Table t{{"clock", "time", "tv", "hellinger", "tv_upper_bound", "tv_lower_bound"}, {}};
  for (const auto& p : pts) {
    const auto br = tv_bracket_from_hellinger(p.hellinger);
    t.rows.push_back({clock, p.time, p.tv, p.hellinger, br.upper, br.lower});
  }
  r.table = std::move(t);
  r.summary["walk"] = wa.descriptor();
  r.summary["clock"] = clock;
  r.summary["symmetric"] = w.symmetric();
  return r;
}

Result cmd_walk_mix(const WalkArgs& wa, const std::string& metric, const std::string& clock, double eps,
                    const Common& c) {
  const auto w = wa.build(c.cap);
  MixingOptions o;
  o.time_cap = c.time_cap;
  o.heat_tolerance = c.tol;
  const double t = mixing_time(w, parse_metric(metric), parse_clock(clock), eps, o);
  Result r;
  r.summary["walk"] = wa.descriptor();
  r.summary["metric"] = metric;
  r.summary["clock"] = clock;
  r.summary["eps"] = eps;
  if (parse_clock(clock) == Clock::kDiscrete) r.summary["mixing_time"] = static_cast<long long>(std::llround(t));
  else r.summary["mixing_time"] = json_number(t);
  return r;
}

Result cmd_walk_gap(const WalkArgs& wa, const Common& c) {
  const auto w = wa.build(c.cap);
  require(w.symmetric(), "spectral gap needs a symmetric law");
  Result r;
  r.summary["walk"] = wa.descriptor();
  r.summary["order"] = w.group().order();
  r.summary["spectral_gap"] = spectral_gap(w);
  return r;
}

Result cmd_walk_bounds(const WalkArgs& wa, const std::string& kind, std::optional<double> A_opt,
                       std::optional<double> d_opt, const std::string& steps, const std::string& times,
                       const Common& c) {
  const auto w = wa.build(c.cap);
  const double d = d_opt.value_or(default_dimension(w.group()));
  Result r;
  r.summary["walk"] = wa.descriptor();
  Table t{{"time", "tv", "hellinger", "upper", "lower"}, {}};
  auto push = [&](const std::vector<BoundSample>& samples) {
    for (const auto& s : samples) {
      t.rows.push_back({s.time, s.tv, s.hellinger, s.upper.value_or(std::nan("")), s.lower.value_or(std::nan(""))});
    }
  };
  if (kind == "moderate") {
    const auto p = growth_profile(w.group(), w.support());
    const auto cert = check_moderate_growth(p, A_opt.value_or(minimal_A(p, d)), d);
    std::vector<std::size_t> ms;
    for (double m : parse_grid(steps.empty() ? "0..100" : steps, "steps")) ms.push_back(static_cast<std::size_t>(m));
    const auto rep = check_moderate_bounds(w, cert, p, ms);
    push(rep.samples);
    r.summary["A"] = cert.A;
    r.summary["d"] = d;
    r.summary["C1"] = rep.C1;
    r.summary["C2"] = rep.C2;
    r.summary["eta"] = rep.eta;
    r.summary["rho"] = rep.rho;
    r.summary["upper"] = verdict_json(rep.upper);
    r.summary["lower"] = verdict_json(rep.lower);
  } else if (kind == "continuous") {
    const auto p = growth_profile(w.group(), lazified_support(w));
    const auto cert = check_moderate_growth(p, A_opt.value_or(minimal_A(p, d)), d);
    const double r2 = static_cast<double>(p.diameter * p.diameter);
    const auto ts = times.empty() ? std::vector<double>{0.5 * r2, r2, 2 * r2, 4 * r2} : parse_grid(times, "times");
    const auto rep = check_cts_bounds(w, p, cert, ts, c.tol);
    push(rep.samples);
    r.summary["A"] = cert.A;
    r.summary["d"] = d;
    r.summary["spectral_gap"] = rep.spectral_gap;
    r.summary["C1"] = rep.C1;
    r.summary["eta"] = rep.eta;
    r.summary["rho"] = rep.rho;
    r.summary["fitted_lower_constant"] = json_number(rep.fitted_lower_constant);
    r.summary["tv_lower"] = verdict_json(rep.tv_lower);
    r.summary["tv_upper"] = verdict_json(rep.tv_upper);
    r.summary["hellinger_lower"] = verdict_json(rep.hellinger_lower);
    r.summary["hellinger_upper"] = verdict_json(rep.hellinger_upper);
  } else {
    fail(ErrorKind::kInvalidParameter, "--kind must be moderate or continuous");
  }
  r.table = std::move(t);
  return r;
}

Result cmd_product_curve(const std::string& factors, const std::string& weights, const std::string& times,
                         double A, const Common& c) {
  const auto pw = parse_product(factors, weights, c.cap);
  std::size_t flat_order = 1;
  for (const auto& f : pw.factors) flat_order *= f.group().order();
  std::optional<WalkSpec> flat;
  constexpr std::size_t kOracleLimit = 2000;
  if (flat_order <= kOracleLimit) flat = build_flat(pw, c.cap);
  auto* cache = &FactorCurveCache::global();
  Result r;
  Table t{{"t", "hellinger_exact", "tv_lower", "tv_upper", "lemmaA1_lower", "lemmaA1_upper", "oracle_available",
           "oracle_value"},
          {}};
  for (double time : parse_grid(times.empty() ? "0..10" : times, "times")) {
    const double h = product_hellinger_ct(pw, time, c.tol, cache);
    const auto br = tv_bracket_from_hellinger(h);
    const auto lb = product_hellinger_bounds(pw, time, A, c.tol, cache);
    const double oracle = flat ? hellinger_distance(heat_distribution(*flat, time, c.tol)) : std::nan("");
    t.rows.push_back({time, h, br.lower, br.upper, lb.lower, lb.precondition_met ? lb.upper : std::nan(""),
                      flat.has_value(), oracle});
  }
  r.table = std::move(t);
  r.summary["factors"] = factors;
  r.summary["weights"] = pw.weights;
  r.summary["A"] = A;
  return r;
}

Result cmd_laplace(const std::string& which, const std::string& a_s, const std::string& lam_s, double c_val,
                   double t_val, double eps, const std::string& l_s, const std::string& direction,
                   const std::string& rule, const std::string& n_s, const TrendConfig& trend) {
  Result r;
  if (which == "tn") {
    const auto l = parse_doubles(l_s, "l");
    r.summary["log_t"] = theorem_tn(l);
    r.summary["t"] = json_number(std::exp(theorem_tn(l)));
    return r;
  }
  if (which == "un") {
    const auto l = parse_doubles(l_s, "l");
    require(direction == "increasing" || direction == "decreasing", "--direction is increasing or decreasing");
    const auto u = theorem_un(l, direction == "increasing" ? Direction::kIncreasing : Direction::kDecreasing);
    r.summary["log_u"] = u.log_u;
    r.summary["u"] = json_number(std::exp(u.log_u));
    r.summary["statistic"] = json_number(std::exp(u.log_statistic));
    return r;
  }
  if (which == "probe") {
    std::vector<double> ns;
    for (auto n : parse_index_list(n_s.empty() ? "1..200" : n_s)) ns.push_back(static_cast<double>(n));
    const auto p = lemma_unln_probe(rule, ns, trend);
    Table t{{"n", "log_n_over_l", "ratio", "un_statistic"}, {}};
    for (const auto& row : p.rows) t.rows.push_back({row.n, row.log_n_over_l, row.ratio, row.un_statistic});
    r.table = std::move(t);
    r.summary["rule"] = rule;
    r.summary["direction"] = p.direction == Direction::kIncreasing ? "increasing" : "decreasing";
    r.summary["clause"] = p.clause;
    r.summary["trend"] = trend_json(p.statistic_trend, trend);
    return r;
  }
  const ExponentialSum s(parse_doubles(a_s, "a"), parse_doubles(lam_s, "lambda"));
  if (which == "tau") {
    const auto lt = lambda_tau(s, c_val);
    r.summary["c"] = c_val;
    if (lt) {
      r.summary["j"] = lt->j;
      r.summary["lambda_c"] = lt->lambda_c;
      r.summary["tau_c"] = lt->tau_c;
    } else {
      r.summary["j"] = nullptr;
      r.summary["note"] = "no index: c is not below the total mass";
    }
  } else if (which == "eval") {
    r.summary["t"] = t_val;
    r.summary["value"] = exp_sum_eval(s, t_val);
    r.summary["log_value"] = exp_sum_log_eval(s, t_val);
  } else if (which == "mix") {
    r.summary["eps"] = eps;
    r.summary["mixing_time"] = exp_sum_mixing(s, eps);
  }
  return r;
}

struct FamilyArgs {
  std::string kind = "nested";
  std::string recipe = "cycle";
  std::string weights = "const";
  std::size_t row_length = 0;
  std::string n = "1..20";
  std::string eps = "0.25";
  std::string c = "0.5";
  bool criterion = false;
};

struct TrendArgs {
  TrendConfig t;
  void add(CLI::App* app) {
    app->add_option("--slope-threshold", t.slope_threshold)->capture_default_str();
    app->add_option("--growth-ratio", t.growth_ratio)->capture_default_str();
    app->add_option("--bounded-ratio", t.bounded_ratio)->capture_default_str();
    app->add_option("--burn-in", t.burn_in)->capture_default_str();
  }
};

Json cutoff_summary(const CutoffReport& rep) {
  Json j;
  Json fam = Json::object();
  std::istringstream in(family_config_string(rep.spec));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) fam[line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["family"] = std::move(fam);
  j["trend"] = trend_json(rep.trend, rep.spec.trend);
  j["notes"] = rep.notes;
  return j;
}

Table cutoff_table(const CutoffReport& rep) {
  Table t{{"n", "log_tn", "log_l1", "tn_l1", "log_un", "un_statistic"}, {}};
  for (double e : rep.spec.eps_grid) t.columns.push_back("T_l1_eps=" + fmt(e));
  for (const auto& row : rep.rows) {
    std::vector<Cell> cells{static_cast<long long>(row.n), row.log_tn, row.log_l1, row.statistic,
                            row.log_un.value_or(std::nan("")), row.un_statistic.value_or(std::nan(""))};
    for (double m : row.mixing_statistic) cells.emplace_back(m);
    t.rows.push_back(std::move(cells));
  }
  return t;
}

Result cmd_family_scan(const FamilyArgs& fa, const TrendConfig& trend, const Common& c, std::ostream& err) {
  FamilySpec fs;
  if (fa.kind == "F" || fa.kind == "triangular") fs.kind = FamilyKind::kTriangular;
  else if (fa.kind == "G" || fa.kind == "nested") fs.kind = FamilyKind::kNested;
  else fail(ErrorKind::kInvalidParameter, "--kind must be nested (G) or triangular (F)");
  fs.recipe = fa.recipe;
  fs.weights = fa.weights;
  fs.row_length = fa.row_length;
  fs.n_values = parse_index_list(fa.n);
  fs.seed = c.seed;
  fs.trend = trend;
  fs.eps_grid = fa.eps.empty() ? std::vector<double>{} : parse_doubles(fa.eps, "eps");
  fs.c_grid = parse_doubles(fa.c, "c");
  fs.cap = c.cap;
  progress(c, err, "family scan: " + std::to_string(fs.n_values.size()) + " rows");
  const auto rows = build_family(fs);
  const auto rep = cutoff_report(fs, rows);
  Result r;
  r.table = cutoff_table(rep);
  r.summary = cutoff_summary(rep);
  if (fa.criterion) {
    const auto crit = family_criterion(fs, rows);
    Json cj = Json::array();
    auto series = [&](const CriterionSeries& s, const char* what) {
      Json e;
      e["series"] = what;
      e["c"] = s.c;
      e["eps"] = s.eps ? json_number(*s.eps) : Json(nullptr);
      e["skipped_n"] = s.skipped_n;
      e["trend"] = trend_json(s.trend, trend);
      cj.push_back(std::move(e));
    };
    for (const auto& s : crit.tau_lambda) series(s, "tau_lambda");
    for (const auto& s : crit.mixing_lambda) series(s, "mixing_lambda");
    r.summary["criterion"] = {{"series", cj}, {"monotone_in_c", crit.monotone_in_c}, {"notes", crit.notes}};
  }
  return r;
}

Result cmd_experiment_heisenberg(double gamma, const std::string& n, const std::string& mode,
                                 const TrendConfig& trend, const Common& c, std::ostream& err) {
  ExperimentMode m;
  if (mode == "formula") m = ExperimentMode::kFormula;
  else if (mode == "exact-small") m = ExperimentMode::kExactSmall;
  else fail(ErrorKind::kInvalidParameter, "--mode must be formula or exact-small");
  progress(c, err, "experiment heisenberg: gamma = " + fmt(gamma));
  const auto ex = experiment_heisenberg(gamma, parse_index_list(n), m, trend);
  Result r;
  r.summary = cutoff_summary(ex.report);
  r.summary["gamma"] = gamma;
  r.summary["mode"] = mode;
  if (m == ExperimentMode::kFormula) {
    r.table = cutoff_table(ex.report);
    return r;
  }
  Table t{{"n", "t", "t_over_tn", "hellinger", "max_factor", "lemmaA1_lower", "lemmaA1_upper", "proof_lower_sq",
           "proof_upper_sq", "flat_hellinger", "discrete_tv", "discrete_hellinger", "holds"},
          {}};
  bool all = true;
  for (const auto& e : ex.exact) {
    const double nan = std::nan("");
    t.rows.push_back({static_cast<long long>(e.n), e.t, e.t_over_tn, e.hellinger, e.lemma.max_factor, e.lemma.lower,
                      e.lemma.precondition_met ? e.lemma.upper : nan, e.proof_lower,
                      e.proof_upper_applicable ? e.proof_upper : nan, e.flat_hellinger.value_or(nan),
                      e.discrete_tv.value_or(nan), e.discrete_hellinger.value_or(nan), e.holds});
    all &= e.holds;
  }
  r.table = std::move(t);
  r.summary["exact_checks_hold"] = all;
  return r;
}

Result cmd_experiment_randomized(const std::string& mode, double gamma, const std::string& dist, std::size_t trials,
                                 const std::string& n, const TrendConfig& trend, const Common& c, std::ostream& err) {
  RandomizedSpec spec;
  if (mode == "poly") spec.mode = RandomizedMode::kPoly;
  else if (mode == "exp") spec.mode = RandomizedMode::kExp;
  else fail(ErrorKind::kInvalidParameter, "--mode must be poly or exp");
  spec.gamma = gamma;
  spec.sampler = dist;
  spec.seed = c.seed;
  spec.trials = trials;
  spec.n_values = parse_index_list(n);
  spec.trend = trend;
  progress(c, err, "experiment randomized: " + std::to_string(trials) + " trials");
  const auto ex = experiment_randomized(spec);
  Result r;
  Table t{{"trial", "seed", "verdict", "slope", "first", "last", "upper_max_over_min"}, {}};
  for (const auto& tr : ex.trials) {
    t.rows.push_back({static_cast<long long>(tr.trial), static_cast<long long>(tr.seed),
                      std::string(to_string(tr.trend.verdict)), tr.trend.slope, tr.trend.first, tr.trend.last,
                      tr.trend.upper_max_over_min});
  }
  r.table = std::move(t);
  r.summary["mode"] = mode;
  if (spec.mode == RandomizedMode::kPoly) r.summary["gamma"] = gamma;
  r.summary["sampler"] = dist;
  r.summary["seed"] = c.seed;
  r.summary["trials"] = trials;
  r.summary["growing"] = ex.growing;
  r.summary["bounded"] = ex.bounded;
  r.summary["inconclusive"] = ex.inconclusive;
  r.summary["thresholds"] = trend_json(TrendResult{}, trend)["thresholds"];
  return r;
}

Result cmd_verify(const std::vector<std::string>& suites, const WalkArgs& wa, const std::vector<std::string>& fixtures,
                  const std::string& steps, const Common& c, std::ostream& err) {
  VerifyOptions o;
  o.suites = suites;
  o.fixtures = fixtures;
  if (!wa.walk.empty() || !wa.group.empty()) o.fixtures.push_back(wa.descriptor());
  o.max_step = parse_max_step(steps);
  o.seed = c.seed;
  progress(c, err, "verify: " + (suites.empty() ? std::string("all suites") : std::to_string(suites.size()) + " suite(s)"));
  const auto rep = verify_all(o);
  Result r;
  r.summary = Json::parse(rep.to_json());
  r.exit_code = rep.ok() ? 0 : 2;
  r.prefer_json = true;
  if (c.format == "csv") {
    Table t{{"suite", "fixture", "status", "cases", "margin", "detail"}, {}};
    for (const auto& ch : rep.checks) {
      t.rows.push_back({ch.suite, ch.fixture, std::string(to_string(ch.status)), static_cast<long long>(ch.cases),
                        ch.margin, ch.detail});
    }
    r.table = std::move(t);
    r.summary.erase("checks");
  }
  return r;
}

void emit(const Result& r, const std::string& command, const Common& c, const std::vector<std::string>& config_lines,
          std::ostream& out) {
  std::string format = c.format;
  if (format == "auto") format = r.table && !r.prefer_json ? "csv" : "json";
  require(format == "csv" || format == "json", "--format must be csv, json or auto");
  std::ostringstream os;
  if (format == "csv") {
    os << "# mixlab " << kVersion << "\n# command: " << command << "\n# seed: " << c.seed << "\n";
    for (const auto& l : config_lines) os << "# config: " << l << "\n";
    if (r.table) {
      for (std::size_t i = 0; i < r.table->columns.size(); ++i) os << (i ? "," : "") << r.table->columns[i];
      os << "\n";
      for (const auto& row : r.table->rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << to_csv(row[i]);
        os << "\n";
      }
    } else {
      os << "key,value\n";
      for (const auto& [k, v] : r.summary.items()) {
        os << k << "," << to_csv(Cell(v.is_string() ? v.get<std::string>() : v.dump())) << "\n";
      }
    }
    if (r.table && !r.summary.empty()) os << "# summary: " << r.summary.dump() << "\n";
  } else {
    Json j;
    j["tool"] = "mixlab";
    j["version"] = kVersion;
    j["command"] = command;
    j["seed"] = c.seed;
    j["config"] = config_lines;
    if (r.table) {
      Json rows = Json::array();
      for (const auto& row : r.table->rows) {
        Json o;
        for (std::size_t i = 0; i < row.size(); ++i) o[r.table->columns[i]] = to_json(row[i]);
        rows.push_back(std::move(o));
      }
      j["table"] = std::move(rows);
    }
    j["result"] = r.summary;
    os << j.dump(2) << "\n";
  }
  if (c.output.empty() || c.output == "-") {
    out << os.str();
  } else {
    std::ofstream f(c.output, std::ios::binary);
    require(static_cast<bool>(f), "cannot write '" + c.output + "'");
    f << os.str();
  }
}

// Global options plus those of the subcommand path that actually ran.
std::vector<std::string> effective_config(const CLI::App& app) {
  std::string path;
  for (const CLI::App* a = &app;;) {
    const auto sub = a->get_subcommands();
    if (sub.empty()) break;
    a = sub.front();
    path += (path.empty() ? "" : ".") + a->get_name();
  }
  std::vector<std::string> lines;
  std::istringstream in(app.config_to_str(true, false));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.rfind("config=", 0) == 0) continue;
    const auto dot = line.rfind('.', eq);
    const std::string prefix = dot == std::string::npos ? "" : line.substr(0, dot);
    if (prefix.empty() || prefix == path) lines.push_back(line);
  }
  return lines;
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact random-walk mixing laboratory", "mixlab"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common c;
  app.add_option("--format", c.format, "csv | json | auto")->capture_default_str();
  app.add_option("-o,--output", c.output, "output file (default stdout)");
  app.add_option("--seed", c.seed, "random seed")->capture_default_str();
  app.add_option("--cap", c.cap, "group enumeration cap")->capture_default_str();
  app.add_option("--tol", c.tol, "heat-kernel truncation tolerance")->capture_default_str();
  app.add_option("--time-cap", c.time_cap, "continuous mixing-time search cap")->capture_default_str();
  app.add_flag("--progress", c.progress, "progress notes on stderr");
  app.add_option("--cache-dir", c.cache_dir, "directory for memoised factor curves (env MIXLAB_CACHE_DIR)");
  app.add_option("--config", c.config, "key = value file; its entries override flags");

  // group
  std::string group_desc;
  auto* group = app.add_subcommand("group", "list the elements of a group");
  group->add_option("--group", group_desc, "group descriptor")->required();

  // growth
  std::string growth_group, growth_gens = "default";
  std::optional<double> growth_A, growth_d;
  auto* growth = app.add_subcommand("growth", "volume growth and moderate-growth certificate");
  growth->add_option("--group", growth_group)->required();
  growth->add_option("--gens", growth_gens)->capture_default_str();
  growth->add_option("--A", growth_A, "moderate-growth constant (default: smallest valid)");
  growth->add_option("--d", growth_d, "moderate-growth exponent (default by group kind)");

  // walk
  auto* walk = app.add_subcommand("walk", "single-walk computations");
  walk->require_subcommand(1);
  WalkArgs wa_curve, wa_mix, wa_gap, wa_bounds;
  std::string curve_clock = "discrete", curve_steps, curve_times;
  auto* curve = walk->add_subcommand("curve", "TV and Hellinger distance curve");
  wa_curve.add(curve);
  curve->add_option("--clock", curve_clock)->capture_default_str();
  curve->add_option("--steps", curve_steps, "discrete steps N or 0..N (default 0..64)");
  curve->add_option("--times", curve_times, "continuous times: list or a..b:step (default 0..8:0.5)");
  std::string mix_metric = "tv", mix_clock = "discrete";
  double mix_eps = 0.25;
  auto* mix = walk->add_subcommand("mix", "mixing time");
  wa_mix.add(mix);
  mix->add_option("--metric", mix_metric)->capture_default_str();
  mix->add_option("--clock", mix_clock)->capture_default_str();
  mix->add_option("--eps", mix_eps)->capture_default_str();
  auto* gap = walk->add_subcommand("gap", "spectral gap");
  wa_gap.add(gap);
  std::string bounds_kind = "moderate", bounds_steps, bounds_times;
  std::optional<double> bounds_A, bounds_d;
  auto* bounds = walk->add_subcommand("bounds", "moderate-growth bound checks");
  wa_bounds.add(bounds);
  bounds->add_option("--kind", bounds_kind, "moderate | continuous")->capture_default_str();
  bounds->add_option("--A", bounds_A);
  bounds->add_option("--d", bounds_d);
  bounds->add_option("--steps", bounds_steps);
  bounds->add_option("--times", bounds_times);

  // product
  auto* product = app.add_subcommand("product", "product chains");
  product->require_subcommand(1);
  std::string prod_factors, prod_weights, prod_times;
  double prod_A = kDefaultLemmaA;
  auto* pcurve = product->add_subcommand("curve", "continuous-time product Hellinger curve");
  pcurve->add_option("--factors", prod_factors, "walk descriptors joined by '*'")->required();
  pcurve->add_option("--weights", prod_weights, "coordinate weights (normalised; default equal)");
  pcurve->add_option("--times", prod_times, "times: list or a..b:step (default 0..10)");
  pcurve->add_option("--A", prod_A, "product sandwich constant")->capture_default_str();

  // laplace
  auto* laplace = app.add_subcommand("laplace", "exponential sums and cutoff-time formulas");
  laplace->require_subcommand(1);
  std::string lp_a, lp_lambda, lp_l, lp_direction = "increasing", lp_rule = "const", lp_n;
  double lp_c = 0.5, lp_t = 0.0, lp_eps = 0.25;
  TrendArgs lp_trend;
  std::string laplace_which;
  for (const char* name : {"tau", "eval", "mix", "tn", "un", "probe"}) {
    auto* s = laplace->add_subcommand(name);
    if (std::string(name) == "tau" || std::string(name) == "eval" || std::string(name) == "mix") {
      s->add_option("--a", lp_a, "weights a_i")->required();
      s->add_option("--lambda", lp_lambda, "rates lambda_i")->required();
    }
    if (std::string(name) == "tau") s->add_option("--c", lp_c)->capture_default_str();
    if (std::string(name) == "eval") s->add_option("--t", lp_t)->capture_default_str();
    if (std::string(name) == "mix") s->add_option("--eps", lp_eps)->capture_default_str();
    if (std::string(name) == "tn" || std::string(name) == "un") s->add_option("--l", lp_l, "row l_1..l_k")->required();
    if (std::string(name) == "un") s->add_option("--direction", lp_direction)->capture_default_str();
    if (std::string(name) == "probe") {
      s->add_option("--rule", lp_rule, "const | power:g | logpower:g | exp:g | geom:r")->capture_default_str();
      s->add_option("--n", lp_n, "index list (default 1..200)");
      lp_trend.add(s);
    }
    s->callback([&laplace_which, s] { laplace_which = s->get_name(); });
  }

  // family
  auto* family = app.add_subcommand("family", "product-chain families");
  family->require_subcommand(1);
  FamilyArgs fa;
  TrendArgs fam_trend;
  auto* scan = family->add_subcommand("scan", "cutoff statistics across a family");
  scan->add_option("--kind", fa.kind, "nested (G) | triangular (F)")->capture_default_str();
  scan->add_option("--recipe", fa.recipe, "descriptor template, cycle or heisenberg")->capture_default_str();
  scan->add_option("--weights", fa.weights, "weight rule")->capture_default_str();
  scan->add_option("--row-length", fa.row_length, "triangular row length (0: k_n = n)")->capture_default_str();
  scan->add_option("--n", fa.n, "family indices")->capture_default_str();
  scan->add_option("--eps", fa.eps, "eps grid for T_n(eps)")->capture_default_str();
  scan->add_option("--c", fa.c, "c grid for the Laplace criterion")->capture_default_str();
  scan->add_flag("--criterion", fa.criterion, "also run the Laplace criterion scan");
  fam_trend.add(scan);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "phase-transition experiments");
  experiment->require_subcommand(1);
  double hx_gamma = 0.5;
  std::string hx_n = "1..60", hx_mode = "formula";
  TrendArgs hx_trend;
  auto* heis = experiment->add_subcommand("heisenberg", "Heisenberg products with p_n = n^2 e^{-n^gamma}");
  heis->add_option("--gamma", hx_gamma)->capture_default_str();
  heis->add_option("--n", hx_n)->capture_default_str();
  heis->add_option("--mode", hx_mode, "formula | exact-small")->capture_default_str();
  hx_trend.add(heis);
  std::string rx_mode = "poly", rx_dist = "uniform:0:2", rx_n = "1..400";
  double rx_gamma = 2.0;
  std::size_t rx_trials = 20;
  TrendArgs rx_trend;
  auto* rand = experiment->add_subcommand("randomized", "cycle products with random weights");
  rand->add_option("--mode", rx_mode, "poly | exp")->capture_default_str();
  rand->add_option("--gamma", rx_gamma)->capture_default_str();
  rand->add_option("--dist", rx_dist, "sampler spec")->capture_default_str();
  rand->add_option("--trials", rx_trials)->capture_default_str();
  rand->add_option("--n", rx_n)->capture_default_str();
  rx_trend.add(rand);

  // verify
  auto* verify = app.add_subcommand("verify", "run the inequality and identity battery");
  std::vector<std::string> vf_suites, vf_fixtures;
  std::string vf_steps = "0..64";
  WalkArgs wa_verify;
  verify->add_option("suites", vf_suites, "suite names (default all)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  wa_verify.add(verify);
  verify->add_option("--fixture", vf_fixtures, "extra fixture descriptor (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  verify->add_option("--steps", vf_steps, "discrete steps N or 0..N")->capture_default_str();

  try {
    std::vector<std::string> args = args_in;
    for (std::size_t i = 0; i < args_in.size(); ++i) {
      std::string path;
      if (args_in[i] == "--config" && i + 1 < args_in.size()) path = args_in[i + 1];
      else if (args_in[i].rfind("--config=", 0) == 0) path = args_in[i].substr(9);
      if (!path.empty()) {
        const auto extra = config_arguments(path);
        args.insert(args.end(), extra.begin(), extra.end());
      }
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (!c.cache_dir.empty()) setenv("MIXLAB_CACHE_DIR", c.cache_dir.c_str(), 1);
    std::string command;
    Result r;
    if (*group) {
      command = "group";
      r = cmd_group(group_desc, c);
    } else if (*growth) {
      command = "growth";
      r = cmd_growth(growth_group, growth_gens, growth_A, growth_d, c);
    } else if (*walk) {
      if (*curve) {
        command = "walk curve";
        r = cmd_walk_curve(wa_curve, curve_clock, curve_steps, curve_times, c);
      } else if (*mix) {
        command = "walk mix";
        r = cmd_walk_mix(wa_mix, mix_metric, mix_clock, mix_eps, c);
      } else if (*gap) {
        command = "walk gap";
        r = cmd_walk_gap(wa_gap, c);
      } else {
        command = "walk bounds";
        r = cmd_walk_bounds(wa_bounds, bounds_kind, bounds_A, bounds_d, bounds_steps, bounds_times, c);
      }
    } else if (*product) {
      command = "product curve";
      r = cmd_product_curve(prod_factors, prod_weights, prod_times, prod_A, c);
    } else if (*laplace) {
      command = "laplace " + laplace_which;
      r = cmd_laplace(laplace_which, lp_a, lp_lambda, lp_c, lp_t, lp_eps, lp_l, lp_direction, lp_rule, lp_n,
                      lp_trend.t);
    } else if (*family) {
      command = "family scan";
      r = cmd_family_scan(fa, fam_trend.t, c, err);
    } else if (*experiment) {
      if (*heis) {
        command = "experiment heisenberg";
        r = cmd_experiment_heisenberg(hx_gamma, hx_n, hx_mode, hx_trend.t, c, err);
      } else {
        command = "experiment randomized";
        r = cmd_experiment_randomized(rx_mode, rx_gamma, rx_dist, rx_trials, rx_n, rx_trend.t, c, err);
      }
    } else {
      command = "verify";
      r = cmd_verify(vf_suites, wa_verify, vf_fixtures, vf_steps, c, err);
    }
    emit(r, command, c, effective_config(app), out);
    if (r.exit_code == 2) err << "verify: at least one check failed\n";
    return r.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mixlab
