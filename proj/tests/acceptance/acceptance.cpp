// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/family.hpp"
#include "mixlab/growth.hpp"
#include "mixlab/laplace.hpp"
#include "mixlab/product.hpp"
#include "mixlab/verify.hpp"
#include "mixlab/walk.hpp"

using namespace mixlab;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) detail = what;
      ok = false;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const std::vector<std::string> kBattery{"Z:3@lazy", "Z:11@lazy", "Z:9@lazy@sqrt",
                                        "H:3@uniform", "H:4@uniform", "Z:3@lazy*Z:5@lazy"};

double rho_sq(const WalkSpec& w) {
  const auto p = growth_profile(w.group(), lazified_support(w));
  return static_cast<double>(p.diameter * p.diameter);
}

std::vector<double> battery_times(const WalkSpec& w) {
  const double r2 = rho_sq(w);
  return {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, r2, 4.0 * r2};
}

Outcome diameters() {
  Outcome o;
  for (std::uint32_t n = 2; n <= 40; ++n) {
    const auto g = make_cyclic(n);
    const auto p = growth_profile(g, parse_generators(g, "0,1,-1"));
    o.expect(p.diameter == n / 2, "Z_" + std::to_string(n) + " diameter " + std::to_string(p.diameter));
  }
  std::string hs;
  for (std::uint32_t m = 3; m <= 7; ++m) {
    const auto g = make_heisenberg(m);
    const auto p = growth_profile(g, standard_generators(g));
    o.expect(p.diameter + 1 >= m && p.diameter <= m + 2,
             "H_" + std::to_string(m) + " diameter " + std::to_string(p.diameter));
    hs += (hs.empty() ? "" : ",") + std::to_string(p.diameter);
  }
  if (o.ok) o.detail = "Z_n rho = floor(n/2) for n=2..40; H_3..7 rho = " + hs;
  return o;
}

Outcome moderate_growth() {
  Outcome o;
  double worst_z = 0.0, worst_h = 0.0;
  for (std::uint32_t n = 2; n <= 40; ++n) {
    const auto g = make_cyclic(n);
    const auto p = growth_profile(g, parse_generators(g, "0,1,-1"));
    o.expect(check_moderate_growth(p, 1.0, 1.0).satisfied, "(1,1) fails on Z_" + std::to_string(n));
    const double a = minimal_A(p, 1.0);
    worst_z = std::max(worst_z, a);
    o.expect(a <= 1.0, "minimal_A " + num(a) + " > 1 on Z_" + std::to_string(n));
  }
  for (std::uint32_t m = 3; m <= 7; ++m) {
    const auto g = make_heisenberg(m);
    const auto p = growth_profile(g, standard_generators(g));
    o.expect(check_moderate_growth(p, 48.0, 3.0).satisfied, "(48,3) fails on H_" + std::to_string(m));
    const double a = minimal_A(p, 3.0);
    worst_h = std::max(worst_h, a);
    o.expect(a <= 48.0, "minimal_A " + num(a) + " > 48 on H_" + std::to_string(m));
  }
  if (o.ok) o.detail = "max minimal_A: cyclic " + num(worst_z) + ", Heisenberg " + num(worst_h);
  return o;
}

Outcome sandwich() {
  Outcome o;
  double worst = INFINITY;
  std::size_t cases = 0;
  for (const auto& desc : kBattery) {
    const auto f = make_fixture(desc);
    auto pts = discrete_curve(f.walk, 64);
    const auto cts = continuous_curve(f.walk, battery_times(f.walk));
    pts.insert(pts.end(), cts.begin(), cts.end());
    for (const auto& p : pts) {
      const double s = sandwich_slack(p.tv, p.hellinger);
      worst = std::min(worst, s);
      ++cases;
      o.expect(s >= -1e-10, desc + " slack " + num(s) + " at t=" + num(p.time));
    }
  }
  if (o.ok) o.detail = std::to_string(cases) + " points, min slack " + num(worst);
  return o;
}

Outcome product_identity() {
  Outcome o;
  double worst = 0.0;
  const std::vector<std::string> products{"Z:3@lazy*Z:5@lazy", "Z:2@lazy*Z:3@lazy*Z:4@lazy", "H:3@uniform*Z:7@lazy",
                                          "Z:9@lazy@sqrt*H:3@uniform"};
  for (const auto& desc : products) {
    const auto f = make_fixture(desc);
    o.expect(f.walk.group().order() <= 2000, desc + " too large for the oracle");
    for (double t : battery_times(f.walk)) {
      const double formula = product_hellinger_ct(*f.product, t);
      const double oracle = hellinger_distance(heat_distribution(f.walk, t));
      worst = std::max(worst, std::abs(formula - oracle));
      o.expect(std::abs(formula - oracle) <= 1e-9, desc + " differs by " + num(formula - oracle) + " at t=" + num(t));
    }
  }
  // Discrete clock: factor i takes round(p_i m) steps; the identity should break.
  const auto f = make_fixture("Z:3@lazy*Z:5@lazy");
  double gap = 0.0;
  for (std::size_t m = 1; m <= 8; ++m) {
    std::vector<double> d;
    for (std::size_t i = 0; i < f.product->factors.size(); ++i) {
      const auto steps = static_cast<std::size_t>(std::llround(f.product->weights[i] * static_cast<double>(m)));
      d.push_back(hellinger_distance(walk_distribution(f.product->factors[i], steps)));
    }
    gap = std::max(gap, std::abs(combine_product_hellinger(d) - hellinger_distance(walk_distribution(f.walk, m))));
  }
  o.expect(gap >= 1e-3, "discrete witness gap only " + num(gap));
  if (o.ok) o.detail = "max continuous error " + num(worst) + "; discrete witness gap " + num(gap);
  return o;
}

Outcome submultiplicative() {
  Outcome o;
  double worst = INFINITY;
  for (const std::string desc : {"Z:11@lazy", "H:3@uniform"}) {
    const auto w = parse_walk_descriptor(desc);
    const auto d = discrete_curve(w, 40);
    for (std::size_t a = 0; a <= 40; ++a) {
      if (a > 0) o.expect(d[a].hellinger <= d[a - 1].hellinger + 1e-12, desc + " not monotone at m=" + std::to_string(a));
      for (std::size_t b = 0; a + b <= 40; ++b) {
        const double slack = 16 * d[a].hellinger * d[b].hellinger + 1e-10 - 4 * d[a + b].hellinger;
        worst = std::min(worst, slack);
        o.expect(slack >= 0, desc + " fails at " + std::to_string(a) + "+" + std::to_string(b));
      }
    }
    const double unit = 0.1 * std::max(1.0, rho_sq(w));
    std::vector<double> times;
    for (int k = 0; k <= 18; ++k) times.push_back(unit * k);
    const auto c = continuous_curve(w, times);
    for (std::size_t a = 0; a < 10; ++a) {
      if (a > 0) o.expect(c[a].hellinger <= c[a - 1].hellinger + 1e-12, desc + " not monotone at t=" + num(c[a].time));
      for (std::size_t b = 0; b < 10; ++b) {
        const double slack = 16 * c[a].hellinger * c[b].hellinger + 1e-10 - 4 * c[a + b].hellinger;
        worst = std::min(worst, slack);
        o.expect(slack >= 0, desc + " fails at t=" + num(c[a].time) + "+" + num(c[b].time));
      }
    }
  }
  if (o.ok) o.detail = "min slack " + num(worst);
  return o;
}

Outcome moderate_bounds() {
  Outcome o;
  std::vector<std::size_t> steps(101);
  for (std::size_t m = 0; m <= 100; ++m) steps[m] = m;
  std::size_t lower_checked = 0, gated = 0;
  auto run = [&](const std::string& desc, double A, double d) {
    const auto w = parse_walk_descriptor(desc);
    const auto p = growth_profile(w.group(), w.support());
    const auto cert = check_moderate_growth(p, A, d);
    o.expect(cert.satisfied, desc + " certificate fails");
    const auto r = check_moderate_bounds(w, cert, p, steps);
    o.expect(r.upper.status == CheckStatus::kPass, desc + " upper: " + std::string(to_string(r.upper.status)));
    o.expect(r.lower.status != CheckStatus::kFail, desc + " lower fails");
    if (r.lower.status == CheckStatus::kPass) ++lower_checked;
    if (r.lower.status == CheckStatus::kPrerequisiteNotMet) ++gated;
    return r;
  };
  for (int n = 5; n <= 25; ++n) {
    const auto r = run("Z:" + std::to_string(n) + "@lazy", 1.0, 1.0);
    if (n == 11) {
      o.expect(r.lower.status == CheckStatus::kPrerequisiteNotMet,
               "Z_11 lower reports " + std::string(to_string(r.lower.status)));
    }
  }
  for (int m = 3; m <= 5; ++m) run("H:" + std::to_string(m) + "@uniform", 48.0, 3.0);
  if (o.ok) {
    o.detail = "upper holds on 24 chains; lower checked " + std::to_string(lower_checked) + ", gated " +
               std::to_string(gated) + " (Z_11 gated)";
  }
  return o;
}

Outcome continuous_lower() {
  Outcome o;
  const auto z2 = parse_walk_descriptor("Z:2@lazy");
  const double gap = spectral_gap(z2);
  double err = 0.0;
  for (double t : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double tv = tv_distance(heat_distribution(z2, t));
    err = std::max(err, std::abs(tv - 0.5 * std::exp(-gap * t)));
  }
  o.expect(err <= 1e-8, "Z_2 equality off by " + num(err));
  double margin = INFINITY, ratio = INFINITY;
  for (const auto& desc : kBattery) {
    const auto f = make_fixture(desc);
    if (!f.walk.symmetric()) continue;
    const double r2 = rho_sq(f.walk);
    const double lambda = spectral_gap(f.walk);
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      const double t = k * r2;
      const double tv = tv_distance(heat_distribution(f.walk, t));
      const double m = tv - 0.5 * std::exp(-lambda * t);
      margin = std::min(margin, m);
      ratio = std::min(ratio, tv / (0.5 * std::exp(-lambda * t)));
      o.expect(m > 0.0, desc + " margin " + num(m) + " at t=" + num(t));
    }
  }
  if (o.ok) o.detail = "Z_2 error " + num(err) + "; min margin " + num(margin) + ", min tv/bound " + num(ratio);
  return o;
}

Outcome laplace_values() {
  Outcome o;
  const ExponentialSum s({1, 1, 1}, {1, 2, 3});
  const auto a = lambda_tau(s, 0.5);
  const auto b = lambda_tau(s, 1.5);
  o.expect(a && std::abs(a->tau_c - std::log(2.0)) <= 1e-12, "tau(0.5) wrong");
  o.expect(b && std::abs(b->tau_c - std::max(std::log(3.0) / 2, std::log(4.0) / 3)) <= 1e-12, "tau(1.5) wrong");
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int row = 0; row < 100; ++row) {
    const std::size_t k = 1 + static_cast<std::size_t>(unif(rng) * 8);
    std::vector<double> w(k), l(k);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = 0.05 + 2.0 * unif(rng);
      l[i] = 0.01 + 5.0 * unif(rng);
    }
    const ExponentialSum e(w, l);
    const double eps = 0.01 + 0.5 * unif(rng) * e.total_mass();
    const double t = exp_sum_mixing(e, eps);
    if (t == 0.0) {
      o.expect(e.total_mass() <= eps, "zero time with mass above eps");
      continue;
    }
    const double rel = std::abs(exp_sum_eval(e, t) - eps) / eps;
    worst = std::max(worst, rel);
    o.expect(rel <= 1e-9, "row " + std::to_string(row) + " relative error " + num(rel));
  }
  if (o.ok) o.detail = "tau values exact to 1e-12; max inversion error " + num(worst);
  return o;
}

std::vector<std::size_t> range(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v;
  for (std::size_t i = a; i <= b; ++i) v.push_back(i);
  return v;
}

std::string trend_text(const TrendResult& t) {
  return std::string(to_string(t.verdict)) + " (slope " + num(t.slope) + ", first " + num(t.first) + ", last " +
         num(t.last) + ")";
}

Outcome phase_transition() {
  Outcome o;
  const auto low = experiment_heisenberg(0.5, range(1, 60));
  const auto again = experiment_heisenberg(0.5, range(1, 60));
  const auto high = experiment_heisenberg(1.5, range(1, 60));
  bool same = low.report.rows.size() == again.report.rows.size();
  for (std::size_t i = 0; same && i < low.report.rows.size(); ++i) {
    same = low.report.rows[i].statistic == again.report.rows[i].statistic;
  }
  o.expect(same, "not deterministic");
  o.expect(low.report.trend.verdict == Trend::kGrowing, "gamma=0.5 is " + trend_text(low.report.trend));
  o.expect(high.report.trend.verdict == Trend::kBounded, "gamma=1.5 is " + trend_text(high.report.trend));
  if (o.ok) o.detail = "gamma=0.5 " + trend_text(low.report.trend) + "; gamma=1.5 bounded";
  else o.detail += "; gamma=1.5 is " + std::string(to_string(high.report.trend.verdict));
  return o;
}

Outcome randomized() {
  Outcome o;
  auto run = [](RandomizedMode mode, double gamma, const std::string& dist) {
    RandomizedSpec s;
    s.mode = mode;
    s.gamma = gamma;
    s.sampler = dist;
    s.seed = 42;
    s.trials = 20;
    s.n_values = range(1, 400);
    return experiment_randomized(s);
  };
  const auto p2 = run(RandomizedMode::kPoly, 2.0, "uniform:0:2");
  const auto p3 = run(RandomizedMode::kPoly, 3.0, "uniform:0:2");
  const auto ex = run(RandomizedMode::kExp, 1.0, "uniform:1:3");
  auto counts = [](const RandomizedExperiment& e) {
    return std::to_string(e.growing) + "g/" + std::to_string(e.bounded) + "b/" + std::to_string(e.inconclusive) + "i";
  };
  o.expect(p2.growing >= 19, "poly 2: " + counts(p2) + " (need 19 growing)");
  o.expect(p3.bounded >= 19, "poly 3: " + counts(p3) + " (need 19 bounded)");
  o.expect(ex.bounded >= 19, "exp: " + counts(ex) + " (need 19 bounded)");
  const std::string all = "poly2 " + counts(p2) + ", poly3 " + counts(p3) + ", exp " + counts(ex);
  o.detail = o.ok ? all : o.detail + "; " + all;
  return o;
}

Outcome determinism() {
  Outcome o;
  VerifyOptions opt;
  opt.seed = 42;
  const auto a = verify_all(opt).to_json();
  const auto b = verify_all(opt).to_json();
  o.expect(a == b, "reports differ");
  o.expect(verify_all(opt).ok(), "battery has failures");
  if (o.ok) o.detail = std::to_string(a.size()) + " identical bytes";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> all{
      {1, "diameters", 5, diameters},
      {2, "moderate growth certificates", 5, moderate_growth},
      {3, "TV/Hellinger sandwich", 60, sandwich},
      {4, "product Hellinger identity", 60, product_identity},
      {5, "submultiplicativity", 30, submultiplicative},
      {6, "discrete moderate-growth bounds", 60, moderate_bounds},
      {7, "continuous spectral lower bound", 30, continuous_lower},
      {8, "Laplace criterion values", 5, laplace_values},
      {9, "Heisenberg phase transition", 10, phase_transition},
      {10, "randomized products", 60, randomized},
      {11, "verify determinism", 60, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      o.detail += "; over the " + num(c.budget_s) + " s budget";
      o.ok = false;
    }
    if (!o.ok) ++failed;
    std::printf("%s %2d %-34s %8.3fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
