#include "mixlab/laplace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixlab/error.hpp"
#include "mixlab/numeric.hpp"

namespace mixlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double parse_number(std::string_view s, std::string_view what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::kInvalidParameter, "cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

ExponentialSum::ExponentialSum(std::vector<double> a, std::vector<double> lam)
    : a_(std::move(a)), lam_(std::move(lam)) {
  require(!a_.empty() && a_.size() == lam_.size(),
          "exponential sum needs equally many weights and rates (at least one)");
  for (std::size_t i = 0; i < a_.size(); ++i) {
    require(std::isfinite(a_[i]) && a_[i] > 0.0, "exponential sum weights must be positive");
    require(std::isfinite(lam_[i]) && lam_[i] > 0.0, "exponential sum rates must be positive");
  }
  std::vector<std::size_t> order(a_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return lam_[x] < lam_[y]; });
  for (std::size_t i : order) {
    sorted_a_.push_back(a_[i]);
    sorted_lam_.push_back(lam_[i]);
  }
  total_ = compensated_sum(a_);
}

double exp_sum_log_eval(const ExponentialSum& s, double t) {
  require(t >= 0.0, "time must be >= 0");
  std::vector<double> terms(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) terms[i] = std::log(s.a()[i]) - s.lam()[i] * t;
  return log_sum_exp(terms);
}

double exp_sum_eval(const ExponentialSum& s, double t) { return std::exp(exp_sum_log_eval(s, t)); }

double exp_sum_mixing(const ExponentialSum& s, double eps) {
  require(eps > 0.0 && std::isfinite(eps), "eps must be positive");
  if (s.total_mass() <= eps) return 0.0;
  const double log_eps = std::log(eps);
  // f(t) <= (sum a) e^{-lambda_min t}, so this time already has f <= eps.
  double hi = std::log(s.total_mass() / eps) / s.sorted_lam().front();
  while (exp_sum_log_eval(s, hi) > log_eps) hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
  double lo = 0.0;
  while (true) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (exp_sum_log_eval(s, mid) <= log_eps ? hi : lo) = mid;
  }
  return hi;
}

std::optional<LambdaTau> lambda_tau(const ExponentialSum& s, double c) {
  require(c > 0.0, "c must be positive");
  const auto a = s.sorted_a();
  const auto lam = s.sorted_lam();
  CompensatedSum prefix;
  std::optional<LambdaTau> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    prefix.add(a[i]);
    const double sum = prefix.value();
    if (!out && sum > c) out = LambdaTau{i + 1, lam[i], 0.0};
    if (out) out->tau_c = std::max(out->tau_c, std::log1p(sum) / lam[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

double theorem_tn_log(std::span<const double> log_lrow) {
  require(!log_lrow.empty(), "empty row");
  double best = kNegInf;
  for (std::size_t i = 0; i < log_lrow.size(); ++i) {
    require(std::isfinite(log_lrow[i]), "row entries must be positive and finite");
    if (i > 0 && log_lrow[i] < log_lrow[i - 1]) {
      fail(ErrorKind::kInvalidParameter, "row is not non-decreasing at index " + std::to_string(i + 1));
    }
    best = std::max(best, std::log(std::log(static_cast<double>(i) + 2.0)) - log_lrow[i]);
  }
  return best;
}

double theorem_tn(std::span<const double> lrow) {
  std::vector<double> logs(lrow.size());
  for (std::size_t i = 0; i < lrow.size(); ++i) {
    require(lrow[i] > 0.0, "row entries must be positive");
    logs[i] = std::log(lrow[i]);
  }
  return theorem_tn_log(logs);
}

UnResult theorem_un_log(std::span<const double> log_lseq, Direction direction) {
  require(!log_lseq.empty(), "empty sequence");
  const std::size_t n = log_lseq.size();
  for (std::size_t i = 1; i < n; ++i) {
    const bool ok = direction == Direction::kIncreasing ? log_lseq[i] >= log_lseq[i - 1]
                                                        : log_lseq[i] <= log_lseq[i - 1];
    if (!ok) fail(ErrorKind::kInvalidParameter, "sequence is not monotone in the declared direction");
  }
  UnResult r;
  r.log_u = kNegInf;
  for (std::size_t i = 1; i <= n; ++i) {
    // increasing: log(i+1)/l_i;  decreasing: log(i+1)/l_{n-i+1}
    const double log_l = direction == Direction::kIncreasing ? log_lseq[i - 1] : log_lseq[n - i];
    r.log_u = std::max(r.log_u, std::log(std::log(static_cast<double>(i) + 1.0)) - log_l);
  }
  r.log_statistic = direction == Direction::kIncreasing ? r.log_u : r.log_u + log_lseq[n - 1];
  return r;
}

UnResult theorem_un(std::span<const double> lseq, Direction direction) {
  std::vector<double> logs(lseq.size());
  for (std::size_t i = 0; i < lseq.size(); ++i) {
    require(lseq[i] > 0.0, "sequence entries must be positive");
    logs[i] = std::log(lseq[i]);
  }
  return theorem_un_log(logs, direction);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Trend t) noexcept {
  switch (t) {
    case Trend::kGrowing: return "growing";
    case Trend::kBounded: return "bounded";
    case Trend::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

TrendResult classify_trend(std::span<const double> n, std::span<const double> values,
                           const TrendConfig& config) {
  require(n.size() == values.size(), "trend test needs one value per n");
  TrendResult r;
  const std::size_t start = std::min(config.burn_in, n.size());
  const auto ns = n.subspan(start);
  const auto vs = values.subspan(start);
  r.points = vs.size();
  if (vs.size() < 2) return r;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    require(ns[i] > 0.0 && std::isfinite(vs[i]), "trend test needs n > 0 and finite values");
  }
  r.first = vs.front();
  r.last = vs.back();
  const std::size_t half = vs.size() / 2;  // upper half: the last ceil(N/2) points
  const auto un = ns.subspan(half);
  const auto uv = vs.subspan(half);

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    mx += std::log(un[i]);
    my += uv[i];
  }
  mx /= static_cast<double>(uv.size());
  my /= static_cast<double>(uv.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < uv.size(); ++i) {
    const double dx = std::log(un[i]) - mx;
    sxy += dx * (uv[i] - my);
    sxx += dx * dx;
  }
  r.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  const auto [lo, hi] = std::minmax_element(uv.begin(), uv.end());
  r.upper_max_over_min = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();

  if (r.slope > config.slope_threshold && r.last > config.growth_ratio * r.first) {
    r.verdict = Trend::kGrowing;
  } else if (r.upper_max_over_min < config.bounded_ratio) {
    r.verdict = Trend::kBounded;
  }
  return r;
}

// ---------------------------------------------------------------------------

CriterionReport cutoff_criterion_scan(std::span<const CriterionRow> rows,
                                      std::span<const double> c_grid,
                                      std::span<const double> eps_grid,
                                      const TrendConfig& config) {
  CriterionReport report;
  std::vector<double> cs(c_grid.begin(), c_grid.end());
  std::sort(cs.begin(), cs.end());
  for (double c : cs) {
    CriterionSeries tl{c, std::nullopt, {}, {}, {}, {}};
    std::vector<CriterionSeries> ml;
    for (double eps : eps_grid) ml.push_back({c, eps, {}, {}, {}, {}});
    for (const auto& row : rows) {
      const auto lt = lambda_tau(row.sum, c);
      if (!lt) {
        tl.skipped_n.push_back(row.n);
        for (auto& m : ml) m.skipped_n.push_back(row.n);
        continue;
      }
      tl.n.push_back(row.n);
      tl.values.push_back(lt->tau_c * lt->lambda_c);
      for (auto& m : ml) {
        m.n.push_back(row.n);
        m.values.push_back(exp_sum_mixing(row.sum, *m.eps) * lt->lambda_c);
      }
    }
    if (!tl.skipped_n.empty()) {
      report.notes.push_back("c = " + std::to_string(c) + ": " + std::to_string(tl.skipped_n.size()) +
                             " row(s) skipped, c is not below the total mass");
    }
    tl.trend = classify_trend(tl.n, tl.values, config);
    for (auto& m : ml) m.trend = classify_trend(m.n, m.values, config);
    report.tau_lambda.push_back(std::move(tl));
    for (auto& m : ml) report.mixing_lambda.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < report.tau_lambda.size(); ++i) {
    if (report.tau_lambda[i].trend.verdict != Trend::kGrowing) continue;
    for (std::size_t k = i + 1; k < report.tau_lambda.size(); ++k) {
      // Only compare series that cover rows at all.
      if (report.tau_lambda[k].n.size() < 2) continue;
      if (report.tau_lambda[k].trend.verdict != Trend::kGrowing) {
        report.monotone_in_c = false;
        report.notes.push_back("tau*lambda grows at c = " + std::to_string(report.tau_lambda[i].c) +
                               " but not at c' = " + std::to_string(report.tau_lambda[k].c));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double sequence_rule_log(std::string_view rule, double n) {
  require(n >= 1.0, "sequence index must be >= 1");
  const auto colon = rule.find(':');
  const auto name = rule.substr(0, colon);
  if (name == "const") return 0.0;
  require(colon != std::string_view::npos, "sequence rule '" + std::string(rule) + "' needs a parameter");
  const double g = parse_number(rule.substr(colon + 1), "sequence parameter");
  if (name == "power") return g * std::log(n);
  if (name == "logpower") return g * std::log(std::log(n + 1.0));
  if (name == "exp") return -std::pow(n, g);
  if (name == "geom") {
    require(g > 0.0, "geometric ratio must be positive");
    return n * std::log(g);
  }
  fail(ErrorKind::kInvalidParameter, "unknown sequence rule '" + std::string(rule) + "'");
}

LemmaProbeReport lemma_unln_probe(std::string_view rule, std::span<const double> n_values,
                                  const TrendConfig& config) {
  require(!n_values.empty(), "probe needs at least one n");
  const auto n_max = static_cast<std::size_t>(*std::max_element(n_values.begin(), n_values.end()));
  require(n_max >= 1, "probe needs n >= 1");
  std::vector<double> log_l(n_max + 1);
  for (std::size_t i = 1; i <= n_max + 1; ++i) log_l[i - 1] = sequence_rule_log(rule, static_cast<double>(i));

  LemmaProbeReport rep;
  const bool increasing = std::is_sorted(log_l.begin(), log_l.end());
  const bool decreasing = std::is_sorted(log_l.rbegin(), log_l.rend());
  require(increasing || decreasing, "sequence rule is not monotone over the range");
  rep.direction = increasing ? Direction::kIncreasing : Direction::kDecreasing;

  std::vector<double> ns, stats, ratios;
  for (double nd : n_values) {
    const auto n = static_cast<std::size_t>(nd);
    require(n >= 1 && static_cast<double>(n) == nd, "probe indices must be positive integers");
    LemmaProbeRow row;
    row.n = nd;
    row.log_n_over_l = std::log(nd) * std::exp(-log_l[n - 1]);
    row.ratio = std::exp(log_l[n - 1] - log_l[n]);
    row.un_statistic = std::exp(theorem_un_log(std::span(log_l).first(n), rep.direction).log_statistic);
    rep.rows.push_back(row);
    ns.push_back(nd);
    stats.push_back(row.un_statistic);
    ratios.push_back(row.ratio);
  }
  rep.statistic_trend = classify_trend(ns, stats, config);

  constexpr double kRatioBand = 0.05;
  if (rep.direction == Direction::kIncreasing) {
    std::vector<double> running_sup;
    double sup = 0.0;
    for (const auto& r : rep.rows) running_sup.push_back(sup = std::max(sup, r.log_n_over_l));
    const auto sup_trend = classify_trend(ns, running_sup, config);
    rep.clause = sup_trend.verdict == Trend::kGrowing   ? "(1): sup log n / l_n unbounded, u_n grows"
                 : sup_trend.verdict == Trend::kBounded ? "(1): sup log n / l_n bounded, u_n bounded"
                                                        : "(1): inconclusive over this range";
  } else {
    const double tail_ratio = ratios.back();
    const double tail_min = *std::min_element(ratios.begin() + ratios.size() / 2, ratios.end());
    if (tail_ratio - 1.0 < kRatioBand) {
      rep.clause = "(2): l_n / l_{n+1} -> 1, u_n l_n grows";
    } else if (tail_min - 1.0 > kRatioBand) {
      rep.clause = "(2): liminf l_n / l_{n+1} > 1, u_n l_n bounded";
    } else {
      rep.clause = "(2): inconclusive over this range";
    }
  }
  return rep;
}

}  // namespace mixlab
