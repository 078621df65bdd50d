#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "mixlab/error.hpp"
#include "mixlab/laplace.hpp"

using namespace mixlab;
using doctest::Approx;

namespace {

// Direct definition on unsorted input: order by rate, accumulate, pick the first index past c.
std::optional<LambdaTau> tau_oracle(const std::vector<double>& a, const std::vector<double>& lam, double c) {
  std::vector<std::pair<double, double>> v;
  for (std::size_t i = 0; i < a.size(); ++i) v.push_back({lam[i], a[i]});
  std::stable_sort(v.begin(), v.end(), [](auto x, auto y) { return x.first < y.first; });
  double s = 0;
  std::vector<double> S;
  for (auto& p : v) S.push_back(s += p.second);
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (S[j] > c) {
      double tau = 0;
      for (std::size_t i = j; i < v.size(); ++i) tau = std::max(tau, std::log(1 + S[i]) / v[i].first);
      return LambdaTau{j + 1, v[j].first, tau};
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("exponential sum evaluation and validation") {
  const ExponentialSum s({1, 1, 1}, {1, 2, 3});
  CHECK(exp_sum_eval(s, 1.0) == Approx(std::exp(-1.0) + std::exp(-2.0) + std::exp(-3.0)).epsilon(1e-14));
  CHECK(exp_sum_eval(s, 0.0) == Approx(3.0));
  CHECK(s.total_mass() == 3.0);
  // underflowing terms still give a finite log
  const ExponentialSum tiny({1}, {1e3});
  CHECK(exp_sum_log_eval(tiny, 10.0) == Approx(-1e4));
  CHECK_THROWS_AS(ExponentialSum({1}, {0}), Error);
  CHECK_THROWS_AS(ExponentialSum({-1}, {1}), Error);
  CHECK_THROWS_AS(ExponentialSum({1, 2}, {1}), Error);
  CHECK_THROWS_AS(ExponentialSum({}, {}), Error);
}

TEST_CASE("mixing time inverts evaluation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ua(0.1, 3.0), ul(0.01, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + trial % 9;
    std::vector<double> a(k), lam(k);
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = ua(rng);
      lam[i] = ul(rng);
    }
    const ExponentialSum s(a, lam);
    const double eps = 0.05 + 0.1 * (trial % 5);
    const double t = exp_sum_mixing(s, eps);
    if (s.total_mass() <= eps) {
      CHECK(t == 0.0);
      continue;
    }
    double direct = 0;
    for (std::size_t i = 0; i < k; ++i) direct += a[i] * std::exp(-lam[i] * t);
    CHECK(direct == Approx(eps).epsilon(1e-9));
    CHECK(exp_sum_log_eval(s, t) <= std::log(eps));
    CHECK(exp_sum_eval(s, t * (1 - 1e-9)) > eps);
  }
  CHECK(exp_sum_mixing(ExponentialSum({0.5}, {1}), 0.5) == 0.0);
  CHECK(exp_sum_mixing(ExponentialSum({2}, {1}), 1.0) == Approx(std::log(2.0)));
}

TEST_CASE("lambda and tau") {
  const ExponentialSum s({1, 1, 1}, {1, 2, 3});
  auto r = lambda_tau(s, 0.5);
  REQUIRE(r);
  CHECK(r->j == 1);
  CHECK(r->lambda_c == 1.0);
  CHECK(r->tau_c == Approx(std::log(2.0)));
  r = lambda_tau(s, 1.5);
  REQUIRE(r);
  CHECK(r->j == 2);
  CHECK(r->lambda_c == 2.0);
  CHECK(r->tau_c == Approx(std::max(std::log(3.0) / 2, std::log(4.0) / 3)));
  CHECK_FALSE(lambda_tau(s, 3.0));
  r = lambda_tau(ExponentialSum({5}, {2}), 1.0);
  REQUIRE(r);
  CHECK(r->tau_c == Approx(std::log(6.0) / 2));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(6), lam(6);
    for (int i = 0; i < 6; ++i) {
      a[i] = u(rng);
      lam[i] = u(rng);
    }
    const ExponentialSum e(a, lam);
    for (double c : {0.01, 0.3, 1.0, 2.5, 20.0}) {
      const auto got = lambda_tau(e, c);
      const auto want = tau_oracle(a, lam, c);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(got->j == want->j);
      CHECK(got->lambda_c == want->lambda_c);
      CHECK(got->tau_c == Approx(want->tau_c).epsilon(1e-13));
    }
  }
}

TEST_CASE("tau lambda is non-decreasing in c") {
  const ExponentialSum s({0.3, 0.7, 1.1, 0.2, 2.0}, {0.4, 0.9, 1.3, 2.2, 5.0});
  double prev = 0;
  for (double c = 0.01; c < s.total_mass(); c += 0.05) {
    const auto r = lambda_tau(s, c);
    REQUIRE(r);
    CHECK(r->tau_c * r->lambda_c >= prev - 1e-15);
    prev = r->tau_c * r->lambda_c;
  }
}

TEST_CASE("cutoff time formula on rows") {
  CHECK(std::exp(theorem_tn(std::vector<double>{1, 1, 1})) == Approx(std::log(4.0)));
  std::vector<double> l;
  for (int i = 1; i <= 50; ++i) l.push_back(std::log(i + 1.0));
  CHECK(std::exp(theorem_tn(l)) == Approx(1.0));
  CHECK_THROWS_AS(theorem_tn(std::vector<double>{2, 1}), Error);
  CHECK_THROWS_AS(theorem_tn(std::vector<double>{}), Error);
  // log form matches and survives entries far below the smallest double
  std::vector<double> logs{-800, -799, -700};
  CHECK(theorem_tn_log(logs) == Approx(std::log(std::log(2.0)) + 800));

  // the sum at a * t_n is at most 1/(a-1) with unit weights
  for (double a : {1.5, 2.0, 4.0}) {
    std::vector<double> row{0.2, 0.5, 0.5, 1.0, 3.0, 3.0, 7.0};
    const double t = std::exp(theorem_tn(row));
    double f = 0;
    for (double li : row) f += std::exp(-a * t * li);
    CHECK(f <= 1.0 / (a - 1.0) + 1e-12);
  }
}

TEST_CASE("u_n and its statistic") {
  // increasing: constant 1 gives u_n = log(n+1)
  std::vector<double> ones(9, 1.0);
  auto r = theorem_un(ones, Direction::kIncreasing);
  CHECK(std::exp(r.log_u) == Approx(std::log(10.0)));
  CHECK(r.log_statistic == r.log_u);
  // decreasing 1/i: l_{n-i+1} = 1/(n-i+1), so u = max log(i+1)(n-i+1)
  std::vector<double> inv;
  for (int i = 1; i <= 6; ++i) inv.push_back(1.0 / i);
  r = theorem_un(inv, Direction::kDecreasing);
  double want = 0;
  for (int i = 1; i <= 6; ++i) want = std::max(want, std::log(i + 1.0) * (6 - i + 1));
  CHECK(std::exp(r.log_u) == Approx(want));
  CHECK(std::exp(r.log_statistic) == Approx(want / 6));
  CHECK_THROWS_AS(theorem_un(inv, Direction::kIncreasing), Error);
}

TEST_CASE("trend classifier") {
  std::vector<double> n, grow, flat, mid;
  for (int i = 1; i <= 40; ++i) {
    n.push_back(i);
    grow.push_back(std::log(1.0 + i));
    flat.push_back(1.0 + 0.1 * std::sin(i));
    mid.push_back(1.0 + 0.05 * i);
  }
  CHECK(classify_trend(n, grow).verdict == Trend::kGrowing);
  CHECK(classify_trend(n, flat).verdict == Trend::kBounded);
  const auto r = classify_trend(n, flat);
  CHECK(r.points == 40);
  CHECK(r.first == flat.front());
  // growth ratio gate
  TrendConfig strict;
  strict.growth_ratio = 100;
  CHECK(classify_trend(n, grow, strict).verdict != Trend::kGrowing);
  TrendConfig burn;
  burn.burn_in = 35;
  CHECK(classify_trend(n, grow, burn).points == 5);
  CHECK(classify_trend(std::vector<double>{1}, std::vector<double>{1}).verdict == Trend::kInconclusive);
  CHECK(to_string(Trend::kGrowing) == "growing");
}

TEST_CASE("criterion scan") {
  std::vector<CriterionRow> growing, bounded;
  for (int n = 2; n <= 64; n *= 2) {
    // n equal rates: tau * lambda = log(1+n) grows; a single term stays flat
    std::vector<double> a(n, 1.0), lam(n, 1.0);
    growing.push_back({double(n), ExponentialSum(a, lam)});
    bounded.push_back({double(n), ExponentialSum({1.0}, {double(n)})});
  }
  const std::vector<double> cs{0.5, 1.5}, eps{0.25};
  const auto g = cutoff_criterion_scan(growing, cs, eps);
  REQUIRE(g.tau_lambda.size() == 2);
  REQUIRE(g.mixing_lambda.size() == 2);
  CHECK(g.tau_lambda[0].trend.verdict == Trend::kGrowing);
  CHECK(g.tau_lambda[1].skipped_n.size() == 0);
  CHECK(g.monotone_in_c);
  const auto b = cutoff_criterion_scan(bounded, cs, eps);
  CHECK(b.tau_lambda[0].trend.verdict == Trend::kBounded);
  CHECK(b.tau_lambda[1].skipped_n.size() == bounded.size());
  CHECK_FALSE(b.notes.empty());
}

TEST_CASE("sequence rules and lemma probe") {
  CHECK(sequence_rule_log("const", 5) == 0.0);
  CHECK(sequence_rule_log("power:2", 3) == Approx(std::log(9.0)));
  CHECK(sequence_rule_log("exp:1", 4) == Approx(-4.0));
  CHECK(sequence_rule_log("geom:0.5", 3) == Approx(std::log(0.125)));
  CHECK_THROWS_AS(sequence_rule_log("bogus:1", 2), Error);
  CHECK_THROWS_AS(sequence_rule_log("power", 2), Error);

  std::vector<double> ns;
  for (int n = 4; n <= 512; n *= 2) ns.push_back(n);
  auto p = lemma_unln_probe("const", ns);
  CHECK(p.direction == Direction::kIncreasing);
  CHECK(p.statistic_trend.verdict == Trend::kGrowing);
  p = lemma_unln_probe("power:1", ns);
  CHECK(p.statistic_trend.verdict == Trend::kBounded);
  // polynomial decay: ratio -> 1, statistic grows
  p = lemma_unln_probe("power:-1", ns);
  CHECK(p.direction == Direction::kDecreasing);
  CHECK(p.clause.find("-> 1") != std::string::npos);
  CHECK(p.statistic_trend.verdict == Trend::kGrowing);
  // geometric decay: ratio 2 stays away from 1, statistic bounded
  p = lemma_unln_probe("geom:0.5", ns);
  CHECK(p.clause.find("liminf") != std::string::npos);
  CHECK(p.statistic_trend.verdict == Trend::kBounded);
}

TEST_CASE("u_n worked values") {
  std::vector<double> ident;
  for (int i = 1; i <= 30; ++i) ident.push_back(i);
  CHECK(std::exp(theorem_un(ident, Direction::kIncreasing).log_u) == Approx(std::log(2.0)));
  CHECK(std::exp(theorem_un(std::vector<double>{0.25}, Direction::kIncreasing).log_u) == Approx(std::log(2.0) / 0.25));
}

TEST_CASE("tau and j are monotone in c") {
  const ExponentialSum s({0.4, 0.1, 0.9, 0.3, 1.2, 0.6}, {3.0, 0.2, 1.1, 0.5, 2.4, 0.9});
  std::size_t j = 0;
  double tau = std::numeric_limits<double>::infinity();
  for (double c = 0.01; c < s.total_mass(); c += 0.03) {
    const auto r = lambda_tau(s, c);
    REQUIRE(r);
    CHECK(r->j >= j);
    CHECK(r->tau_c <= tau);
    j = r->j;
    tau = r->tau_c;
  }
}

TEST_CASE("theorem_tn matches a long-double brute force") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> logs(1 + trial);
    for (auto& v : logs) v = u(rng);
    std::sort(logs.begin(), logs.end());
    long double best = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      best = std::max(best, std::log(static_cast<long double>(i) + 2.0L) / std::exp(static_cast<long double>(logs[i])));
    }
    CHECK(theorem_tn_log(logs) == Approx(static_cast<double>(std::log(best))).epsilon(1e-12));
  }
}

TEST_CASE("lemma probe worked examples") {
  std::vector<double> ns;
  for (int n = 10; n <= 200; n += 10) ns.push_back(n);
  auto p = lemma_unln_probe("exp:0.5", ns);
  CHECK(p.direction == Direction::kDecreasing);
  CHECK(p.rows.back().ratio == Approx(std::exp(std::sqrt(201.0) - std::sqrt(200.0))));
  CHECK(p.clause.find("-> 1") != std::string::npos);
  // strictly increasing over the table; too slow for the 3x growth gate by n = 200
  for (std::size_t i = 1; i < p.rows.size(); ++i) CHECK(p.rows[i].un_statistic > p.rows[i - 1].un_statistic);
  CHECK(p.statistic_trend.slope > 0.2);
  CHECK(p.statistic_trend.verdict != Trend::kGrowing);
  p = lemma_unln_probe("geom:0.5", ns);
  CHECK(p.rows.back().ratio == Approx(2.0));
  double bound = 0;
  for (int i = 1; i <= 200; ++i) bound = std::max(bound, std::log(i + 1.0) * std::pow(2.0, 1 - i));
  for (const auto& r : p.rows) CHECK(r.un_statistic <= bound + 1e-12);
}
