#include <array>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mixlab/error.hpp"
#include "mixlab/product.hpp"

using namespace mixlab;
using doctest::Approx;

namespace {

WalkSpec walk(const char* d) { return parse_walk_descriptor(d); }

ProductWalkSpec two_z3() { return make_product_walk({walk("Z:3@lazy"), walk("Z:3@lazy")}, {1, 1}); }

}  // namespace

TEST_CASE("flat construction") {
  const auto single = make_product_walk({walk("Z:5@lazy")}, {1});
  const auto flat1 = build_flat(single);
  CHECK(flat1.step_law().probs == walk("Z:5@lazy").step_law().probs);

  const auto flat = build_flat(two_z3());
  CHECK(flat.group().order() == 9);
  CHECK(flat.step_law()[0] == Approx(0.5));
  std::size_t eighths = 0;
  for (Index x = 1; x < 9; ++x) {
    if (flat.step_law()[x] > 0) {
      CHECK(flat.step_law()[x] == Approx(0.125));
      ++eighths;
    }
  }
  CHECK(eighths == 4);
  CHECK(flat.support().members.size() == 5);

  CHECK_THROWS_AS(make_product_walk({walk("Z:3@lazy")}, {0}), Error);
  CHECK_THROWS_AS((ProductWalkSpec{{walk("Z:3@lazy")}, {0.9}}.validate()), Error);
  CHECK_THROWS_AS((ProductWalkSpec{{}, {}}.validate()), Error);
}

TEST_CASE("continuous identity against the flat oracle") {
  FactorCurveCache cache;
  const std::array<ProductWalkSpec, 4> cases{
      two_z3(),
      make_product_walk({walk("Z:3@lazy"), walk("Z:5@lazy")}, {1, 2}),
      make_product_walk({walk("H:3@uniform"), walk("Z:4@uniform"), walk("Z:7@lazy@0,1,-1")}, {3, 1, 2}),
      make_product_walk({walk("Z:6@explicit:0.2,0.5,0,0,0,0.3"), walk("Z:5@lazy")}, {1, 1}),
  };
  for (const auto& pw : cases) {
    const auto flat = build_flat(pw);
    for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 40.0}) {
      const double exact = product_hellinger_ct(pw, t, kDefaultHeatTolerance, &cache);
      const auto heat = heat_distribution(flat, t);
      CHECK(std::abs(exact - hellinger_distance(heat)) <= 1e-9);
      const auto br = product_tv_bracket(pw, t, kDefaultHeatTolerance, &cache);
      const double tv = tv_distance(heat);
      CHECK(br.lower <= tv + 1e-10);
      CHECK(tv <= br.upper + 1e-10);
    }
  }
}

TEST_CASE("tensor structure of the heat semigroup") {
  const auto pw = make_product_walk({walk("Z:3@lazy"), walk("H:2@uniform")}, {1, 3});
  const auto flat = build_flat(pw);
  for (double t : {0.3, 2.0, 7.5}) {
    const auto h = heat_distribution(flat, t);
    const auto h1 = heat_distribution(pw.factors[0], pw.weights[0] * t);
    const auto h2 = heat_distribution(pw.factors[1], pw.weights[1] * t);
    for (Index a = 0; a < 3; ++a)
      for (Index b = 0; b < 8; ++b) {
        const std::array<Index, 2> c{a, b};
        CHECK(std::abs(h[flat.group().from_coordinates(c)] - h1[a] * h2[b]) <= 1e-9);
      }
  }
}

TEST_CASE("discrete time breaks the identity") {
  // Two lazy Z_3 factors with p = (1/2, 1/2): after m = 2 steps each factor
  // has moved about once, but the discrete law is not the tensor product.
  const auto pw = two_z3();
  const auto flat = build_flat(pw);
  const double d1 = hellinger_distance(walk_distribution(pw.factors[0], 1));
  const double combined = combine_product_hellinger({d1, d1});
  const double actual = hellinger_distance(walk_distribution(flat, 2));
  CHECK(std::abs(combined - actual) >= 1e-3);
}

TEST_CASE("product sandwich") {
  FactorCurveCache cache;
  const auto pw = make_product_walk({walk("Z:3@lazy"), walk("Z:5@lazy")}, {1, 1});
  bool saw_precondition = false, saw_without = false;
  for (double t : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0}) {
    const auto b = product_hellinger_bounds(pw, t, kDefaultLemmaA, kDefaultHeatTolerance, &cache);
    const double h = product_hellinger_ct(pw, t, kDefaultHeatTolerance, &cache);
    CHECK(b.max_factor <= h + 1e-12);
    CHECK(b.lower <= h + 1e-12);
    CHECK(b.lower <= b.upper);
    if (b.precondition_met) {
      saw_precondition = true;
      CHECK(h <= b.upper + 1e-12);
    } else {
      saw_without = true;
    }
    // Larger A only loosens the upper bound.
    const auto b2 = product_hellinger_bounds(pw, t, 0.9, kDefaultHeatTolerance, &cache);
    CHECK(b2.upper >= b.upper);
  }
  CHECK(saw_precondition);
  CHECK(saw_without);
  // n = 1: 1 - e^{-d^2} <= d^2.
  const auto one = make_product_walk({walk("Z:7@lazy")}, {1});
  const auto b1 = product_hellinger_bounds(one, 1.5, kDefaultLemmaA, kDefaultHeatTolerance, &cache);
  CHECK(b1.max_factor == Approx(product_hellinger_ct(one, 1.5, kDefaultHeatTolerance, &cache)));
  CHECK(b1.lower <= b1.max_factor);
  CHECK_THROWS_AS(product_hellinger_bounds(one, 1.0, 1.0), Error);
}

TEST_CASE("tv bracket edges") {
  CHECK(tv_bracket_from_hellinger(0).lower == 0);
  CHECK(tv_bracket_from_hellinger(0).upper == 0);
  CHECK(tv_bracket_from_hellinger(1).lower == 1);
  CHECK(tv_bracket_from_hellinger(1).upper == 1);
  const auto mid = tv_bracket_from_hellinger(0.5);
  CHECK(mid.lower == Approx(0.25));
  CHECK(mid.upper == Approx(std::sqrt(0.25 * 1.75)));
}

TEST_CASE("factor cache") {
  const auto dir = std::filesystem::temp_directory_path() / "mixlab_cache_test";
  std::filesystem::remove_all(dir);
  const auto pw = make_product_walk({walk("Z:5@lazy"), walk("Z:5@lazy"), walk("Z:5@lazy")}, {1, 1, 1});
  double first = 0;
  {
    FactorCurveCache cache(dir);
    first = product_hellinger_ct(pw, 3.0, kDefaultHeatTolerance, &cache);
    // identical factors and weights share one entry
    CHECK(cache.misses() == 1);
    CHECK(cache.hits() == 2);
  }
  FactorCurveCache reloaded(dir);
  CHECK(product_hellinger_ct(pw, 3.0, kDefaultHeatTolerance, &reloaded) == first);
  CHECK(reloaded.misses() == 0);
  std::filesystem::remove_all(dir);
  const auto large = make_product_walk({walk("Z:3@lazy")}, {1});
  CHECK(product_hellinger_ct(large, 1e6) == Approx(0.0));
}
