#include <algorithm>
#include <array>
#include <numeric>
#include <set>

#include "doctest.h"
#include "mixlab/error.hpp"
#include "mixlab/group.hpp"

using namespace mixlab;

namespace {

void check_axioms(const GroupTable& g) {
  const auto n = static_cast<Index>(g.order());
  for (Index x = 0; x < n; ++x) {
    REQUIRE(g.op(g.identity(), x) == x);
    REQUIRE(g.op(x, g.identity()) == x);
    REQUIRE(g.op(x, g.inv(x)) == g.identity());
    REQUIRE(g.op(g.inv(x), x) == g.identity());
    for (Index y = 0; y < n; ++y) {
      const Index xy = g.op(x, y);
      REQUIRE(xy < n);
      for (Index z = 0; z < n; ++z) REQUIRE(g.op(xy, z) == g.op(x, g.op(y, z)));
    }
  }
}

using Mat3 = std::array<std::array<long, 3>, 3>;

// Independent oracle: multiply explicit unipotent matrices mod m.
Mat3 as_matrix(HeisenbergCoords c) {
  return {{{1, c.i, c.k}, {0, 1, c.j}, {0, 0, 1}}};
}

HeisenbergCoords matmul(HeisenbergCoords a, HeisenbergCoords b, long m) {
  const auto A = as_matrix(a), B = as_matrix(b);
  Mat3 C{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k) C[r][c] += A[r][k] * B[k][c];
  return {static_cast<std::uint32_t>(C[0][1] % m), static_cast<std::uint32_t>(C[1][2] % m),
          static_cast<std::uint32_t>(C[0][2] % m)};
}

// Exhaustive search for an isomorphism; only for tiny groups.
bool isomorphic(const GroupTable& a, const GroupTable& b) {
  if (a.order() != b.order()) return false;
  std::vector<Index> perm(b.order());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (perm[0] != 0) continue;
    bool ok = true;
    for (Index x = 0; ok && x < a.order(); ++x)
      for (Index y = 0; ok && y < a.order(); ++y) ok = perm[a.op(x, y)] == b.op(perm[x], perm[y]);
    if (ok) return true;
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return false;
}

}  // namespace

TEST_CASE("cyclic groups") {
  CHECK(make_cyclic(1).order() == 1);
  const auto z5 = make_cyclic(5);
  CHECK(z5.inv(2) == 3);
  CHECK(make_cyclic(12).op(7, 9) == 4);
  CHECK_THROWS_AS(make_cyclic(0), Error);
  for (std::uint32_t n : {1u, 2u, 7u, 12u}) check_axioms(make_cyclic(n));
}

TEST_CASE("heisenberg law against explicit matrices") {
  const auto h3 = make_heisenberg(3);
  CHECK(make_heisenberg(2).order() == 8);
  CHECK(h3.order() == 27);
  const Index x = h3.heisenberg_index({1, 0, 0});
  const Index y = h3.heisenberg_index({0, 1, 0});
  CHECK(h3.heisenberg_coords(h3.op(x, y)) == HeisenbergCoords{1, 1, 1});
  CHECK(h3.heisenberg_coords(h3.inv(h3.heisenberg_index({1, 1, 0}))) == HeisenbergCoords{2, 2, 1});
  CHECK_THROWS_AS(make_heisenberg(1), Error);

  for (std::uint32_t m : {2u, 3u, 4u, 5u}) {
    const auto h = make_heisenberg(m);
    for (Index a = 0; a < h.order(); ++a) {
      REQUIRE(h.heisenberg_index(h.heisenberg_coords(a)) == a);
      for (Index b = 0; b < h.order(); ++b) {
        REQUIRE(h.heisenberg_coords(h.op(a, b)) ==
                matmul(h.heisenberg_coords(a), h.heisenberg_coords(b), m));
      }
    }
    check_axioms(h);
    // Center: exactly the elements (0,0,k).
    std::size_t center = 0;
    for (Index z = 0; z < h.order(); ++z) {
      bool central = true;
      for (Index a = 0; central && a < h.order(); ++a) central = h.op(z, a) == h.op(a, z);
      if (central) {
        ++center;
        const auto c = h.heisenberg_coords(z);
        CHECK((c.i == 0 && c.j == 0));
      }
    }
    CHECK(center == m);
  }
  // lexicographic rank
  CHECK(make_heisenberg(4).heisenberg_index({1, 2, 3}) == (1 * 4 + 2) * 4 + 3);
}

TEST_CASE("direct products") {
  const std::array z23{make_cyclic(2), make_cyclic(3)};
  const auto p = make_product(z23);
  CHECK(p.order() == 6);
  check_axioms(p);
  CHECK(isomorphic(p, make_cyclic(6)));

  const std::array z5{make_cyclic(5)};
  const auto single = make_product(z5);
  for (Index a = 0; a < 5; ++a)
    for (Index b = 0; b < 5; ++b) CHECK(single.op(a, b) == make_cyclic(5).op(a, b));

  const std::array z22{make_cyclic(2), make_cyclic(2)};
  const auto k4 = make_product(z22);
  const std::array<Index, 2> a{1, 0}, b{0, 1}, ab{1, 1};
  CHECK(k4.op(k4.from_coordinates(a), k4.from_coordinates(b)) == k4.from_coordinates(ab));
  // mixed radix, first factor most significant
  const std::array<Index, 2> c{1, 2};
  CHECK(p.from_coordinates(c) == 1 * 3 + 2);

  const std::array mixed{make_heisenberg(2), make_cyclic(3)};
  check_axioms(make_product(mixed));

  const std::array big{make_cyclic(300), make_cyclic(300)};
  CHECK_THROWS_AS(make_product(big), Error);
  try {
    make_product(big);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kCapacityExceeded);
  }
  CHECK(make_product(big, 100'000).order() == 90'000);
}

TEST_CASE("indexing is a bijection") {
  for (const auto& g : {make_heisenberg(5), parse_group("P:Z:4,H:2,Z:3")}) {
    std::set<std::vector<Index>> seen;
    for (Index x = 0; x < g.order(); ++x) {
      if (g.kind() == GroupTable::Kind::kProduct) {
        const auto c = g.coordinates(x);
        CHECK(g.from_coordinates(c) == x);
        seen.insert(c);
      } else {
        const auto c = g.heisenberg_coords(x);
        seen.insert({c.i, c.j, c.k});
      }
    }
    CHECK(seen.size() == g.order());
  }
}

TEST_CASE("descriptor parsing") {
  CHECK(parse_group("Z:10").order() == 10);
  CHECK(parse_group("H:3").order() == 27);
  CHECK(parse_group("P:Z:3,Z:5").order() == 15);
  CHECK(parse_group("P:(P:Z:2,Z:3),Z:5").order() == 30);
  CHECK(parse_group("P:Z:3,Z:5").label() == "P:Z:3,Z:5");
  CHECK_THROWS_AS(parse_group("Q:3"), Error);
  CHECK_THROWS_AS(parse_group("Z:abc"), Error);
  CHECK_THROWS_AS(parse_group("H:40"), Error);  // 64000 > default cap
}

TEST_CASE("generator sets") {
  const auto z10 = make_cyclic(10);
  const auto e = parse_generators(z10, "0,1,-1");
  CHECK(e.members == std::vector<Index>{0, 1, 9});
  CHECK(e.symmetric);
  CHECK(generates(z10, e.members));
  const auto even = parse_generators(z10, "0,2");
  CHECK_FALSE(even.symmetric);
  CHECK_FALSE(generates(z10, even.members));
  CHECK(sqrt_jump_generators(make_cyclic(9)).members == std::vector<Index>{0, 1, 3, 6, 8});

  const auto h3 = make_heisenberg(3);
  const auto eh = standard_generators(h3);
  CHECK(eh.members.size() == 5);
  CHECK(eh.symmetric);
  CHECK(generates(h3, eh.members));
  CHECK(parse_generators(h3, "0/0/0,1/0/0,-1/0/0,0/1/0,0/-1/0").members == eh.members);

  const auto p = parse_group("P:Z:3,Z:5");
  const auto ep = standard_generators(p);
  CHECK(ep.members.size() == 5);
  CHECK(generates(p, ep.members));
}
