#include "mixlab/growth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mixlab/error.hpp"

namespace mixlab {

namespace {

// With the identity in E, E^m is the radius-m ball around the identity.
GrowthProfile ball_growth(const GroupTable& g, const GeneratorSet& e) {
  GrowthProfile p;
  p.group_order = g.order();
  std::vector<char> seen(g.order(), 0);
  seen[g.identity()] = 1;
  std::vector<Index> frontier{g.identity()};
  std::uint64_t count = 1;
  while (count < g.order()) {
    std::vector<Index> next;
    for (Index x : frontier) {
      for (Index s : e.members) {
        const Index y = g.op(x, s);
        if (!seen[y]) {
          seen[y] = 1;
          next.push_back(y);
        }
      }
    }
    if (next.empty()) fail(ErrorKind::kNotGenerating, "generator set does not generate " + g.label());
    count += next.size();
    p.volumes.push_back(count);
    frontier.swap(next);
  }
  if (p.volumes.empty()) p.volumes.push_back(count);  // trivial group: V(1) = 1
  p.diameter = p.volumes.size();
  return p;
}

// Without the identity, E^{m+1} = E^m E is tracked as an explicit set; the
// sequence of sets is eventually periodic, so a repeat without full coverage
// means E^m never equals G.
GrowthProfile product_set_growth(const GroupTable& g, const GeneratorSet& e) {
  GrowthProfile p;
  p.group_order = g.order();
  std::vector<char> current(g.order(), 0);
  for (Index s : e.members) current[s] = 1;
  std::set<std::vector<char>> history;
  while (true) {
    const auto size = static_cast<std::uint64_t>(std::count(current.begin(), current.end(), 1));
    p.volumes.push_back(size);
    if (size == g.order()) break;
    if (!history.insert(current).second) {
      fail(ErrorKind::kNotGenerating, "E^m never covers " + g.label());
    }
    std::vector<char> next(g.order(), 0);
    for (Index x = 0; x < g.order(); ++x) {
      if (!current[x]) continue;
      for (Index s : e.members) next[g.op(x, s)] = 1;
    }
    current.swap(next);
  }
  p.diameter = p.volumes.size();
  return p;
}

}  // namespace

GrowthProfile growth_profile(const GroupTable& g, const GeneratorSet& e) {
  require(!e.members.empty(), "empty generator set");
  if (!generates(g, e.members)) {
    fail(ErrorKind::kNotGenerating, "generator set does not generate " + g.label());
  }
  return e.contains(g.identity()) ? ball_growth(g, e) : product_set_growth(g, e);
}

ModerateGrowthCert check_moderate_growth(const GrowthProfile& p, double A, double d) {
  require(A > 0 && d > 0, "moderate growth needs A > 0 and d > 0");
  ModerateGrowthCert cert{A, d, true};
  const double rho = static_cast<double>(p.diameter);
  const double top = static_cast<double>(p.volume(p.diameter));
  for (std::size_t m = 1; m <= p.diameter; ++m) {
    const double lhs = static_cast<double>(p.volume(m)) / top;
    const double rhs = std::pow(static_cast<double>(m) / rho, d) / A;
    if (lhs < rhs * (1.0 - 1e-12)) {
      cert.satisfied = false;
      break;
    }
  }
  return cert;
}

double minimal_A(const GrowthProfile& p, double d) {
  require(d > 0, "minimal_A needs d > 0");
  require(p.group_order >= 2 && p.diameter >= 1, "minimal_A needs a non-trivial group");
  const double rho = static_cast<double>(p.diameter);
  const double top = static_cast<double>(p.volume(p.diameter));
  double best = 0.0;
  for (std::size_t m = 1; m <= p.diameter; ++m) {
    best = std::max(best, std::pow(static_cast<double>(m) / rho, d) * top /
                              static_cast<double>(p.volume(m)));
  }
  return best;
}

}  // namespace mixlab
