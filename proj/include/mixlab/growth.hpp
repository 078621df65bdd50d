#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mixlab/group.hpp"

namespace mixlab {

/// Volume growth V(m) = |E^m| for m = 1..diameter.
struct GrowthProfile {
  std::vector<std::uint64_t> volumes;  // volumes[m-1] = V(m)
  std::size_t diameter = 0;
  std::size_t group_order = 0;

  std::uint64_t volume(std::size_t m) const { return volumes.at(m - 1); }
};

struct ModerateGrowthCert {
  double A = 0.0;
  double d = 0.0;
  bool satisfied = false;
};

/// Throws not-generating if E^m never covers the group.
GrowthProfile growth_profile(const GroupTable& g, const GeneratorSet& e);

ModerateGrowthCert check_moderate_growth(const GrowthProfile& p, double A, double d);

/// Smallest A for which the (A,d) moderate-growth inequality holds.
double minimal_A(const GrowthProfile& p, double d);

}  // namespace mixlab
