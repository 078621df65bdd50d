#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixlab/product.hpp"
#include "mixlab/walk.hpp"

namespace mixlab {

/// One chain in the battery. Product chains carry their factors so the
/// product identities can be checked against the flat walk.
struct VerifyFixture {
  std::string name;
  WalkSpec walk;
  std::optional<ProductWalkSpec> product;
};

/// "<walk descriptor>" or factors joined by '*' ("Z:3@lazy*Z:5@lazy",
/// equal coordinate weights).
VerifyFixture make_fixture(const std::string& descriptor, std::size_t cap = kDefaultEnumerationCap);
std::vector<VerifyFixture> default_fixtures();

struct CheckResult {
  std::string suite;
  std::string fixture;
  CheckStatus status = CheckStatus::kSkipped;
  double margin = 0.0;  // smallest slack seen (negative on failure)
  std::size_t cases = 0;
  std::string detail;
};

struct VerifyOptions {
  std::vector<std::string> suites;    // empty = all
  std::vector<std::string> fixtures;  // descriptors; empty = built-in set
  std::size_t max_step = 64;          // discrete clock runs over 0..max_step
  std::uint64_t seed = 42;            // random-distribution checks
};

struct VerifyReport {
  VerifyOptions options;
  std::vector<CheckResult> checks;
  std::size_t passed = 0, failed = 0, skipped = 0;
  bool ok() const noexcept { return failed == 0; }
  std::string to_json() const;
};

const std::vector<std::string>& verify_suite_names();

/// Builds every fixture first (so a bad one fails before any check runs),
/// then runs each requested suite on each fixture.
VerifyReport verify_all(const VerifyOptions& options = {});

}  // namespace mixlab
