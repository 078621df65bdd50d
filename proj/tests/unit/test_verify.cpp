#include <algorithm>

#include "doctest.h"
#include "mixlab/error.hpp"
#include "mixlab/verify.hpp"

using namespace mixlab;

namespace {

const CheckResult* find(const VerifyReport& r, const std::string& suite, const std::string& fixture) {
  for (const auto& c : r.checks) {
    if (c.suite == suite && c.fixture == fixture) return &c;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("default battery passes and is reproducible") {
  const auto a = verify_all();
  for (const auto& c : a.checks) {
    INFO(c.suite << " on " << c.fixture << ": " << c.detail);
    CHECK(c.status != CheckStatus::kFail);
  }
  CHECK(a.ok());
  CHECK(a.passed > 40);
  // gates
  REQUIRE(find(a, "moderate-lower", "Z:11@lazy"));
  CHECK(find(a, "moderate-lower", "Z:11@lazy")->status == CheckStatus::kPrerequisiteNotMet);
  CHECK(find(a, "product-identity", "Z:3@lazy")->status == CheckStatus::kSkipped);
  CHECK(find(a, "discrete-witness", "Z:3@lazy*Z:5@lazy")->status == CheckStatus::kPass);
  CHECK(a.to_json() == verify_all().to_json());
}

TEST_CASE("custom fixtures and suite selection") {
  VerifyOptions o;
  o.suites = {"sandwich", "moderate", "spectral"};
  o.fixtures = {"Z:5@explicit:0.5,0.3,0,0,0.2", "Z:7@lazy"};
  o.max_step = 20;
  const auto r = verify_all(o);
  CHECK(r.ok());
  CHECK(find(r, "sandwich", o.fixtures[0])->status == CheckStatus::kPass);
  CHECK(find(r, "moderate-upper", o.fixtures[0])->status == CheckStatus::kSkipped);
  CHECK(find(r, "spectral", o.fixtures[0])->status == CheckStatus::kSkipped);
  CHECK(find(r, "spectral", "Z:7@lazy")->status == CheckStatus::kPass);
  CHECK(std::none_of(r.checks.begin(), r.checks.end(), [](const auto& c) { return c.suite == "growth"; }));

  // different seeds change the random-law cases but not the verdicts
  VerifyOptions o2 = o;
  o2.seed = 7;
  CHECK(verify_all(o2).ok());
  CHECK(verify_all(o2).to_json() != verify_all(o).to_json());

  VerifyOptions bad;
  bad.fixtures = {"Z:3@explicit:0.5,0.2,0.2"};
  CHECK_THROWS_AS(verify_all(bad), Error);
  try {
    verify_all(bad);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidParameter);
  }
  bad = {};
  bad.suites = {"nonsense"};
  CHECK_THROWS_AS(verify_all(bad), Error);
}
