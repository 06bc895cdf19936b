#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gnrg {

struct CheckResult {
  std::string id;  // e.g. "OBJ-1"
  std::string description;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  /// Sign of the gamma * G' term inside the residual gradient under test.
  /// -1 is correct; +1 injects the classic sign error (mutation smoke test).
  double successor_sign = -1.0;
  /// Skip the checks that run whole experiments (CLI-*).
  bool quick = false;
};

/// Runs every invariant check and returns one result per invariant id.
std::vector<CheckResult> run_verification(const VerifyOptions& options = {});

void print_report(std::ostream& out, const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace gnrg
