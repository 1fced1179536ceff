#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace rlqaoa {

struct CheckResult {
  std::string module;  // owning module, e.g. "policy-net"
  std::string name;    // short check name, e.g. "causality"
  bool pass = false;
  std::string detail;  // measured worst value vs bound
  double wall_ms = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240817;
  // Deliberately breaks the network's causal masking before the causality
  // check runs, proving the check can fail and names the right module.
  bool inject_mask_fault = false;
};

// Runs the release-gate self checks: physics identities, density
// normalization and gradients, network causality, PPO gradient agreement,
// optimizer benchmarks, enumeration oracles and log determinism.
std::vector<CheckResult> run_verification(const VerifyOptions& opt = {});

// Aligned pass/fail table; returns true when every check passed.
bool print_verification(std::ostream& out,
                        const std::vector<CheckResult>& results);

}  // namespace rlqaoa
