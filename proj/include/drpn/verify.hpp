#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drpn::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Multi-branch vs folded forward over `trials` seeded random layers and
// inputs (channels 1..8, extents 4..16, with and without shortcut). Passes
// when the max elementwise deviation stays within tol * (1 + max |output|).
CheckResult check_fold_equivalence(std::uint64_t seed, int trials, double tol);

// Closed-form fixed-weight layers: vgg == plain 3x3 conv, resnet == the
// half-half blend, repvgg == the third-third-third blend, lightweight == x.
std::vector<CheckResult> check_special_cases(std::uint64_t seed);

// Analytic gradients of the full dynamic forward against central finite
// differences on a 2-channel 6x6 instance.
CheckResult check_gradients(std::uint64_t seed);

// All of the above; the `verify` CLI subcommand.
std::vector<CheckResult> run_all(std::uint64_t seed, double tol);

}  // namespace drpn::verify
