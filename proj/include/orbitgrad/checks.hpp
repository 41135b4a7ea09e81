#ifndef ORBITGRAD_CHECKS_HPP
#define ORBITGRAD_CHECKS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace orbitgrad {

/// One row of a self-check table: the largest observed deviation against its bound.
struct CheckResult {
  std::string suite;
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Suites: "estimator", "counterexample", "kernels", "lemmas", "flow", or "all".
/// Throws Error(InvalidConfig) on an unknown suite name.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed);

}  // namespace orbitgrad

#endif  // ORBITGRAD_CHECKS_HPP
