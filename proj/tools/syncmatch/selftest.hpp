#pragma once

// Gradient-check and brute-force oracle suites, shared by `syncmatch
// selftest` and the acceptance tests.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace syncmatch::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest relative (gradients) or absolute (oracles) error seen
  std::string detail;
};

inline constexpr double kGradientTolerance = 1e-3;
inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kOracleTolerance = 1e-12;

/// Central finite differences for every op and objective, `instances`
/// random draws each.
std::vector<CheckResult> gradient_suite(std::uint64_t seed, int instances = 20);

/// Layer, stacked-channel, distance and distance-curve implementations
/// against direct loop formulations.
std::vector<CheckResult> oracle_suite(std::uint64_t seed);

}  // namespace syncmatch::selftest
