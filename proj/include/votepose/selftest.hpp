#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace votepose {

struct SuiteResult {
  std::string name;
  int cases = 0;
  int failures = 0;
  double max_error = 0.0;
  bool passed() const noexcept { return failures == 0; }
};

/// Fast paths against their brute-force references on random instances:
/// vote aggregation, consensus joints, midpoint folding and tree-structured
/// TRW-S. Deterministic in `seed`.
std::vector<SuiteResult> run_selftest(std::uint64_t seed, int cases = 50);

}  // namespace votepose
