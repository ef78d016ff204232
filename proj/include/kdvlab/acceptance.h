#pragma once

#include <functional>
#include <string>
#include <vector>

namespace kdvlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // allowed runtime in seconds
};

/// Ids 1..13 in order.
std::vector<int> criterion_ids();

/// Runs one criterion. Library errors become a failed result carrying the
/// message; the runtime budget is part of the verdict.
CriterionResult run_criterion(int id);

/// Runs the given criteria in order, calling on_done after each.
std::vector<CriterionResult> run_acceptance(
    const std::vector<int>& ids, const std::function<void(const CriterionResult&)>& on_done = {});

/// "[PASS] 07 linear null control (12.3 s / 300 s): detail".
std::string format_result(const CriterionResult& r);

}  // namespace kdvlab
