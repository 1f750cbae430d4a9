#pragma once

#include <optional>
#include <string>
#include <vector>

namespace proxlmc {

// Canned acceptance scenarios, numbered 1..9. Each runs end to end on fixed
// seeds; a criterion with a runtime limit fails if it overruns.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::vector<std::string> details;  // one line per sub-check
  double seconds = 0.0;
  std::optional<double> runtime_limit;
};

std::vector<int> criterion_ids();
CriterionResult run_criterion(int id);

// "PASS [3] discrete EVI (0.12 s)" plus indented detail lines.
std::string format_result(const CriterionResult &r, bool verbose);

}  // namespace proxlmc
