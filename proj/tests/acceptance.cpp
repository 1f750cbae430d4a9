// Runs the acceptance criteria (all, or the ids given on the command line)
// and prints one PASS/FAIL line each. Exit status 1 if any criterion fails.
#include <cstdlib>
#include <iostream>
#include <string>

#include "proxlmc/verify.hpp"

int main(int argc, char **argv) {
  bool verbose = false;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-v" || arg == "--verbose")
      verbose = true;
    else
      ids.push_back(std::stoi(arg));
  }
  if (ids.empty()) ids = proxlmc::criterion_ids();
  int failed = 0;
  for (int id : ids) {
    const auto r = proxlmc::run_criterion(id);
    std::cout << proxlmc::format_result(r, verbose) << std::flush;
    failed += r.passed ? 0 : 1;
  }
  std::cout << (ids.size() - failed) << "/" << ids.size() << " criteria passed\n";
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
