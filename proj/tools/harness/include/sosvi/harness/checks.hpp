#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sosvi/harness/experiment.hpp"

namespace sosvi::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Observed statistic and the limit it is compared against.
  double value = 0.0;
  double limit = 0.0;
  std::string detail;
};

struct CheckContext {
  FamilyFactory family_factory = default_family_factory();
};

struct Check {
  std::string name;
  std::function<CheckResult(const CheckContext&)> run;
};

const std::vector<Check>& check_registry();

/// Runs every registered check; an exception inside a check is a failure.
std::vector<CheckResult> run_checks(const CheckContext& ctx);

void print_check_table(std::ostream& out, const std::vector<CheckResult>& results, bool verbose);

/// Runs and prints the suite; returns exit_ok or exit_check_failure.
int run_check_command(std::ostream& out, bool verbose, const CheckContext& ctx = {});

}  // namespace sosvi::harness
