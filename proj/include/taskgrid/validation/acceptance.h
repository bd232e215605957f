#pragma once

#include <functional>
#include <string>
#include <vector>

namespace taskgrid::validation {

struct check_result {
	bool passed = false;
	/// Measured quantities behind the verdict, for the report line.
	std::string detail;
};

struct acceptance_check {
	std::string name;
	std::function<check_result()> run;
};

/// End-to-end checks of the headline properties: executor equivalence, dependency soundness,
/// concurrency, collective costs, solver correctness against oracles, timing non-interference,
/// and weak-scaling shape. Each check runs at its stated size and tolerance.
std::vector<acceptance_check> acceptance_checks();

/// Runs the checks whose name contains `filter` (all for an empty filter), printing one
/// "PASS name: detail" / "FAIL name: detail" line each. Returns the number of failures.
int run_acceptance(const std::string& filter = {});

/// Sum of `values` correctly rounded (Shewchuk's exact partials), used as an independent oracle.
double exact_fsum(const std::vector<double>& values);

} // namespace taskgrid::validation
