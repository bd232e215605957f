#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace taskgrid::bench {

struct stat_summary {
	double mean = 0;
	double median = 0;
	double min = 0;
	double max = 0;
	/// Half-width of the normal-approximation 95% confidence interval of the mean: 1.96 s / sqrt(n).
	double ci95_half = 0;
	std::size_t count = 0;
};

enum class aggregation {
	/// Every sample counts: headline value is the mean with its confidence interval.
	pooled,
	/// Per-run medians first; headline value is the median of those, bars are their min/max.
	median_of_runs,
};

/// Summary of a flat sample set. Sums are correctly rounded, so the result does not depend
/// on sample order. Throws std::invalid_argument for an empty set.
stat_summary summarize(std::span<const double> samples);

/// Summary of samples grouped by run under the given aggregation. Empty runs are ignored;
/// throws std::invalid_argument if no samples remain.
stat_summary summarize(const std::vector<std::vector<double>>& runs, aggregation agg);

double median(std::vector<double> values);

/// The value reported as the result of a summary under an aggregation.
inline double headline(const stat_summary& s, aggregation agg) { return agg == aggregation::pooled ? s.mean : s.median; }

} // namespace taskgrid::bench
