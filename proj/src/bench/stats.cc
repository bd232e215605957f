#include "taskgrid/bench/stats.h"

#include "taskgrid/exact_sum.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace taskgrid::bench {

double median(std::vector<double> values) {
	if(values.empty()) throw std::invalid_argument("median of an empty sample set");
	std::sort(values.begin(), values.end());
	const std::size_t n = values.size();
	return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

stat_summary summarize(std::span<const double> samples) {
	if(samples.empty()) throw std::invalid_argument("summarize: no samples");
	stat_summary s;
	s.count = samples.size();
	const auto n = static_cast<double>(s.count);
	exact_sum total;
	for(const double v : samples) total.add(v);
	s.mean = total.value() / n;
	if(s.count > 1) {
		exact_sum squares;
		for(const double v : samples) squares.add((v - s.mean) * (v - s.mean));
		const double sd = std::sqrt(squares.value() / (n - 1.0));
		s.ci95_half = 1.96 * sd / std::sqrt(n);
	}
	const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
	s.min = *lo;
	s.max = *hi;
	s.median = median(std::vector<double>(samples.begin(), samples.end()));
	return s;
}

stat_summary summarize(const std::vector<std::vector<double>>& runs, aggregation agg) {
	if(agg == aggregation::pooled) {
		std::vector<double> all;
		for(const auto& r : runs) all.insert(all.end(), r.begin(), r.end());
		return summarize(all);
	}
	std::vector<double> medians;
	for(const auto& r : runs)
		if(!r.empty()) medians.push_back(median(r));
	return summarize(medians);
}

} // namespace taskgrid::bench
