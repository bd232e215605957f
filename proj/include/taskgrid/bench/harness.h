#pragma once

#include "taskgrid/bench/stats.h"
#include "taskgrid/runtime.h"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace taskgrid::bench {

enum class app_kind { poisson, hydro, hydro_norad };
enum class mode_kind { size_sweep, strong, weak };

std::string_view to_string(app_kind a);
std::string_view to_string(mode_kind m);
app_kind parse_app(std::string_view s);
mode_kind parse_mode(std::string_view s);

struct bench_config {
	app_kind app = app_kind::poisson;
	mode_kind mode = mode_kind::weak;
	executor_kind executor = executor_kind::sequential;
	collective_algorithm collectives = collective_algorithm::binomial_tree;
	std::vector<int> ranks{1, 2, 4};
	int workers = 1;
	/// Cells per rank (weak), global cells (strong), or the first size of a sweep.
	index_t size = index_t{1} << 16;
	/// Number of doublings in a size sweep (the sweep has this many points).
	int sweep_points = 4;
	int runs = 5;
	int iterations = 5;
	/// Leading iterations of every run that are executed but not measured.
	int warmup = 0;
	/// Red-black iteration pairs per poisson solve task (one measured iteration).
	int poisson_sweeps = 50;
	std::string output;
};

/// Throws std::invalid_argument unless ranks are ascending and positive, runs >= 1, etc.
void validate(const bench_config& cfg);

/// One configuration point of a benchmark.
struct bench_row {
	std::string app;
	std::string mode;
	std::string executor;
	std::string collective;
	int ranks = 1;
	int workers = 1;
	index_t global_size = 0;
	index_t per_rank_size = 0;
	int runs = 0; // number of runs aggregated
	std::string metric;
	double value = 0;
	std::string unit;
	std::uint64_t p2p_msgs = 0;
	std::uint64_t coll_msg_ops = 0;
	std::uint64_t coll_rounds = 0;
	stat_summary summary;
	/// Set for infeasible configuration points (then metric is "infeasible").
	std::string note;
};

/// Runs every configuration point. Application output is disabled; per-iteration times are
/// measured inside the tasks. A point that cannot be set up (e.g. too few cells per rank)
/// yields an "infeasible" row and the remaining points still run.
std::vector<bench_row> run_benchmark(const bench_config& cfg);

/// Aggregation used for an application (pooled for poisson, median of runs for hydro).
aggregation aggregation_for(app_kind a);

/// Per-iteration time of every (run, iteration): for each rank the active time of all its timed
/// tasks in that iteration is summed, and the slowest rank counts. Iterations below `warmup` are dropped.
std::vector<std::vector<double>> iteration_times(const std::vector<timing_sample>& samples, int runs, int warmup);

/// Fixed CSV header.
const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& out, const std::vector<bench_row>& rows);
/// Parses CSV written by write_csv; throws std::invalid_argument on a schema mismatch.
std::vector<bench_row> read_csv(std::istream& in);

} // namespace taskgrid::bench
