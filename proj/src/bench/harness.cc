#include "taskgrid/bench/harness.h"

#include "taskgrid/hydro/simulation.h"
#include "taskgrid/poisson/poisson.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace taskgrid::bench {

std::string_view to_string(app_kind a) {
	switch(a) {
	case app_kind::poisson:
		return "poisson";
	case app_kind::hydro:
		return "hydro";
	case app_kind::hydro_norad:
		return "hydro_norad";
	}
	return "?";
}

std::string_view to_string(mode_kind m) {
	switch(m) {
	case mode_kind::size_sweep:
		return "size_sweep";
	case mode_kind::strong:
		return "strong";
	case mode_kind::weak:
		return "weak";
	}
	return "?";
}

app_kind parse_app(std::string_view s) {
	if(s == "poisson") return app_kind::poisson;
	if(s == "hydro") return app_kind::hydro;
	if(s == "hydro_norad") return app_kind::hydro_norad;
	throw std::invalid_argument("unknown app '" + std::string(s) + "' (expected poisson, hydro, or hydro_norad)");
}

mode_kind parse_mode(std::string_view s) {
	if(s == "size_sweep" || s == "size") return mode_kind::size_sweep;
	if(s == "strong") return mode_kind::strong;
	if(s == "weak") return mode_kind::weak;
	throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected size_sweep, strong, or weak)");
}

aggregation aggregation_for(app_kind a) { return a == app_kind::poisson ? aggregation::pooled : aggregation::median_of_runs; }

void validate(const bench_config& cfg) {
	if(cfg.ranks.empty()) throw std::invalid_argument("bench: rank list is empty");
	for(std::size_t i = 0; i < cfg.ranks.size(); ++i) {
		if(cfg.ranks[i] < 1) throw std::invalid_argument("bench: rank counts must be positive");
		if(i > 0 && cfg.ranks[i] <= cfg.ranks[i - 1]) throw std::invalid_argument("bench: rank list must be ascending");
	}
	if(cfg.runs < 1) throw std::invalid_argument("bench: runs must be >= 1");
	if(cfg.iterations < 1) throw std::invalid_argument("bench: iterations must be >= 1");
	if(cfg.warmup < 0) throw std::invalid_argument("bench: warmup must be >= 0");
	if(cfg.workers < 1) throw std::invalid_argument("bench: workers must be >= 1");
	if(cfg.size < 1) throw std::invalid_argument("bench: size must be >= 1");
	if(cfg.mode == mode_kind::size_sweep && cfg.sweep_points < 1) throw std::invalid_argument("bench: sweep points must be >= 1");
}

std::vector<std::vector<double>> iteration_times(const std::vector<timing_sample>& samples, int runs, int warmup) {
	// (run, iteration) -> rank -> summed active seconds
	std::map<std::pair<int, int>, std::map<int, double>> active;
	for(const auto& s : samples) {
		if(s.iteration < warmup) continue;
		active[{s.run, s.iteration}][s.rank] += s.active_seconds();
	}
	std::vector<std::vector<double>> out(static_cast<std::size_t>(runs));
	for(const auto& [key, per_rank] : active) {
		if(key.first < 0 || key.first >= runs) continue;
		double slowest = 0;
		for(const auto& [rank, t] : per_rank) slowest = std::max(slowest, t);
		out[static_cast<std::size_t>(key.first)].push_back(slowest);
	}
	return out;
}

namespace {

	/// Near-equal factors of `cells` over `dims` axes (exact for powers of two).
	std::array<index_t, 3> shape(index_t cells, int dims) {
		std::array<index_t, 3> ext{1, 1, 1};
		if(std::has_single_bit(static_cast<std::uint64_t>(cells))) {
			const int k = std::countr_zero(static_cast<std::uint64_t>(cells));
			for(int a = 0; a < dims; ++a) ext[a] = index_t{1} << (k / dims + (a < k % dims ? 1 : 0));
			return ext;
		}
		index_t remaining = cells;
		for(int a = 0; a < dims; ++a) {
			const auto e = std::max<index_t>(1, std::llround(std::pow(static_cast<double>(remaining), 1.0 / (dims - a))));
			ext[a] = e;
			remaining = std::max<index_t>(1, remaining / e);
		}
		return ext;
	}

	struct point {
		int ranks = 1;
		std::array<index_t, 3> extents{1, 1, 1};
	};

	index_t cells(const point& p) { return p.extents[0] * p.extents[1] * p.extents[2]; }

	std::vector<point> points(const bench_config& cfg) {
		const int dims = cfg.app == app_kind::poisson ? 2 : 3;
		std::vector<point> out;
		switch(cfg.mode) {
		case mode_kind::size_sweep:
			for(int k = 0; k < cfg.sweep_points; ++k) out.push_back({1, shape(cfg.size << k, dims)});
			break;
		case mode_kind::strong:
			for(const int r : cfg.ranks) out.push_back({r, shape(cfg.size, dims)});
			break;
		case mode_kind::weak:
			for(const int r : cfg.ranks) {
				const auto block = shape(cfg.size, dims);
				const auto colors = balanced_color_grid(r, dims);
				point p{r, {1, 1, 1}};
				for(int a = 0; a < dims; ++a) p.extents[a] = block[a] * colors[a];
				out.push_back(p);
			}
			break;
		}
		return out;
	}

	/// Executes one run of the application and leaves its timing samples in `rt`.
	void run_once(runtime& rt, const bench_config& cfg, const point& p) {
		const int iterations = cfg.iterations + cfg.warmup;
		if(cfg.app == app_kind::poisson) {
			poisson::config pc;
			pc.dims = 2;
			pc.extents = {p.extents[0], p.extents[1]};
			pc.benchmark = true;
			pc.max_tasks = iterations;
			pc.iterations_per_task = cfg.poisson_sweeps;
			pc.tolerance = 1e-300;
			poisson::run_poisson(rt, pc);
		} else {
			auto hc = hydro::scenario_defaults("rankine_hugoniot");
			hc.extents = p.extents;
			for(int a = 0; a < 3; ++a) hc.length[a] = static_cast<double>(p.extents[a]) / static_cast<double>(p.extents[0]);
			hc.radiation = cfg.app == app_kind::hydro;
			hc.erad_pulse = hc.radiation ? 1.0 : 0.0;
			hc.end_time = 0;
			hc.benchmark = true;
			hydro::simulation sim(rt, hc);
			sim.advance(iterations);
		}
		rt.fence();
	}

	std::string sanitize(std::string s) {
		for(auto& ch : s)
			if(ch == ',' || ch == '\n' || ch == '\r') ch = ';';
		return s;
	}

} // namespace

std::vector<bench_row> run_benchmark(const bench_config& cfg) {
	validate(cfg);
	std::vector<bench_row> rows;
	for(const auto& p : points(cfg)) {
		bench_row row;
		row.app = to_string(cfg.app);
		row.mode = to_string(cfg.mode);
		row.executor = to_string(cfg.executor);
		row.collective = to_string(cfg.collectives);
		row.ranks = p.ranks;
		row.workers = cfg.workers;
		row.global_size = cells(p);
		row.per_rank_size = row.global_size / p.ranks;
		row.runs = cfg.runs;
		row.metric = "iteration_time";
		row.unit = "s";
		try {
			std::vector<timing_sample> samples;
			comm_stats stats;
			for(int r = 0; r < cfg.runs; ++r) {
				runtime rt(executor_config{cfg.executor, p.ranks, cfg.workers, cfg.collectives});
				rt.set_timing_epoch(r, 0);
				run_once(rt, cfg, p);
				const auto s = rt.timing_samples();
				samples.insert(samples.end(), s.begin(), s.end());
				stats = rt.stats();
			}
			const auto agg = aggregation_for(cfg.app);
			row.summary = summarize(iteration_times(samples, cfg.runs, cfg.warmup), agg);
			row.value = headline(row.summary, agg);
			row.p2p_msgs = stats.total_point_to_point();
			row.coll_msg_ops = stats.max_collective_message_ops();
			row.coll_rounds = stats.max_collective_rounds();
		} catch(const std::exception& e) {
			row.metric = "infeasible";
			row.value = NAN;
			row.unit = "";
			row.note = sanitize(e.what());
		}
		rows.push_back(std::move(row));
	}
	return rows;
}

const std::vector<std::string>& csv_columns() {
	static const std::vector<std::string> cols{"app", "mode", "executor", "collective", "ranks", "workers", "global_size", "per_rank_size", "run",
	    "metric", "value", "unit", "p2p_msgs", "coll_msg_ops", "coll_rounds", "mean", "median", "min", "max", "ci95_half", "count", "note"};
	return cols;
}

namespace {
	std::string num(double v) {
		char buf[40];
		std::snprintf(buf, sizeof buf, "%.17g", v);
		return buf;
	}

	std::vector<std::string> split(const std::string& line) {
		std::vector<std::string> out;
		std::string cur;
		for(const char ch : line) {
			if(ch == ',') {
				out.push_back(cur);
				cur.clear();
			} else if(ch != '\r') {
				cur.push_back(ch);
			}
		}
		out.push_back(cur);
		return out;
	}

	double to_double(const std::string& s) {
		if(s == "nan" || s == "-nan") return NAN;
		std::size_t pos = 0;
		const double v = std::stod(s, &pos);
		if(pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
		return v;
	}
} // namespace

void write_csv(std::ostream& out, const std::vector<bench_row>& rows) {
	const auto& cols = csv_columns();
	for(std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
	out << '\n';
	for(const auto& r : rows) {
		out << r.app << ',' << r.mode << ',' << r.executor << ',' << r.collective << ',' << r.ranks << ',' << r.workers << ',' << r.global_size << ','
		    << r.per_rank_size << ',' << r.runs << ',' << r.metric << ',' << num(r.value) << ',' << r.unit << ',' << r.p2p_msgs << ','
		    << r.coll_msg_ops << ',' << r.coll_rounds << ',' << num(r.summary.mean) << ',' << num(r.summary.median) << ',' << num(r.summary.min)
		    << ',' << num(r.summary.max) << ',' << num(r.summary.ci95_half) << ',' << r.summary.count << ',' << sanitize(r.note) << '\n';
	}
}

std::vector<bench_row> read_csv(std::istream& in) {
	std::string line;
	if(!std::getline(in, line)) throw std::invalid_argument("bench CSV: missing header");
	const auto header = split(line);
	for(const auto& c : csv_columns()) {
		if(std::find(header.begin(), header.end(), c) == header.end()) throw std::invalid_argument("bench CSV: missing column '" + c + "'");
	}
	if(header != csv_columns()) throw std::invalid_argument("bench CSV: unexpected column order");
	std::vector<bench_row> rows;
	int lineno = 1;
	while(std::getline(in, line)) {
		++lineno;
		if(line.empty()) continue;
		const auto f = split(line);
		if(f.size() != header.size())
			throw std::invalid_argument("bench CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields");
		try {
			bench_row r;
			r.app = f[0];
			r.mode = f[1];
			r.executor = f[2];
			r.collective = f[3];
			r.ranks = std::stoi(f[4]);
			r.workers = std::stoi(f[5]);
			r.global_size = std::stoll(f[6]);
			r.per_rank_size = std::stoll(f[7]);
			r.runs = std::stoi(f[8]);
			r.metric = f[9];
			r.value = to_double(f[10]);
			r.unit = f[11];
			r.p2p_msgs = std::stoull(f[12]);
			r.coll_msg_ops = std::stoull(f[13]);
			r.coll_rounds = std::stoull(f[14]);
			r.summary.mean = to_double(f[15]);
			r.summary.median = to_double(f[16]);
			r.summary.min = to_double(f[17]);
			r.summary.max = to_double(f[18]);
			r.summary.ci95_half = to_double(f[19]);
			r.summary.count = static_cast<std::size_t>(std::stoull(f[20]));
			r.note = f[21];
			rows.push_back(std::move(r));
		} catch(const std::logic_error& e) {
			throw std::invalid_argument("bench CSV line " + std::to_string(lineno) + ": " + e.what());
		}
	}
	return rows;
}

} // namespace taskgrid::bench
