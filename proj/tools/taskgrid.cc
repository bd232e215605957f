#include "taskgrid/bench/harness.h"
#include "taskgrid/hydro/simulation.h"
#include "taskgrid/poisson/poisson.h"
#include "taskgrid/validation/acceptance.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace taskgrid;

namespace {

std::ofstream open_output(const std::string& path) {
	std::ofstream out(path);
	if(!out) throw std::runtime_error("cannot open '" + path + "' for writing");
	out.precision(17);
	return out;
}

int run_bench(const bench::bench_config& cfg) {
	const auto rows = bench::run_benchmark(cfg);
	auto out = open_output(cfg.output);
	bench::write_csv(out, rows);
	for(const auto& r : rows) {
		if(r.metric == "infeasible") {
			std::printf("%s %s P=%d size=%lld: infeasible (%s)\n", r.app.c_str(), r.mode.c_str(), r.ranks, static_cast<long long>(r.global_size),
			    r.note.c_str());
		} else {
			std::printf("%s %s P=%d size=%lld: %.6g s/iteration (ci95 +-%.2g, n=%zu)\n", r.app.c_str(), r.mode.c_str(), r.ranks,
			    static_cast<long long>(r.global_size), r.value, r.summary.ci95_half, r.summary.count);
		}
	}
	std::printf("wrote %zu rows to %s\n", rows.size(), cfg.output.c_str());
	return 0;
}

struct run_options {
	std::string app = "hydro";
	std::string scenario;
	std::string scenario_file;
	std::vector<std::string> settings;
	std::string cells;
	int ranks = 1;
	int workers = 1;
	std::string executor = "async";
	std::string collective = "binomial_tree";
	double tolerance = 1e-8;
	std::string output = "state.csv";
};

int run_poisson_app(const run_options& o, const executor_config& ex) {
	poisson::config c;
	c.tolerance = o.tolerance;
	if(!o.cells.empty()) {
		hydro::config tmp;
		hydro::apply_setting(tmp, "extents", o.cells);
		c.dims = tmp.dims > 1 ? 2 : 1;
		c.extents = {tmp.extents[0], tmp.extents[1]};
	}
	const auto rep = poisson::run_poisson(c, ex);
	auto out = open_output(o.output);
	out << "i,j,x,y,p,exact\n";
	const double dx = c.length[0] / static_cast<double>(c.extents[0]);
	const double dy = c.length[1] / static_cast<double>(c.extents[1]);
	for(index_t j = 0; j < c.extents[1]; ++j)
		for(index_t i = 0; i < c.extents[0]; ++i) {
			const double x = (static_cast<double>(i) + 0.5) * dx, y = c.dims > 1 ? (static_cast<double>(j) + 0.5) * dy : 0.5;
			out << i << ',' << j << ',' << x << ',' << y << ',' << rep.solution[static_cast<std::size_t>(j * c.extents[0] + i)] << ','
			    << poisson::exact_solution(x, y) << '\n';
		}
	std::printf("poisson %lldx%lld: %s after %d tasks, residual %.3e, max error %.3e\n", static_cast<long long>(c.extents[0]),
	    static_cast<long long>(c.extents[1]), rep.converged ? "converged" : "NOT converged", rep.tasks, rep.final_residual, rep.linf_error);
	return rep.converged ? 0 : 2;
}

int run_hydro_app(const run_options& o, const executor_config& ex) {
	auto c = hydro::scenario_defaults(o.scenario.empty() ? "sod" : o.scenario);
	if(!o.scenario_file.empty()) {
		std::ifstream in(o.scenario_file);
		if(!in) throw std::runtime_error("cannot open scenario file '" + o.scenario_file + "'");
		c = hydro::parse_config(in, c);
	}
	if(!o.scenario.empty()) hydro::apply_setting(c, "scenario", o.scenario);
	if(!o.cells.empty()) hydro::apply_setting(c, "extents", o.cells);
	for(const auto& kv : o.settings) {
		const auto eq = kv.find('=');
		if(eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
		hydro::apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
	}
	runtime rt(ex);
	hydro::simulation sim(rt, c);
	const int steps = sim.run_to_end();
	const auto w = sim.gather_primitives();
	const auto dx = sim.spacing();
	auto out = open_output(o.output);
	out << "i,j,k,x,y,z,rho,u,v,w,p,erad\n";
	std::size_t n = 0;
	for(index_t k = 0; k < c.extents[2]; ++k)
		for(index_t j = 0; j < c.extents[1]; ++j)
			for(index_t i = 0; i < c.extents[0]; ++i, ++n) {
				const auto& p = w[n];
				out << i << ',' << j << ',' << k << ',' << (static_cast<double>(i) + 0.5) * dx[0] << ',' << (static_cast<double>(j) + 0.5) * dx[1]
				    << ',' << (static_cast<double>(k) + 0.5) * dx[2] << ',' << p.rho << ',' << p.u[0] << ',' << p.u[1] << ',' << p.u[2] << ',' << p.p
				    << ',' << p.erad << '\n';
			}
	const auto history = sim.history();
	std::printf("hydro %s: %d steps to t=%.6g", c.scenario.c_str(), steps, sim.time());
	if(!history.empty()) {
		std::printf(", totals");
		for(const double v : history.back().totals) std::printf(" %.12g", v);
	}
	std::printf("\nwrote %zu cells to %s\n", n, o.output.c_str());
	return 0;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"taskgrid: task-based runtime, Poisson and radiation-hydrodynamics apps, benchmark harness"};
	app.require_subcommand(1);
	// Options of a subcommand may be read from a [bench] / [run] section; command-line flags take precedence.
	app.set_config("--config", "", "TOML/INI file with a [bench] or [run] section of options");
	app.fallthrough();
	app.allow_config_extras(CLI::config_extras_mode::error);

	// bench
	bench::bench_config bc;
	bc.output = "bench.csv";
	std::string b_app, b_mode = "weak", b_exec = "sequential", b_coll = "binomial_tree";
	index_t size_per_rank = 0;
	auto* b = app.add_subcommand("bench", "Run a benchmark and write one CSV row per configuration point");
	b->add_option("--app", b_app, "poisson, hydro, or hydro_norad")->required();
	b->add_option("--mode", b_mode, "size_sweep, strong, or weak")->capture_default_str();
	b->add_option("--executor", b_exec, "sequential or async")->capture_default_str();
	b->add_option("--collective", b_coll, "star or binomial_tree")->capture_default_str();
	b->add_option("--ranks", bc.ranks, "Ascending rank counts, e.g. 1,2,4")->delimiter(',')->capture_default_str();
	b->add_option("--workers", bc.workers, "Worker threads per rank")->capture_default_str();
	b->add_option("--size", bc.size, "Global cells (strong), cells per rank (weak), or first sweep size")->capture_default_str();
	b->add_option("--size-per-rank", size_per_rank, "Cells per rank (weak mode; same as --size)");
	b->add_option("--sweep-points", bc.sweep_points, "Doublings in a size sweep")->capture_default_str();
	b->add_option("--runs", bc.runs, "Independent runs per point")->capture_default_str();
	b->add_option("--iterations", bc.iterations, "Measured iterations per run")->capture_default_str();
	b->add_option("--warmup", bc.warmup, "Unmeasured leading iterations per run")->capture_default_str();
	b->add_option("--sweeps", bc.poisson_sweeps, "Red-black iteration pairs per poisson iteration")->capture_default_str();
	b->add_option("--output,-o", bc.output, "CSV output path")->capture_default_str();

	// run
	run_options ro;
	auto* r = app.add_subcommand("run", "Run one application to completion and write the final state as CSV");
	r->add_option("--app", ro.app, "poisson or hydro")->capture_default_str();
	r->add_option("--scenario", ro.scenario, "sod, rankine_hugoniot, smooth_wave, or uniform");
	r->add_option("--scenario-file", ro.scenario_file, "key = value scenario file");
	r->add_option("--set", ro.settings, "Override a scenario setting (key=value); repeatable");
	r->add_option("--cells", ro.cells, "Grid extents, e.g. 400 or 64x64 or 32x8x8");
	r->add_option("--ranks", ro.ranks, "Simulated ranks")->capture_default_str();
	r->add_option("--workers", ro.workers, "Worker threads per rank")->capture_default_str();
	r->add_option("--executor", ro.executor, "sequential or async")->capture_default_str();
	r->add_option("--collective", ro.collective, "star or binomial_tree")->capture_default_str();
	r->add_option("--tolerance", ro.tolerance, "Poisson residual tolerance")->capture_default_str();
	r->add_option("--output,-o", ro.output, "CSV output path")->capture_default_str();

	// validate
	std::string filter;
	auto* v = app.add_subcommand("validate", "Run the acceptance checks; one PASS/FAIL line each");
	v->add_option("--filter", filter, "Only checks whose name contains this text");

	CLI11_PARSE(app, argc, argv);

	try {
		if(b->parsed()) {
			bc.app = bench::parse_app(b_app);
			bc.mode = bench::parse_mode(b_mode);
			bc.executor = parse_executor_kind(b_exec);
			bc.collectives = parse_collective_algorithm(b_coll);
			if(size_per_rank > 0) bc.size = size_per_rank;
			bench::validate(bc);
			return run_bench(bc);
		}
		if(r->parsed()) {
			const executor_config ex{parse_executor_kind(ro.executor), ro.ranks, ro.workers, parse_collective_algorithm(ro.collective)};
			if(ro.app == "poisson") return run_poisson_app(ro, ex);
			if(ro.app == "hydro") return run_hydro_app(ro, ex);
			throw std::invalid_argument("unknown app '" + ro.app + "' (expected poisson or hydro)");
		}
		if(v->parsed()) return validation::run_acceptance(filter) == 0 ? 0 : 1;
	} catch(const std::exception& e) {
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}
