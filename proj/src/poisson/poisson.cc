#include "taskgrid/poisson/poisson.h"

#include "taskgrid/bench/timing.h"
#include "taskgrid/cell_loops.h"
#include "taskgrid/kernels/kernels.h"

#include <cmath>
#include <numbers>

namespace taskgrid::poisson {

double exact_solution(double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); }

double rhs(double x, double y) { return -2.0 * std::numbers::pi * std::numbers::pi * exact_solution(x, y); }

namespace {

	void validate(const config& cfg) {
		if(cfg.dims != 1 && cfg.dims != 2) throw std::invalid_argument("poisson: dims must be 1 or 2");
		for(int a = 0; a < cfg.dims; ++a) {
			if(cfg.extents[a] < 1) throw std::invalid_argument("poisson: extents must be positive");
			if(!(cfg.length[a] > 0)) throw std::invalid_argument("poisson: domain length must be positive");
		}
		if(!(cfg.tolerance > 0)) throw std::invalid_argument("poisson: tolerance must be positive");
		if(cfg.iterations_per_task < 0) throw std::invalid_argument("poisson: iterations per task must be >= 0");
		if(cfg.max_tasks < 1) throw std::invalid_argument("poisson: max_tasks must be >= 1");
	}

	// Boundary ghost (or owned, for f) value at global cell (gi, gj); only the second coordinate is ignored in 1D.
	double exact_at(const problem& prob, index_t gi, index_t gj) {
		const double y = prob.cfg.dims > 1 ? prob.center(1, gj) : 0.5;
		return exact_solution(prob.center(0, gi), y);
	}

} // namespace

solver_state init_problem(runtime& rt, const config& cfg) {
	validate(cfg);
	const int ranks = rt.config().ranks;
	const auto colors = balanced_color_grid(ranks, cfg.dims);
	solver_state state;
	auto& prob = state.prob;
	prob.cfg = cfg;
	prob.topology = rt.add_topology(
	    mesh_topology::decompose(std::span(cfg.extents.data(), static_cast<std::size_t>(cfg.dims)), std::span(colors.data(), cfg.dims), 1));
	prob.p = rt.register_field(prob.topology, "p", element_kind::scalar());
	prob.f = rt.register_field(prob.topology, "f", element_kind::scalar());
	prob.dx = cfg.length[0] / static_cast<double>(cfg.extents[0]);
	prob.dy = cfg.dims > 1 ? cfg.length[1] / static_cast<double>(cfg.extents[1]) : 1.0;

	rt.submit({"poisson.init", {write_discard(prob.p), write_discard(prob.f)}, simple_body([prob](task_context& ctx) {
		           auto p = ctx.write(prob.p);
		           auto f = ctx.write(prob.f);
		           const auto& b = ctx.block();
		           for_each_cell(ctx, b, [&](index_t i, index_t j, index_t) {
			           const auto g = b.local_to_global({i, j, 0});
			           p(i, j) = 0.0;
			           const double y = prob.cfg.dims > 1 ? prob.center(1, g[1]) : 0.5;
			           f(i, j) = rhs(prob.center(0, g[0]), y);
		           });
		           // Physical-boundary ghosts carry the Dirichlet data.
		           const bool manufactured = prob.cfg.boundary == boundary_mode::manufactured;
		           for(int a = 0; a < prob.cfg.dims; ++a) {
			           const int other = 1 - a;
			           const index_t n_other = prob.cfg.dims > 1 ? b.owned[other].size() : 1;
			           for(const auto s : {side::low, side::high}) {
				           if(!b.boundary[a][static_cast<int>(s)]) continue;
				           const index_t local = s == side::low ? -1 : b.owned[a].size();
				           for(index_t t = 0; t < n_other; ++t) {
					           index_t li = a == 0 ? local : t;
					           index_t lj = a == 0 ? t : local;
					           const auto g = b.local_to_global({li, lj, 0});
					           p(li, lj) = manufactured ? exact_at(prob, g[0], g[1]) : 0.0;
				           }
			           }
		           }
	           })});
	return state;
}

void gsm_sweep(const task_context& ctx, const problem& prob, field_view<double> p, field_view<const double> f, int parity) {
	const auto& b = p.block();
	const auto& k = kernels::active();
	const double cx = prob.cx();
	const double cy = prob.cy();
	const double diag = prob.diag();
	const index_t n = b.owned[0].size();
	const index_t sy = b.dims > 1 ? p.stride(1) : 0;
	for_each_row(ctx, b, [&](index_t j, index_t) {
		const index_t gj = b.dims > 1 ? b.owned[1].begin + j : 0;
		const int first = static_cast<int>((b.owned[0].begin + gj + parity) % 2);
		double* row = p.ptr(0, 0, j);
		// In 1D the y-neighbors are multiplied by cy == 0; point them at the row itself.
		k.gs_row(row, row - sy, row + sy, f.ptr(0, 0, j), n, first, cx, cy, diag);
	});
}

task_result solve_task(runtime& rt, solver_state& state, std::optional<int> iterations) {
	const int iters = iterations.value_or(state.prob.cfg.iterations_per_task);
	const auto prob = state.prob;
	task_spec spec{"poisson.solve", {read_write(prob.p), read_only(prob.f, false)}, [prob, iters](task_context& ctx) -> rank_task<void> {
		               auto p = ctx.write(prob.p);
		               const auto f = ctx.read(prob.f);
		               for(int it = 0; it < iters; ++it) {
			               gsm_sweep(ctx, prob, p, f, 0);
			               co_await ctx.exchange(prob.p);
			               gsm_sweep(ctx, prob, p, f, 1);
			               // The exchange after the last black half-sweep is left to the runtime, which
			               // inserts it only if a later task reads the ghosts.
			               if(it + 1 < iters) co_await ctx.exchange(prob.p);
		               }
	               }};
	++state.tasks;
	if(prob.cfg.benchmark) {
		rt.set_timing_epoch(rt.timing_epoch().first, state.tasks - 1);
		return bench::timed_task(rt, "poisson.solve", std::move(spec));
	}
	return rt.submit(std::move(spec));
}

task_result residual_task(runtime& rt, const problem& prob) {
	task_spec spec{"poisson.residual", {read_only(prob.p), read_only(prob.f, false)}, simple_body([prob](task_context& ctx) {
		               const auto p = ctx.read(prob.p);
		               const auto f = ctx.read(prob.f);
		               const auto& b = p.block();
		               const auto& k = kernels::active();
		               const index_t n = b.owned[0].size();
		               const index_t sy = b.dims > 1 ? p.stride(1) : 0;
		               const index_t rows = b.dims > 1 ? b.owned[1].size() : 1;
		               const index_t chunks = std::max<index_t>(1, std::min<index_t>(rows, ctx.workers()));
		               std::vector<exact_sum> partial(static_cast<std::size_t>(chunks));
		               ctx.parallel(chunks, [&](index_t c) {
			               std::vector<double> sq(static_cast<std::size_t>(n));
			               for(index_t j = rows * c / chunks; j < rows * (c + 1) / chunks; ++j) {
				               const double* row = p.ptr(0, 0, j);
				               k.poisson_residual_sq_row(sq.data(), row, row - sy, row + sy, f.ptr(0, 0, j), n, prob.cx(), prob.cy());
				               for(const double v : sq) partial[static_cast<std::size_t>(c)].add(v);
			               }
		               });
		               for(const auto& s : partial) ctx.contribute(s);
	               })};
	spec.reduce = reduction::sum;
	return rt.submit(std::move(spec));
}

double residual_value(const task_result& r) { return std::sqrt(r.get()); }

double residual(runtime& rt, solver_state& state) {
	const double r = residual_value(residual_task(rt, state.prob));
	state.residual_history.push_back(r);
	return r;
}

double linf_error(runtime& rt, const problem& prob) {
	const auto p = rt.gather(prob.p);
	const index_t nx = prob.cfg.extents[0];
	const index_t ny = prob.cfg.dims > 1 ? prob.cfg.extents[1] : 1;
	double err = 0;
	for(index_t j = 0; j < ny; ++j)
		for(index_t i = 0; i < nx; ++i) {
			err = std::max(err, std::abs(p[static_cast<std::size_t>(j * nx + i)] - exact_at(prob, i, j)));
		}
	return err;
}

report run_poisson(runtime& rt, const config& cfg) {
	auto state = init_problem(rt, cfg);
	report rep;
	if(cfg.benchmark) {
		std::vector<task_result> residuals;
		for(int t = 0; t < cfg.max_tasks; ++t) {
			solve_task(rt, state);
			residuals.push_back(residual_task(rt, state.prob));
		}
		for(const auto& r : residuals) state.residual_history.push_back(residual_value(r));
		rep.converged = state.residual_history.back() < cfg.tolerance;
	} else {
		while(state.tasks < cfg.max_tasks) {
			solve_task(rt, state);
			if(residual(rt, state) < cfg.tolerance) {
				rep.converged = true;
				break;
			}
		}
	}
	rep.tasks = state.tasks;
	rep.residual_history = state.residual_history;
	rep.final_residual = state.residual_history.back();
	if(!cfg.benchmark) {
		rep.linf_error = linf_error(rt, state.prob);
		rep.solution = rt.gather(state.prob.p);
	}
	return rep;
}

report run_poisson(const config& cfg, const executor_config& exec) {
	runtime rt(exec);
	return run_poisson(rt, cfg);
}

} // namespace taskgrid::poisson
