#include "taskgrid/validation/acceptance.h"

#include "taskgrid/bench/harness.h"
#include "taskgrid/bench/stats.h"
#include "taskgrid/cell_loops.h"
#include "taskgrid/collectives.h"
#include "taskgrid/hydro/diffusion.h"
#include "taskgrid/hydro/simulation.h"
#include "taskgrid/hydro/state.h"
#include "taskgrid/poisson/poisson.h"
#include "taskgrid/validation/dense.h"
#include "taskgrid/validation/riemann.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace taskgrid::validation {

double exact_fsum(const std::vector<double>& values) {
	std::vector<double> partials;
	for(double x : values) {
		std::size_t i = 0;
		for(double y : partials) {
			if(std::abs(x) < std::abs(y)) std::swap(x, y);
			const double hi = x + y;
			const double lo = y - (hi - x);
			if(lo != 0.0) partials[i++] = lo;
			x = hi;
		}
		partials.resize(i);
		partials.push_back(x);
	}
	if(partials.empty()) return 0.0;
	std::size_t n = partials.size();
	double hi = partials[--n];
	double lo = 0;
	while(n > 0) {
		const double x = hi;
		const double y = partials[--n];
		hi = x + y;
		lo = y - (hi - x);
		if(lo != 0.0) break;
	}
	// Round half-even correction when the remaining partials push past a tie.
	if(n > 0 && ((lo < 0 && partials[n - 1] < 0) || (lo > 0 && partials[n - 1] > 0))) {
		const double y = lo * 2;
		const double x = hi + y;
		if(y == x - hi) hi = x;
	}
	return hi;
}

namespace {

	using clock = std::chrono::steady_clock;

	int ceil_log2(int p) { return p <= 1 ? 0 : std::bit_width(static_cast<unsigned>(p - 1)); }

	double seconds_since(clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); }

	std::string fmt(const char* f, auto... args) {
		char buf[512];
		std::snprintf(buf, sizeof buf, f, args...);
		return buf;
	}

	executor_config exec(executor_kind kind, int ranks, int workers = 1, collective_algorithm alg = collective_algorithm::binomial_tree) {
		return executor_config{kind, ranks, workers, alg};
	}

	// -------------------------------------------------------------------------------------------------------------
	// executor equivalence

	struct hydro_outcome {
		std::vector<std::vector<double>> fields;
		std::vector<std::vector<double>> totals;
		std::vector<double> dts;
	};

	hydro_outcome run_hydro(const hydro::config& c, executor_config ex, int steps) {
		runtime rt(ex);
		hydro::simulation sim(rt, c);
		sim.advance(steps);
		hydro_outcome out;
		for(int comp = 0; comp < sim.lay().components(); ++comp) out.fields.push_back(sim.gather(comp));
		for(const auto& r : sim.history()) {
			out.totals.push_back(r.totals);
			out.dts.push_back(r.dt);
		}
		return out;
	}

	check_result executor_equivalence() {
		const auto t0 = clock::now();
		poisson::config pc;
		pc.extents = {64, 64};
		pc.max_tasks = 3;
		pc.tolerance = 1e-300;
		const auto ps = poisson::run_poisson(pc, exec(executor_kind::sequential, 4));
		const auto pa = poisson::run_poisson(pc, exec(executor_kind::async_dag, 4, 2));
		const bool poisson_ok = ps.solution == pa.solution && ps.residual_history == pa.residual_history && ps.tasks == 3;

		auto hc = hydro::scenario_defaults("sod");
		hc.extents = {200, 1, 1};
		hc.end_time = 0;
		const auto hs = run_hydro(hc, exec(executor_kind::sequential, 4), 20);
		const auto ha = run_hydro(hc, exec(executor_kind::async_dag, 4, 2), 20);
		const bool hydro_ok = hs.fields == ha.fields && hs.totals == ha.totals && hs.dts == ha.dts && hs.totals.size() == 20;
		const double secs = seconds_since(t0);
		return {poisson_ok && hydro_ok && secs < 30,
		    fmt("poisson 64^2/4 ranks/3 tasks %s, hydro sod 200 cells/20 steps %s, %.2f s (limit 30 s)", poisson_ok ? "bitwise equal" : "DIFFER",
		        hydro_ok ? "bitwise equal" : "DIFFER", secs)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// dependency soundness

	struct program {
		int fields = 1;
		std::vector<std::vector<field_access>> tasks;
	};

	program random_program(std::mt19937& rng) {
		program p;
		p.fields = 1 + static_cast<int>(rng() % 3);
		const int n = 1 + static_cast<int>(rng() % 10);
		for(int t = 0; t < n; ++t) {
			std::vector<field_access> a;
			for(int f = 0; f < p.fields; ++f) {
				const auto r = rng() % 4;
				if(r == 0) continue;
				const field_handle h{static_cast<std::uint32_t>(f)};
				a.push_back(r == 1 ? read_only(h) : r == 2 ? read_write(h) : write_discard(h));
			}
			if(a.empty()) a.push_back(read_only(field_handle{0}));
			p.tasks.push_back(a);
		}
		return p;
	}

	struct program_outcome {
		std::vector<std::vector<double>> fields;
		std::vector<double> reductions;
		bool log_respects_edges = true;
	};

	program_outcome execute(const program& p, executor_config cfg) {
		runtime rt(cfg);
		const auto colors = balanced_color_grid(cfg.ranks, 2);
		const auto topo = rt.add_topology(mesh_topology::decompose(std::vector<index_t>{12, 10}, std::span(colors.data(), 2), 1));
		std::vector<field_handle> handles;
		for(int f = 0; f < p.fields; ++f) handles.push_back(rt.register_field(topo, "f" + std::to_string(f), element_kind::scalar()));
		std::vector<task_result> results;
		for(std::size_t t = 0; t < p.tasks.size(); ++t) {
			task_spec s;
			s.label = "t" + std::to_string(t);
			s.accesses = p.tasks[t];
			const double salt = static_cast<double>(t + 1);
			s.body = simple_body([accesses = p.tasks[t], salt](task_context& ctx) {
				const auto& b = ctx.block();
				std::vector<double> acc(static_cast<std::size_t>(b.padded_cells()), salt);
				for(const auto& a : accesses) {
					if(a.priv == privilege::write_discard) continue;
					auto v = ctx.read(a.field);
					for_each_cell(ctx, [&](index_t i, index_t j, index_t) {
						acc[static_cast<std::size_t>(b.linear(i, j))] +=
						    0.5 * v(i, j) + 0.125 * (v(i - 1, j) + v(i + 1, j) + v(i, j - 1) + v(i, j + 1));
					});
				}
				for(const auto& a : accesses) {
					if(!writes(a.priv)) continue;
					auto v = ctx.write(a.field);
					for_each_cell(ctx, [&](index_t i, index_t j, index_t) { v(i, j) = acc[static_cast<std::size_t>(b.linear(i, j))] * 0.25; });
				}
				ctx.contribute(sum_cells(ctx, [&](index_t i, index_t j, index_t) { return acc[static_cast<std::size_t>(b.linear(i, j))]; }));
			});
			s.reduce = reduction::sum;
			results.push_back(rt.submit(std::move(s)));
		}
		rt.fence();
		program_outcome out;
		for(const auto h : handles) out.fields.push_back(rt.gather(h));
		for(const auto& r : results) out.reductions.push_back(r.get());
		std::map<std::pair<task_id, int>, execution_event> by_task;
		for(const auto& e : rt.execution_log()) by_task[{e.task, e.rank}] = e;
		for(const auto& e : rt.graph().edges) {
			for(int r = 0; r < cfg.ranks; ++r) {
				if(!(by_task.at({e.from, r}).end_seq < by_task.at({e.to, r}).start_seq)) out.log_respects_edges = false;
			}
		}
		return out;
	}

	check_result dependency_soundness() {
		std::mt19937 rng(20240611);
		const int programs = 200;
		int mismatches = 0, violations = 0;
		for(int i = 0; i < programs; ++i) {
			const auto p = random_program(rng);
			const auto ranks = 1 + static_cast<int>(rng() % 4);
			const auto reference = execute(p, exec(executor_kind::sequential, ranks));
			const auto got = execute(p, exec(executor_kind::async_dag, ranks, 2));
			if(got.fields != reference.fields || got.reductions != reference.reductions) ++mismatches;
			if(!got.log_respects_edges || !reference.log_respects_edges) ++violations;
		}
		return {mismatches == 0 && violations == 0,
		    fmt("%d random programs (<=10 tasks, <=3 fields): %d result mismatches, %d edge violations", programs, mismatches, violations)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// concurrency benefit

	check_result concurrency_benefit() {
		using namespace std::chrono_literals;
		const auto makespan = [](executor_kind kind) {
			runtime rt(exec(kind, 1, 2));
			const auto topo = rt.add_topology(mesh_topology::decompose(std::vector<index_t>{4}, std::vector<int>{1}));
			const auto a = rt.register_field(topo, "a", element_kind::scalar());
			const auto b = rt.register_field(topo, "b", element_kind::scalar());
			const auto nap = simple_body([](task_context&) { std::this_thread::sleep_for(50ms); });
			const auto t0 = clock::now();
			for(int t = 0; t < 4; ++t) {
				rt.submit({"chain_a", {read_write(a, false)}, nap});
				rt.submit({"chain_b", {read_write(b, false)}, nap});
			}
			rt.fence();
			return seconds_since(t0);
		};
		const double seq = makespan(executor_kind::sequential);
		const double async = makespan(executor_kind::async_dag);
		return {async <= 0.75 * seq, fmt("sequential %.3f s, async %.3f s, ratio %.3f (limit 0.75)", seq, async, async / seq)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// collective cost asymmetry

	check_result collective_asymmetry() {
		bool ok = true;
		std::ostringstream detail;
		for(const int p : {2, 4, 8, 16}) {
			transport star(p), tree(p);
			allreduce_all(star, std::vector<double>(static_cast<std::size_t>(p), 1.0), reduce_op::sum, collective_algorithm::star);
			allreduce_all(tree, std::vector<double>(static_cast<std::size_t>(p), 1.0), reduce_op::sum, collective_algorithm::binomial_tree);
			const auto root_ops = star.stats().per_rank[0].collective_message_ops;
			const auto star_rounds = star.stats().max_collective_rounds();
			const auto tree_rounds = tree.stats().max_collective_rounds();
			const auto expect_ops = static_cast<std::uint64_t>(2 * (p - 1));
			const auto expect_rounds = static_cast<std::uint64_t>(2 * ceil_log2(p));
			ok = ok && root_ops == expect_ops && tree_rounds == expect_rounds;
			if(p >= 4) ok = ok && star_rounds > tree_rounds && root_ops > tree.stats().max_collective_message_ops();
			detail << "P=" << p << ": star root ops " << root_ops << " (expect " << expect_ops << "), tree rounds " << tree_rounds << " (expect "
			       << expect_rounds << "), star rounds " << star_rounds << "; ";
		}
		return {ok, detail.str()};
	}

	// -------------------------------------------------------------------------------------------------------------
	// poisson

	check_result poisson_correctness() {
		const auto t0 = clock::now();
		std::vector<double> errors;
		bool monotone = true, converged = true;
		for(const index_t n : {32, 64, 128}) {
			poisson::config c;
			c.extents = {n, n};
			c.tolerance = 1e-8;
			c.max_tasks = 5000;
			const auto rep = poisson::run_poisson(c, exec(executor_kind::sequential, 1));
			converged = converged && rep.converged;
			for(std::size_t k = 1; k < rep.residual_history.size(); ++k)
				monotone = monotone && rep.residual_history[k] <= rep.residual_history[k - 1];
			errors.push_back(rep.linf_error);
		}
		const double o1 = std::log2(errors[0] / errors[1]);
		const double o2 = std::log2(errors[1] / errors[2]);
		const bool order_ok = std::abs(o1 - 2.0) <= 0.2 && std::abs(o2 - 2.0) <= 0.2;

		poisson::config c;
		c.extents = {64, 64};
		c.max_tasks = 4;
		c.tolerance = 1e-300;
		const auto single = poisson::run_poisson(c, exec(executor_kind::sequential, 1));
		bool ranks_ok = true;
		for(const int r : {2, 4, 8}) {
			const auto multi = poisson::run_poisson(c, exec(executor_kind::sequential, r));
			ranks_ok = ranks_ok && multi.solution == single.solution && multi.residual_history == single.residual_history;
		}
		const double secs = seconds_since(t0);
		return {converged && monotone && order_ok && ranks_ok && secs < 60,
		    fmt("Linf errors %.3e, %.3e, %.3e -> orders %.3f, %.3f (2 +- 0.2); residual non-increasing: %s; ranks 2/4/8 bitwise equal to 1: %s; "
		        "%.1f s (limit 60 s)",
		        errors[0], errors[1], errors[2], o1, o2, monotone ? "yes" : "NO", ranks_ok ? "yes" : "NO", secs)};
	}

	check_result poisson_dense_oracle() {
		const index_t n = 6;
		double worst = 0;
		for(const int ranks : {1, 4}) {
			runtime rt(exec(executor_kind::sequential, ranks));
			poisson::config c;
			c.extents = {n, n};
			auto st = poisson::init_problem(rt, c);
			const auto& prob = st.prob;
			std::vector<double> x0(static_cast<std::size_t>(n * n));
			for(std::size_t k = 0; k < x0.size(); ++k) x0[k] = std::cos(1.3 * static_cast<double>(k));
			rt.submit({"set_p", {write_discard(prob.p)}, simple_body([&](task_context& ctx) {
				           auto p = ctx.write(prob.p);
				           const auto& b = p.block();
				           for_each_cell(ctx, b, [&](index_t i, index_t j, index_t) {
					           const auto g = b.local_to_global({i, j, 0});
					           p(i, j) = x0[static_cast<std::size_t>(g[1] * n + g[0])];
				           });
			           })});
			poisson::solve_task(rt, st, 1);
			const auto got = rt.gather(prob.p);

			// Dense system of the 5-point discretization with the boundary ghosts moved to the right side.
			const auto N = static_cast<std::size_t>(n * n);
			dense_matrix A(N, N);
			std::vector<double> b(N);
			for(index_t j = 0; j < n; ++j)
				for(index_t i = 0; i < n; ++i) {
					const auto c0 = static_cast<std::size_t>(j * n + i);
					A(c0, c0) = -prob.diag();
					double rhs = poisson::rhs(prob.center(0, i), prob.center(1, j));
					const index_t nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
					for(int t = 0; t < 4; ++t) {
						const double w = t < 2 ? prob.cx() : prob.cy();
						const index_t ni = nb[t][0], nj = nb[t][1];
						if(ni < 0 || nj < 0 || ni >= n || nj >= n) {
							rhs -= w * poisson::exact_solution((static_cast<double>(ni) + 0.5) * prob.dx, (static_cast<double>(nj) + 0.5) * prob.dy);
						} else {
							A(c0, static_cast<std::size_t>(nj * n + ni)) = w;
						}
					}
					b[c0] = rhs;
				}
			auto x = x0;
			for(int parity = 0; parity < 2; ++parity) {
				for(std::size_t r = 0; r < N; ++r) {
					if(static_cast<int>((r % static_cast<std::size_t>(n) + r / static_cast<std::size_t>(n)) % 2) != parity) continue;
					double acc = b[r];
					for(std::size_t k = 0; k < N; ++k)
						if(k != r) acc -= A(r, k) * x[k];
					x[r] = acc / A(r, r);
				}
			}
			for(std::size_t k = 0; k < N; ++k) worst = std::max(worst, std::abs(got[k] - x[k]));
		}
		return {worst <= 1e-13, fmt("max |runtime - dense red-black oracle| = %.3e over 6x6, ranks 1 and 4 (limit 1e-13)", worst)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// hydro

	check_result hydro_shocks() {
		const auto t0 = clock::now();
		double l1 = 0;
		{
			runtime rt(exec(executor_kind::sequential, 1));
			hydro::simulation sim(rt, hydro::scenario_defaults("sod"));
			sim.run_to_end();
			const auto w = sim.gather_primitives();
			const exact_riemann exact({1, 0, 1}, {0.125, 0, 0.1}, 1.4);
			for(std::size_t i = 0; i < w.size(); ++i) {
				const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(w.size());
				l1 += std::abs(w[i].rho - exact.sample((x - 0.5) / sim.time()).rho) / static_cast<double>(w.size());
			}
		}
		double measured = 0, expected = 0;
		{
			runtime rt(exec(executor_kind::sequential, 1));
			auto c = hydro::scenario_defaults("rankine_hugoniot");
			c.end_time = 0.05;
			hydro::simulation sim(rt, c);
			const primitive_1d ahead{c.right.rho, c.right.u[0], c.right.p};
			const auto post = post_shock_state(ahead, c.mach, c.gamma);
			expected = shock_speed(ahead, post.p, c.gamma, true);
			const double mid = 0.5 * (post.rho + ahead.rho);
			const index_t nx = c.extents[0];
			const auto front = [&] {
				// Mid-level density crossing along the first x-line, interpolated between cell centers.
				const auto rho = sim.gather(0);
				for(index_t i = nx - 1; i > 0; --i) {
					const double a = rho[static_cast<std::size_t>(i - 1)], b = rho[static_cast<std::size_t>(i)];
					if(b < mid && a >= mid) return (static_cast<double>(i) - 0.5 + (a - mid) / (a - b)) * c.length[0] / static_cast<double>(nx);
				}
				return std::numeric_limits<double>::quiet_NaN();
			};
			sim.run_to_end();
			const double x1 = front(), t1 = sim.time();
			sim.set_end_time(0.2);
			sim.run_to_end();
			const double x2 = front(), t2 = sim.time();
			measured = (x2 - x1) / (t2 - t1);
		}
		const double rel = std::abs(measured - expected) / expected;
		const double secs = seconds_since(t0);
		return {l1 < 1e-2 && rel < 0.02 && secs < 120,
		    fmt("sod 400 cells t=0.2: L1(rho) = %.3e (limit 1e-2); rankine_hugoniot 256x4x4: shock speed %.5f vs %.5f, rel. error %.3f%% "
		        "(limit 2%%); %.1f s (limit 120 s)",
		        l1, measured, expected, 100 * rel, secs)};
	}

	/// Smooth, genuinely 3D state with nonzero mean momentum along every axis.
	void smooth_3d_state(runtime& rt, hydro::simulation& sim) {
		const auto U = sim.state();
		const auto lay = sim.lay();
		const auto dx = sim.spacing();
		const hydro::eos e{sim.cfg().gamma};
		rt.submit({"smooth_state", {write_discard(U)}, simple_body([=](task_context& ctx) {
			           auto u = ctx.write(U);
			           const auto& b = u.block();
			           for_each_cell(ctx, b, [&](index_t i, index_t j, index_t k) {
				           const auto g = b.local_to_global({i, j, k});
				           const double tau = 2 * std::numbers::pi;
				           const double x = (static_cast<double>(g[0]) + 0.5) * dx[0];
				           const double y = (static_cast<double>(g[1]) + 0.5) * dx[1];
				           const double z = (static_cast<double>(g[2]) + 0.5) * dx[2];
				           hydro::primitive w;
				           w.rho = 1.0 + 0.3 * std::sin(tau * x) * std::cos(tau * y) + 0.1 * std::sin(tau * z);
				           w.u = {0.5 + 0.2 * std::cos(tau * y), -0.3 + 0.1 * std::sin(tau * z), 0.2 + 0.1 * std::cos(tau * x)};
				           w.p = 1.0 + 0.2 * std::cos(tau * (x + y + z));
				           const auto cons = hydro::to_conserved(w, lay, e);
				           for(int comp = 0; comp < lay.components(); ++comp) u.at(comp, i, j, k) = cons[comp];
			           });
		           })});
	}

	check_result conservation() {
		runtime rt(exec(executor_kind::sequential, 1));
		auto c = hydro::scenario_defaults("uniform");
		c.dims = 3;
		c.extents = {16, 16, 16};
		c.boundary = {hydro::boundary_kind::periodic, hydro::boundary_kind::periodic, hydro::boundary_kind::periodic};
		c.end_time = 0;
		hydro::simulation sim(rt, c);
		smooth_3d_state(rt, sim);
		const auto initial = sim.totals().values();
		sim.advance(100);
		const auto final = sim.history().back().totals;
		const char* names[] = {"mass", "mom_x", "mom_y", "mom_z", "energy"};
		double worst = 0;
		std::ostringstream detail;
		for(std::size_t k = 0; k < initial.size(); ++k) {
			const double before = initial[k] * sim.cell_volume();
			const double drift = std::abs(final[k] - before) / std::abs(before);
			worst = std::max(worst, drift);
			detail << names[k] << " " << fmt("%.2e", drift) << (k + 1 < initial.size() ? ", " : "");
		}
		return {worst < 1e-12, "periodic 16^3, 100 steps, relative drift: " + detail.str() + " (limit 1e-12)"};
	}

	check_result weno_order() {
		std::vector<double> err;
		for(const int n : {20, 40, 80, 160}) {
			const double h = 2 * std::numbers::pi / n;
			const auto avg = [h](int i) { return (std::cos(i * h) - std::cos((i + 1) * h)) / h; };
			double e = 0;
			for(int i = 0; i < n; ++i)
				e = std::max(e, std::abs(hydro::weno5z(avg(i - 2), avg(i - 1), avg(i), avg(i + 1), avg(i + 2)) - std::sin((i + 1) * h)));
			err.push_back(e);
		}
		bool order_ok = true;
		std::string orders;
		for(std::size_t k = 1; k < err.size(); ++k) {
			const double o = std::log2(err[k - 1] / err[k]);
			order_ok = order_ok && std::abs(o - 5) <= 0.5;
			orders += fmt("%s%.3f", k > 1 ? ", " : "", o);
		}
		// Error relative to max(1, |exact|), so the bound is meaningful for large offsets too.
		double poly = 0;
		const auto scaled = [](double got, double exact) { return std::abs(got - exact) / std::max(1.0, std::abs(exact)); };
		for(const double c : {-3.25, 0.0, 1.0, 7.5, 1e6}) poly = std::max(poly, scaled(hydro::weno5z(c, c, c, c, c), c));
		for(const double a : {-1.5, 0.0, 0.3, 2.0, 1000.0})
			for(const double slope : {-2.0, -0.1, 0.5, 1.0, 3.0})
				poly = std::max(poly, scaled(hydro::weno5z(a - 2 * slope, a - slope, a, a + slope, a + 2 * slope), a + 0.5 * slope));
		return {order_ok && poly <= 1e-14,
		    fmt("sin cell averages, h = 2pi/20 -> /40 -> /80 -> /160: errors %.3e, %.3e, %.3e, %.3e, orders %s (5 +- 0.5); constant/linear max "
		        "error %.1e relative to max(1, |value|) (limit 1e-14)",
		        err[0], err[1], err[2], err[3], orders.c_str(), poly)};
	}

	check_result heun_order() {
		std::vector<double> err;
		for(const index_t n : {32, 64, 128}) {
			runtime rt(exec(executor_kind::sequential, 1));
			auto c = hydro::scenario_defaults("smooth_wave");
			c.extents = {n, 1, 1};
			c.end_time = 1.0;
			hydro::simulation sim(rt, c);
			sim.run_to_end();
			const auto rho = sim.gather(0);
			const double h = 1.0 / static_cast<double>(n), k = 2 * std::numbers::pi;
			double e = 0;
			for(index_t i = 0; i < n; ++i) {
				const double xl = static_cast<double>(i) * h;
				e += std::abs(rho[static_cast<std::size_t>(i)] - (1.0 + 0.2 * (std::cos(k * xl) - std::cos(k * (xl + h))) / (k * h))) * h;
			}
			err.push_back(e);
		}
		const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
		const double hook = hydro::heun_scalar([](double y) { return -y; }, 1.0, 0.1);
		return {std::abs(o1 - 2) <= 0.3 && std::abs(o2 - 2) <= 0.3 && hook == 0.905,
		    fmt("smooth wave one period, 32/64/128 cells at CFL 0.5: L1 errors %.3e, %.3e, %.3e, orders %.3f, %.3f (2 +- 0.3); y'=-y, h=0.1 -> "
		        "%.17g (expect 0.905 exactly)",
		        err[0], err[1], err[2], o1, o2, hook)};
	}

	check_result diffusion_oracle() {
		auto c = hydro::scenario_defaults("uniform");
		c.dims = 3;
		c.extents = {8, 8, 8};
		c.boundary = {hydro::boundary_kind::outflow, hydro::boundary_kind::outflow, hydro::boundary_kind::outflow};
		c.radiation = true;
		c.left.erad = 0.1;
		c.erad_pulse = 2.0;
		c.erad_pulse_width = 0.25;
		c.jacobi_tolerance = 1e-13;
		const double dt = 2e-3;
		double worst = 0;
		int iterations = 0;
		for(const int ranks : {1, 4}) {
			runtime rt(exec(executor_kind::sequential, ranks));
			hydro::simulation sim(rt, c);
			const int ec = sim.lay().erad();
			const auto rho = sim.gather(0);
			const auto e_old = sim.gather(ec);
			sim.set_clock(dt, 0.0);
			iterations = static_cast<int>(sim.radiation_step().get());
			const auto e_new = sim.gather(ec);

			const auto h = sim.spacing();
			const auto A = hydro::backward_euler_operator(3, c.extents, h, dt, [&](index_t lo, index_t hi, int axis) {
				const auto l = static_cast<std::size_t>(lo), u = static_cast<std::size_t>(hi);
				return hydro::face_diffusion(c.rad, rho[l], rho[u], e_old[l], e_old[u], h[axis]);
			});
			const auto n = static_cast<std::size_t>(A.cells());
			dense_matrix M(n, n);
			for(std::size_t col = 0; col < n; ++col) {
				std::vector<double> unit(n, 0.0);
				unit[col] = 1.0;
				const auto v = A.apply(unit);
				for(std::size_t r = 0; r < n; ++r) M(r, col) = v[r];
			}
			const auto x = dense_solve(M, e_old);
			double num = 0, den = 0;
			for(std::size_t k = 0; k < n; ++k) {
				num += (e_new[k] - x[k]) * (e_new[k] - x[k]);
				den += x[k] * x[k];
			}
			worst = std::max(worst, std::sqrt(num / den));
		}
		const double lambda0 = hydro::flux_limiter(0.0);
		return {worst < 1e-10 && lambda0 == 1.0 / 3.0,
		    fmt("8^3 flux-limited backward-Euler step (ranks 1 and 4, %d Jacobi iterations): relative error vs dense solve %.3e (limit 1e-10); "
		        "lambda(0) = %.17g",
		        iterations, worst, lambda0)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// timing non-interference

	bench::stat_summary oracle_summary(const std::vector<double>& x) {
		bench::stat_summary s;
		s.count = x.size();
		const auto n = static_cast<double>(x.size());
		s.mean = exact_fsum(x) / n;
		if(x.size() > 1) {
			std::vector<double> dev;
			for(const double v : x) dev.push_back((v - s.mean) * (v - s.mean));
			s.ci95_half = 1.96 * std::sqrt(exact_fsum(dev) / (n - 1.0)) / std::sqrt(n);
		}
		s.min = x[0];
		s.max = x[0];
		for(const double v : x) {
			s.min = v < s.min ? v : s.min;
			s.max = v > s.max ? v : s.max;
		}
		auto tmp = x;
		const auto mid = tmp.size() / 2;
		std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid), tmp.end());
		const double upper = tmp[mid];
		if(tmp.size() % 2 == 1) {
			s.median = upper;
		} else {
			const double lower = *std::max_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(mid));
			s.median = (lower + upper) / 2.0;
		}
		return s;
	}

	bool same(const bench::stat_summary& a, const bench::stat_summary& b) {
		return a.mean == b.mean && a.median == b.median && a.min == b.min && a.max == b.max && a.ci95_half == b.ci95_half && a.count == b.count;
	}

	check_result timing_noninterference() {
		// Fields and graphs with and without benchmark mode.
		const auto poisson_run = [](bool benchmark) {
			runtime rt(exec(executor_kind::async_dag, 4, 2));
			poisson::config c;
			c.extents = {48, 40};
			c.max_tasks = 3;
			c.iterations_per_task = 10;
			c.tolerance = 1e-300;
			c.benchmark = benchmark;
			auto st = poisson::init_problem(rt, c);
			for(int t = 0; t < 3; ++t) {
				poisson::solve_task(rt, st);
				poisson::residual_task(rt, st.prob);
			}
			rt.fence();
			return std::make_tuple(rt.gather(st.prob.p), rt.graph().edges, rt.timing_samples().size());
		};
		const auto hydro_run = [](bool benchmark) {
			runtime rt(exec(executor_kind::async_dag, 2, 2));
			auto c = hydro::scenario_defaults("sod");
			c.extents = {120, 1, 1};
			c.radiation = true;
			c.erad_pulse = 1.0;
			c.benchmark = benchmark;
			hydro::simulation sim(rt, c);
			sim.advance(5);
			rt.fence();
			std::vector<std::vector<double>> fields;
			for(int comp = 0; comp < sim.lay().components(); ++comp) fields.push_back(sim.gather(comp));
			return std::make_tuple(fields, rt.graph().edges, rt.timing_samples().size());
		};
		const auto [p0, pe0, ps0] = poisson_run(false);
		const auto [p1, pe1, ps1] = poisson_run(true);
		const auto [h0, he0, hs0] = hydro_run(false);
		const auto [h1, he1, hs1] = hydro_run(true);
		const bool fields_ok = p0 == p1 && h0 == h1;
		const bool edges_ok = pe0 == pe1 && he0 == he1;
		const bool sampled = ps0 == 0 && ps1 > 0 && hs0 == 0 && hs1 > 0;

		std::mt19937_64 rng(99);
		int stat_mismatch = 0;
		for(int set = 0; set < 100; ++set) {
			const auto n = 1 + static_cast<std::size_t>(rng() % 60);
			std::lognormal_distribution<double> dist(-4.0, 1.0 + static_cast<double>(set % 5));
			std::vector<double> x(n);
			for(auto& v : x) v = dist(rng);
			if(!same(bench::summarize(x), oracle_summary(x))) ++stat_mismatch;
			// Grouped into runs: the median-of-run-medians aggregation.
			std::vector<std::vector<double>> runs(1 + rng() % 5);
			for(std::size_t i = 0; i < x.size(); ++i) runs[i % runs.size()].push_back(x[i]);
			std::vector<double> medians;
			for(const auto& r : runs)
				if(!r.empty()) medians.push_back(oracle_summary(r).median);
			if(!same(bench::summarize(runs, bench::aggregation::median_of_runs), oracle_summary(medians))) ++stat_mismatch;
		}
		return {fields_ok && edges_ok && sampled && stat_mismatch == 0,
		    fmt("final fields %s, dependency edges %s with benchmark mode (poisson and hydro, async executor); summarize vs independent "
		        "oracle: %d mismatches over 100 sample sets",
		        fields_ok ? "bitwise equal" : "DIFFER", edges_ok ? "identical" : "DIFFER", stat_mismatch)};
	}

	// -------------------------------------------------------------------------------------------------------------
	// weak scaling

	check_result weak_scaling() {
		bench::bench_config c;
		c.app = bench::app_kind::poisson;
		c.mode = bench::mode_kind::weak;
		c.executor = executor_kind::sequential;
		c.collectives = collective_algorithm::binomial_tree;
		c.ranks = {1, 8};
		c.size = index_t{1} << 16;
		c.runs = 3;
		c.iterations = 5;
		c.warmup = 1;
		const auto rows = bench::run_benchmark(c);
		if(rows.size() != 2 || rows[0].metric != "iteration_time" || rows[1].metric != "iteration_time") {
			return {false, "weak-scaling benchmark did not produce two timed rows" + (rows.empty() ? std::string() : ": " + rows.back().note)};
		}
		const double growth = rows[1].value / rows[0].value - 1.0;
		return {growth < 0.5,
		    fmt("poisson weak scaling, 2^16 cells/rank, sequential + binomial tree: per-iteration time %.4f s (P=1) -> %.4f s "
		        "(P=8), growth %.1f%% (limit 50%%)",
		        rows[0].value, rows[1].value, 100 * growth)};
	}

} // namespace

std::vector<acceptance_check> acceptance_checks() {
	return {
	    {"executor_equivalence", executor_equivalence},
	    {"dependency_soundness", dependency_soundness},
	    {"concurrency_benefit", concurrency_benefit},
	    {"collective_cost_asymmetry", collective_asymmetry},
	    {"poisson_correctness", poisson_correctness},
	    {"poisson_dense_oracle", poisson_dense_oracle},
	    {"hydro_shock_correctness", hydro_shocks},
	    {"conservation", conservation},
	    {"weno5z_order", weno_order},
	    {"heun_order", heun_order},
	    {"diffusion_oracle", diffusion_oracle},
	    {"timing_noninterference", timing_noninterference},
	    {"weak_scaling_shape", weak_scaling},
	};
}

int run_acceptance(const std::string& filter) {
	int failures = 0;
	for(const auto& c : acceptance_checks()) {
		if(!filter.empty() && c.name.find(filter) == std::string::npos) continue;
		check_result r;
		try {
			r = c.run();
		} catch(const std::exception& e) {
			r = {false, std::string("exception: ") + e.what()};
		}
		if(!r.passed) ++failures;
		std::cout << (r.passed ? "PASS " : "FAIL ") << c.name << ": " << r.detail << std::endl;
	}
	return failures;
}

} // namespace taskgrid::validation
