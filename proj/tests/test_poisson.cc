#include "taskgrid/cell_loops.h"
#include "taskgrid/poisson/poisson.h"
#include "taskgrid/validation/dense.h"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace taskgrid;
using namespace taskgrid::poisson;
using Catch::Approx;

namespace {

executor_config exec(int ranks, executor_kind kind = executor_kind::sequential) {
	return executor_config{kind, ranks, 1, collective_algorithm::binomial_tree};
}

config small(index_t nx, index_t ny, boundary_mode mode = boundary_mode::manufactured) {
	config c;
	c.extents = {nx, ny};
	c.boundary = mode;
	return c;
}

/// Dense form of the discrete system for an nx x ny grid: row c holds
///   cx (p_w + p_e) + cy (p_s + p_n) - diag p_c = f_c - (boundary ghost terms).
struct dense_system {
	validation::dense_matrix A;
	std::vector<double> b;
};

dense_system build_dense(const problem& prob) {
	const auto nx = static_cast<std::size_t>(prob.cfg.extents[0]);
	const auto ny = static_cast<std::size_t>(prob.cfg.extents[1]);
	const std::size_t n = nx * ny;
	dense_system s{validation::dense_matrix(n, n), std::vector<double>(n)};
	const bool manufactured = prob.cfg.boundary == boundary_mode::manufactured;
	const auto ghost = [&](long gi, long gj) {
		return manufactured ? exact_solution((static_cast<double>(gi) + 0.5) * prob.dx, (static_cast<double>(gj) + 0.5) * prob.dy) : 0.0;
	};
	for(std::size_t j = 0; j < ny; ++j)
		for(std::size_t i = 0; i < nx; ++i) {
			const std::size_t c = j * nx + i;
			s.A(c, c) = -prob.diag();
			double b = rhs(prob.center(0, static_cast<index_t>(i)), prob.center(1, static_cast<index_t>(j)));
			const long li = static_cast<long>(i), lj = static_cast<long>(j);
			const std::pair<long, long> nbs[4] = {{li - 1, lj}, {li + 1, lj}, {li, lj - 1}, {li, lj + 1}};
			for(int t = 0; t < 4; ++t) {
				const double w = t < 2 ? prob.cx() : prob.cy();
				const auto [ni, nj] = nbs[t];
				if(ni < 0 || nj < 0 || ni >= static_cast<long>(nx) || nj >= static_cast<long>(ny)) {
					b -= w * ghost(ni, nj);
				} else {
					s.A(c, static_cast<std::size_t>(nj) * nx + static_cast<std::size_t>(ni)) = w;
				}
			}
			s.b[c] = b;
		}
	return s;
}

/// Red-black Gauss-Seidel on the dense matrix: red (i + j even) rows first, then black.
void dense_red_black(const dense_system& s, std::vector<double>& x, std::size_t nx) {
	for(int parity = 0; parity < 2; ++parity) {
		for(std::size_t c = 0; c < x.size(); ++c) {
			if(static_cast<int>((c % nx + c / nx) % 2) != parity) continue;
			double acc = s.b[c];
			for(std::size_t k = 0; k < x.size(); ++k)
				if(k != c) acc -= s.A(c, k) * x[k];
			x[c] = acc / s.A(c, c);
		}
	}
}

void set_p(runtime& rt, const problem& prob, const std::vector<double>& values) {
	rt.submit({"set_p", {write_discard(prob.p)}, simple_body([&prob, &values](task_context& ctx) {
		           auto p = ctx.write(prob.p);
		           const auto& b = p.block();
		           for_each_cell(ctx, b, [&](index_t i, index_t j, index_t) {
			           const auto g = b.local_to_global({i, j, 0});
			           p(i, j) = values[static_cast<std::size_t>(g[1] * prob.cfg.extents[0] + g[0])];
		           });
	           })});
	rt.fence();
}

} // namespace

TEST_CASE("init_problem sets up the manufactured problem", "[poisson]") {
	runtime rt(exec(1));
	auto st = init_problem(rt, small(64, 64));
	CHECK(st.prob.dx == 1.0 / 64);
	CHECK(st.prob.dy == 1.0 / 64);
	CHECK(rhs(0.5, 0.5) == Approx(-2 * std::numbers::pi * std::numbers::pi));
	CHECK(rhs(0.5, 0.5) == Approx(-19.739).margin(1e-3));
	const auto p = rt.gather(st.prob.p);
	CHECK(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));

	CHECK_THROWS_AS(init_problem(rt, small(0, 4)), std::invalid_argument);
	auto bad = small(4, 4);
	bad.dims = 3;
	CHECK_THROWS_AS(init_problem(rt, bad), std::invalid_argument);
}

TEST_CASE("boundary ghosts are zero in zero mode and carry the manufactured solution otherwise", "[poisson]") {
	for(const auto mode : {boundary_mode::zero, boundary_mode::manufactured}) {
		runtime rt(exec(1));
		auto st = init_problem(rt, small(8, 8, mode));
		rt.fence();
		const auto& raw = rt.storage(st.prob.p, 0);
		const auto b = st.prob.topology->block(0);
		for(index_t j = 0; j < 8; ++j) {
			const double left = raw[static_cast<std::size_t>(b.linear(-1, j))];
			if(mode == boundary_mode::zero)
				CHECK(left == 0.0);
			else
				CHECK(left == exact_solution(-0.5 / 8, (static_cast<double>(j) + 0.5) / 8));
			// The manufactured wall value (mean of ghost and first cell) vanishes to second order.
			const double wall = 0.5 * (left + exact_solution(0.5 / 8, (static_cast<double>(j) + 0.5) / 8));
			if(mode == boundary_mode::manufactured) CHECK(std::abs(wall) < 1e-12);
		}
	}
}

TEST_CASE("zero p and f stay zero", "[poisson]") {
	runtime rt(exec(2));
	auto cfg = small(8, 8, boundary_mode::zero);
	auto st = init_problem(rt, cfg);
	rt.submit({"zero_f", {write_discard(st.prob.f)}, simple_body([&](task_context& ctx) {
		           auto f = ctx.write(st.prob.f);
		           for_each_cell(ctx, [&](index_t i, index_t j, index_t) { f(i, j) = 0.0; });
	           })});
	solve_task(rt, st, 3);
	const auto p = rt.gather(st.prob.p);
	CHECK(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("one red-black sweep pair matches a dense Gauss-Seidel oracle", "[poisson][oracle]") {
	for(const index_t n : {4, 6}) {
		for(const int ranks : {1, 4}) {
			for(const auto mode : {boundary_mode::manufactured, boundary_mode::zero}) {
				runtime rt(exec(ranks));
				auto st = init_problem(rt, small(n, n, mode));
				// Start from a nonzero iterate so every coupling matters.
				std::vector<double> x0(static_cast<std::size_t>(n * n));
				for(std::size_t c = 0; c < x0.size(); ++c) x0[c] = std::sin(0.7 * static_cast<double>(c) + 0.1);
				set_p(rt, st.prob, x0);
				solve_task(rt, st, 1);
				const auto got = rt.gather(st.prob.p);

				const auto sys = build_dense(st.prob);
				auto expect = x0;
				dense_red_black(sys, expect, static_cast<std::size_t>(n));
				for(std::size_t c = 0; c < got.size(); ++c) CHECK(got[c] == Approx(expect[c]).margin(1e-13));
			}
		}
	}
}

TEST_CASE("residual of the exact discrete solution vanishes and of p = 0 equals |f|", "[poisson]") {
	runtime rt(exec(2));
	auto st = init_problem(rt, small(6, 6, boundary_mode::zero));
	const auto sys = build_dense(st.prob);
	double fnorm = 0;
	for(const double v : sys.b) fnorm += v * v;
	CHECK(residual(rt, st) == Approx(std::sqrt(fnorm)).epsilon(1e-14));

	const auto exact = validation::dense_solve(sys.A, sys.b);
	set_p(rt, st.prob, exact);
	CHECK(residual(rt, st) <= 1e-12);
	CHECK(st.residual_history.size() == 2);
}

TEST_CASE("a solve task reduces the residual", "[poisson]") {
	runtime rt(exec(4));
	auto st = init_problem(rt, small(32, 32));
	const double r0 = residual(rt, st);
	solve_task(rt, st);
	const double r1 = residual(rt, st);
	CHECK(r1 < r0);
}

TEST_CASE("zero-iteration solve leaves p unchanged; consecutive solves form a chain", "[poisson]") {
	runtime rt(exec(2));
	auto st = init_problem(rt, small(8, 8));
	const auto a = solve_task(rt, st, 0);
	rt.fence();
	const auto p = rt.gather(st.prob.p);
	CHECK(std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; }));
	const auto b = solve_task(rt, st, 2);
	rt.fence();
	const auto g = rt.graph();
	const bool chained = std::any_of(g.edges.begin(), g.edges.end(), [&](const edge& e) { return e.from == a.id() && e.to == b.id(); }) ||
	    std::any_of(g.edges.begin(), g.edges.end(), [&](const edge& e) {
		    // an exchange task may sit between the two solves
		    return e.from == a.id() && std::any_of(g.edges.begin(), g.edges.end(), [&](const edge& f) { return f.from == e.to && f.to == b.id(); });
	    });
	CHECK(chained);
}

TEST_CASE("multi-rank solves are bitwise equal to single-rank", "[poisson]") {
	config cfg = small(24, 20);
	cfg.max_tasks = 3;
	cfg.iterations_per_task = 7;
	cfg.tolerance = 1e-300;
	const auto ref = run_poisson(cfg, exec(1));
	for(const int ranks : {2, 3, 4, 6}) {
		for(const auto kind : {executor_kind::sequential, executor_kind::async_dag}) {
			const auto rep = run_poisson(cfg, exec(ranks, kind));
			CHECK(rep.solution == ref.solution);
			CHECK(rep.residual_history == ref.residual_history);
		}
	}
}

TEST_CASE("run_poisson converges, residual never increases, and error is second order", "[poisson][slow]") {
	std::vector<double> errors;
	for(const index_t n : {32, 64, 128}) {
		config cfg = small(n, n);
		cfg.tolerance = 1e-8;
		cfg.max_tasks = 5000;
		const auto rep = run_poisson(cfg, exec(1));
		CHECK(rep.converged);
		for(std::size_t k = 1; k < rep.residual_history.size(); ++k) CHECK(rep.residual_history[k] <= rep.residual_history[k - 1]);
		errors.push_back(rep.linf_error);
	}
	for(std::size_t k = 1; k < errors.size(); ++k) {
		const double order = std::log2(errors[k - 1] / errors[k]);
		CHECK(order == Approx(2.0).margin(0.2));
	}
}

TEST_CASE("infinite tolerance stops after one task", "[poisson]") {
	config cfg = small(16, 16);
	cfg.tolerance = INFINITY;
	const auto rep = run_poisson(cfg, exec(2));
	CHECK(rep.tasks == 1);
	CHECK(rep.converged);
}

TEST_CASE("1D configuration", "[poisson]") {
	config cfg;
	cfg.dims = 1;
	cfg.extents = {64, 1};
	cfg.tolerance = 1e-9;
	const auto a = run_poisson(cfg, exec(1));
	const auto b = run_poisson(cfg, exec(4));
	CHECK(a.converged);
	CHECK(a.solution == b.solution);
}
