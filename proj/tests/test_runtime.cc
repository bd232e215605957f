#include "taskgrid/cell_loops.h"
#include "taskgrid/runtime.h"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <thread>

using namespace taskgrid;
using namespace std::chrono_literals;

namespace {

executor_config config(executor_kind kind, int ranks, int workers = 1, collective_algorithm alg = collective_algorithm::binomial_tree) {
	return executor_config{kind, ranks, workers, alg};
}

std::shared_ptr<const mesh_topology> grid(runtime& rt, std::vector<index_t> ext, int halo = 1, bool periodic = false) {
	const auto colors = balanced_color_grid(rt.config().ranks, static_cast<int>(ext.size()));
	const bool per[3] = {periodic, periodic, periodic};
	return rt.add_topology(mesh_topology::decompose(ext, std::span(colors.data(), ext.size()), halo, std::span(per, ext.size())));
}

const auto both_executors = {executor_kind::sequential, executor_kind::async_dag};

} // namespace

TEST_CASE("register_field allocates zeroed storage including halo", "[runtime]") {
	runtime rt(config(executor_kind::sequential, 4));
	const auto topo = grid(rt, {8, 8});
	const auto p = rt.register_field(topo, "pressure", element_kind::scalar());
	for(int c = 0; c < 4; ++c) {
		const auto& s = rt.storage(p, c);
		CHECK(s.size() == 6u * 6u);
		CHECK(std::all_of(s.begin(), s.end(), [](double v) { return v == 0.0; }));
	}
	CHECK_THROWS_AS(rt.register_field(topo, "pressure", element_kind::scalar()), std::invalid_argument);
	const auto u = rt.register_field(topo, "state", element_kind::vector(4));
	CHECK(rt.components(u) == 4);
	CHECK(rt.storage(u, 0).size() == 4u * 36u);
	CHECK(u.id != p.id);
}

TEST_CASE("submit rejects unknown fields and duplicate accesses", "[runtime]") {
	runtime rt(config(executor_kind::sequential, 1));
	const auto topo = grid(rt, {4});
	const auto f = rt.register_field(topo, "f", element_kind::scalar());
	CHECK_THROWS_AS(rt.submit({"bad", {read_only(field_handle{99})}, simple_body([](task_context&) {})}), std::invalid_argument);
	CHECK_THROWS_AS(rt.submit({"dup", {read_only(f), read_write(f)}, simple_body([](task_context&) {})}), std::invalid_argument);
	CHECK_THROWS_AS(rt.add_topology(mesh_topology::decompose(std::vector<index_t>{4}, std::vector<int>{2})), std::invalid_argument);
}

TEST_CASE("for_each_cell writes owned cells only", "[runtime]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 1, 2));
		const auto topo = grid(rt, {4, 4});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		rt.submit({"ones", {write_discard(f)}, simple_body([f](task_context& ctx) {
			           auto v = ctx.write(f);
			           for_each_cell(ctx, [&](index_t i, index_t j, index_t k) { v(i, j, k) = 1.0; });
		           })});
		const auto& s = rt.storage(f, 0);
		CHECK(std::count(s.begin(), s.end(), 1.0) == 16);
		CHECK(std::count(s.begin(), s.end(), 0.0) == 36 - 16);
	}
}

TEST_CASE("for_each_cell doubles values and sum reductions ignore the worker count", "[runtime]") {
	for(const int workers : {1, 2, 3, 4}) {
		runtime rt(config(executor_kind::async_dag, 1, workers));
		const auto topo = grid(rt, {8});
		const auto in = rt.register_field(topo, "in", element_kind::scalar());
		const auto out = rt.register_field(topo, "out", element_kind::scalar());
		rt.submit({"fill", {write_discard(in)}, simple_body([in](task_context& ctx) {
			           auto v = ctx.write(in);
			           for_each_cell(ctx, [&](index_t i, index_t, index_t) { v(i) = static_cast<double>(i); });
		           })});
		rt.submit({"double", {read_only(in, false), write_discard(out)}, simple_body([in, out](task_context& ctx) {
			           auto a = ctx.read(in);
			           auto b = ctx.write(out);
			           for_each_cell(ctx, [&](index_t i, index_t, index_t) { b(i) = 2 * a(i); });
		           })});
		CHECK(rt.gather(out) == std::vector<double>{0, 2, 4, 6, 8, 10, 12, 14});

		const auto t2 = grid(rt, {10, 10});
		const auto g = rt.register_field(t2, "g", element_kind::scalar());
		task_spec count{"count", {read_only(g, false)},
		    simple_body([](task_context& ctx) { ctx.contribute(sum_cells(ctx, [](index_t, index_t, index_t) { return 1.0; })); })};
		count.reduce = reduction::sum;
		CHECK(rt.submit(count).get() == 100.0);
	}
}

TEST_CASE("undeclared field access is a privilege error", "[runtime]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 2));
		const auto topo = grid(rt, {8});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		const auto g = rt.register_field(topo, "g", element_kind::scalar());
		auto r = rt.submit({"sneaky", {read_only(f)}, simple_body([g](task_context& ctx) { ctx.read(g); })});
		try {
			r.get();
			FAIL("expected failure");
		} catch(const task_failure& e) {
			CHECK(e.failing_task() == r.id());
			CHECK(std::string(e.what()).find("did not declare") != std::string::npos);
		}
		CHECK_THROWS_AS(rt.fence(), task_failure);
	}
	runtime rt(config(executor_kind::sequential, 1));
	const auto topo = grid(rt, {8});
	const auto f = rt.register_field(topo, "f", element_kind::scalar());
	auto r = rt.submit({"ro-write", {read_only(f)}, simple_body([f](task_context& ctx) { ctx.write(f); })});
	CHECK_THROWS_AS(r.get(), task_failure);
}

TEST_CASE("task failure names the failing task and later tasks report it", "[runtime]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 3));
		const auto topo = grid(rt, {9});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		rt.submit({"ok", {read_write(f)}, simple_body([](task_context&) {})});
		auto bad = rt.submit({"boom", {read_write(f)}, simple_body([](task_context& ctx) {
			                      if(ctx.color() == 1) throw std::runtime_error("kaboom");
		                      })});
		auto after = rt.submit({"after", {read_only(f)}, simple_body([](task_context&) {})});
		try {
			rt.fence();
			FAIL("expected failure");
		} catch(const task_failure& e) {
			CHECK(e.failing_task() == bad.id());
			CHECK(std::string(e.what()).find("kaboom") != std::string::npos);
		}
		CHECK_THROWS_AS(after.get(), task_failure);
	}
}

TEST_CASE("a rank failing while others wait in a collective does not hang", "[runtime]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 4));
		const auto topo = grid(rt, {8});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		auto r = rt.submit({"half", {read_write(f)}, [](task_context& ctx) -> rank_task<void> {
			                    if(ctx.color() == 2) throw std::runtime_error("rank 2 gave up");
			                    co_await ctx.allreduce(1.0, reduce_op::sum);
		                    }});
		try {
			r.get();
			FAIL("expected failure");
		} catch(const task_failure& e) {
			CHECK(std::string(e.what()).find("rank 2 gave up") != std::string::npos);
		}
	}
}

TEST_CASE("mismatched collective calls are detected", "[runtime]") {
	for(const auto kind : both_executors) {
		for(const auto alg : {collective_algorithm::star, collective_algorithm::binomial_tree}) {
			runtime rt(config(kind, 4, 1, alg));
			const auto topo = grid(rt, {8});
			const auto f = rt.register_field(topo, "f", element_kind::scalar());
			auto r = rt.submit({"mismatch", {read_write(f)},
			    [](task_context& ctx) -> rank_task<void> { co_await ctx.allreduce(1.0, ctx.color() == 3 ? reduce_op::max : reduce_op::sum); }});
			CHECK_THROWS_WITH(r.get(), Catch::Matchers::ContainsSubstring("mismatched collective"));
		}
	}
}

TEST_CASE("a deadlocked task is reported instead of hanging the sequential executor", "[runtime]") {
	runtime rt(config(executor_kind::sequential, 2));
	const auto topo = grid(rt, {8});
	const auto f = rt.register_field(topo, "f", element_kind::scalar());
	auto r = rt.submit({"wait forever", {read_write(f)}, [](task_context& ctx) -> rank_task<void> {
		                    if(ctx.color() == 0) co_await ctx.allreduce(1.0, reduce_op::sum);
	                    }});
	CHECK_THROWS_WITH(r.get(), Catch::Matchers::ContainsSubstring("deadlock"));
}

TEST_CASE("task results resolve once and cache", "[runtime]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 4));
		const auto topo = grid(rt, {8});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		task_spec s{"rank sum", {read_only(f, false)}, simple_body([](task_context& ctx) { ctx.contribute(ctx.color()); })};
		s.reduce = reduction::sum;
		auto r = rt.submit(s);
		CHECK(r.get() == 6.0);
		CHECK(r.ready());
		CHECK(r.get() == 6.0);
		s.reduce = reduction::max;
		CHECK(rt.submit(s).get() == 3.0);
		s.reduce = reduction::min;
		CHECK(rt.submit(s).get() == 0.0);
		task_spec wide{"wide", {read_only(f, false)}, simple_body([](task_context& ctx) {
			               ctx.contribute(1.0, 0);
			               ctx.contribute(ctx.color() * 10.0, 1);
		               })};
		wide.reduce = reduction::sum;
		wide.reduce_width = 2;
		CHECK(rt.submit(wide).values() == std::vector<double>{4.0, 60.0});
		task_spec none{"plain", {read_only(f, false)}, simple_body([](task_context&) {})};
		CHECK(rt.submit(none).get() == 0.0);
	}
}

TEST_CASE("ghost exchange fills ghosts with owner values", "[runtime][exchange]") {
	for(const auto kind : both_executors) {
		SECTION(std::string(to_string(kind))) {
			SECTION("1D periodic two ranks") {
				runtime rt(config(kind, 2));
				const auto topo = grid(rt, {8}, 1, true);
				const auto f = rt.register_field(topo, "f", element_kind::scalar());
				rt.submit({"fill", {write_discard(f)}, simple_body([f](task_context& ctx) {
					           auto v = ctx.write(f);
					           for_each_cell(ctx, [&](index_t i, index_t, index_t) { v(i) = static_cast<double>(ctx.block().owned[0].begin + i); });
				           })});
				std::vector<double> ghosts(4);
				rt.submit({"look", {read_only(f)}, simple_body([f, &ghosts](task_context& ctx) {
					           auto v = ctx.read(f);
					           ghosts[2 * ctx.color()] = v(-1);
					           ghosts[2 * ctx.color() + 1] = v(4);
				           })});
				rt.fence();
				CHECK(ghosts == std::vector<double>{7, 4, 3, 0});
				CHECK(rt.stats().total_point_to_point() == 4);
			}
			SECTION("owner writes 42") {
				runtime rt(config(kind, 2));
				const auto topo = grid(rt, {4});
				const auto f = rt.register_field(topo, "f", element_kind::scalar());
				rt.submit({"set", {read_write(f, false)}, simple_body([f](task_context& ctx) {
					           if(ctx.color() == 1) ctx.write(f)(0) = 42;
				           })});
				double seen = 0;
				rt.submit({"read", {read_only(f)}, simple_body([f, &seen](task_context& ctx) {
					           if(ctx.color() == 0) seen = ctx.read(f)(2);
				           })});
				rt.fence();
				CHECK(seen == 42);
			}
		}
	}
}

TEST_CASE("ghost exchange brute-force check over random fields", "[runtime][exchange][property]") {
	std::mt19937 rng(3);
	for(int trial = 0; trial < 20; ++trial) {
		const int dims = 1 + static_cast<int>(rng() % 3);
		const int ranks = 1 + static_cast<int>(rng() % 6);
		const int halo = 1 + static_cast<int>(rng() % 2);
		const bool periodic = rng() % 2;
		const int comps = 1 + static_cast<int>(rng() % 2);
		const auto kind = rng() % 2 ? executor_kind::sequential : executor_kind::async_dag;
		std::vector<index_t> ext(dims);
		for(auto& e : ext) e = 6 + rng() % 5;
		runtime rt(config(kind, ranks));
		std::shared_ptr<const mesh_topology> topo;
		try {
			topo = grid(rt, ext, halo, periodic);
		} catch(const std::invalid_argument&) {
			continue; // blocks thinner than the halo
		}
		const auto f = rt.register_field(topo, "f", element_kind::vector(comps));
		const auto value = [](int c, index_t gi, index_t gj, index_t gk) { return c * 1e6 + gi * 1e4 + gj * 1e2 + gk; };
		rt.submit({"fill", {write_discard(f)}, simple_body([&](task_context& ctx) {
			           auto v = ctx.write(f);
			           const auto& b = ctx.block();
			           for(int c = 0; c < comps; ++c)
				           for_each_cell(ctx, [&](index_t i, index_t j, index_t k) {
					           const auto g = b.local_to_global({i, j, k});
					           v.at(c, i, j, k) = value(c, g[0], g[1], g[2]);
				           });
		           })});
		rt.submit({"consume", {read_only(f)}, simple_body([](task_context&) {})});
		rt.fence();
		std::size_t transfers = topo->plan().transfers.size();
		CHECK(rt.stats().total_point_to_point() == transfers);
		for(int color = 0; color < ranks; ++color) {
			const auto b = topo->block(color);
			const field_view<const double> v(rt.storage(f, color).data(), &b, comps);
			for(int a = 0; a < dims; ++a)
				for(int s = 0; s < 2; ++s) {
					if(!b.ghost[a][s]) continue;
					const auto& g = *b.ghost[a][s];
					std::array<index_t, 3> lo{0, 0, 0}, hi{1, 1, 1};
					for(int d = 0; d < dims; ++d) hi[d] = b.owned[d].size();
					lo[a] = g.begin - b.owned[a].begin;
					hi[a] = g.end - b.owned[a].begin;
					for(int c = 0; c < comps; ++c)
						for(index_t k = lo[2]; k < hi[2]; ++k)
							for(index_t j = lo[1]; j < hi[1]; ++j)
								for(index_t i = lo[0]; i < hi[0]; ++i) {
									auto gl = b.local_to_global({i, j, k});
									for(int d = 0; d < dims; ++d) gl[d] = topo->wrap(d, gl[d]);
									REQUIRE(v.at(c, i, j, k) == value(c, gl[0], gl[1], gl[2]));
								}
				}
		}
	}
}

TEST_CASE("exchanges are inserted only when ghosts are stale", "[runtime][exchange]") {
	runtime rt(config(executor_kind::sequential, 2));
	const auto topo = grid(rt, {8});
	const auto f = rt.register_field(topo, "f", element_kind::scalar());
	const auto noop = simple_body([](task_context&) {});
	rt.submit({"w1", {read_write(f)}, noop}); // reads ghosts, but nothing was written yet
	rt.submit({"r1", {read_only(f)}, noop}); // stale after w1 → exchange
	rt.submit({"r2", {read_only(f)}, noop}); // still fresh
	rt.submit({"wd", {write_discard(f)}, noop}); // never exchanges
	rt.submit({"pointwise", {read_only(f, false)}, noop});
	rt.submit({"r3", {read_only(f)}, noop}); // stale after wd → exchange
	rt.fence();
	int exchanges = 0;
	for(const auto& [id, label] : rt.graph().nodes) exchanges += label.starts_with("ghost_exchange") ? 1 : 0;
	CHECK(exchanges == 2);
	CHECK(rt.stats().total_point_to_point() == 2 * 2);
}

TEST_CASE("sequential executor runs tasks in submission order without overlap", "[runtime][executor]") {
	runtime rt(config(executor_kind::sequential, 3));
	const auto topo = grid(rt, {9});
	const auto a = rt.register_field(topo, "a", element_kind::scalar());
	const auto b = rt.register_field(topo, "b", element_kind::scalar());
	const auto noop = simple_body([](task_context&) {});
	std::vector<task_id> ids;
	ids.push_back(rt.submit({"a1", {read_write(a, false)}, noop}).id());
	ids.push_back(rt.submit({"b1", {read_write(b, false)}, noop}).id());
	ids.push_back(rt.submit({"a2", {read_write(a, false)}, noop}).id());
	ids.push_back(rt.submit({"b2", {read_write(b, false)}, noop}).id());
	rt.fence();
	const auto log = rt.execution_log();
	REQUIRE(log.size() == 12);
	std::uint64_t prev_end = 0;
	for(std::size_t t = 0; t < ids.size(); ++t) {
		std::uint64_t first_start = UINT64_MAX, last_end = 0;
		for(const auto& e : log) {
			if(e.task != ids[t]) continue;
			first_start = std::min(first_start, e.start_seq);
			last_end = std::max(last_end, e.end_seq);
		}
		CHECK(first_start > prev_end); // every rank finished the previous task before this one began
		prev_end = last_end;
	}
}

TEST_CASE("chains complete in order and waiting on the tail implies predecessors ran", "[runtime][executor]") {
	for(const auto kind : both_executors) {
		runtime rt(config(kind, 2, 2));
		const auto topo = grid(rt, {8});
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		std::vector<task_result> results;
		for(int t = 0; t < 10; ++t) {
			results.push_back(rt.submit({"step" + std::to_string(t), {read_write(f, false)}, simple_body([f, t](task_context& ctx) {
				                             auto v = ctx.write(f);
				                             REQUIRE(v(0) == t);
				                             v(0) = t + 1;
			                             })}));
		}
		results.back().get();
		for(const auto& r : results) CHECK(r.ready());
		const auto log = rt.execution_log();
		for(int rank = 0; rank < 2; ++rank) {
			std::vector<task_id> order;
			for(const auto& e : log)
				if(e.rank == rank) order.push_back(e.task);
			CHECK(std::is_sorted(order.begin(), order.end()));
		}
	}
}

TEST_CASE("async executor overlaps independent chains", "[runtime][executor]") {
	const auto build = [](runtime& rt) {
		const auto topo = grid(rt, {4});
		const auto a = rt.register_field(topo, "a", element_kind::scalar());
		const auto b = rt.register_field(topo, "b", element_kind::scalar());
		const auto nap = simple_body([](task_context&) { std::this_thread::sleep_for(50ms); });
		for(int t = 0; t < 4; ++t) {
			rt.submit({"a", {read_write(a, false)}, nap});
			rt.submit({"b", {read_write(b, false)}, nap});
		}
	};
	const auto makespan = [&](executor_kind kind) {
		runtime rt(config(kind, 1, 2));
		const auto start = std::chrono::steady_clock::now();
		build(rt);
		rt.fence();
		return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
	};
	const double seq = makespan(executor_kind::sequential);
	const double async = makespan(executor_kind::async_dag);
	CHECK(seq >= 0.39);
	CHECK(async < 0.75 * seq);
}

TEST_CASE("comm stats start at zero and are deterministic", "[runtime]") {
	const auto prog = [](runtime& rt) {
		const auto topo = grid(rt, {16, 16}, 1, true);
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		for(int it = 0; it < 3; ++it) {
			rt.submit({"w", {read_write(f)}, [](task_context& ctx) -> rank_task<void> { co_await ctx.allreduce(1.0, reduce_op::max); }});
		}
	};
	executor_config cfg{executor_kind::sequential, 4, 1, collective_algorithm::star};
	const auto s1 = run_sequential(prog, cfg);
	const auto s2 = run_sequential(prog, cfg);
	const auto s3 = run_async(prog, cfg);
	CHECK(s1 == s2);
	CHECK(s1 == s3);
	CHECK(s1.total_collective_messages() == 3 * 6);
	CHECK(runtime(cfg).stats().total_point_to_point() == 0);
}
