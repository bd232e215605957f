#include "taskgrid/cell_loops.h"
#include "taskgrid/runtime.h"

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

using namespace taskgrid;

namespace {

std::vector<edge> edges_for(const std::vector<std::vector<field_access>>& program) {
	access_history h;
	std::vector<edge> all;
	for(std::size_t t = 0; t < program.size(); ++t) {
		const auto e = infer_edges(h, t + 1, program[t]);
		all.insert(all.end(), e.begin(), e.end());
		record_accesses(h, t + 1, program[t]);
	}
	return all;
}

const field_handle F{0};
const field_handle G{1};

} // namespace

TEST_CASE("infer_edges examples", "[dependencies]") {
	CHECK(edges_for({{read_write(F)}, {read_only(F)}}) == std::vector<edge>{{1, 2}});
	CHECK(edges_for({{read_only(F)}}).empty());
	// The writer after two readers depends on the readers only (the writer edge is implied).
	CHECK(edges_for({{read_write(F)}, {read_only(F)}, {read_only(F)}, {write_discard(F)}}) == std::vector<edge>{{1, 2}, {1, 3}, {2, 4}, {3, 4}});
	// Consecutive writers chain directly.
	CHECK(edges_for({{read_write(F)}, {write_discard(F)}, {read_write(F)}}) == std::vector<edge>{{1, 2}, {2, 3}});
	// Readers of an unwritten field are unordered, and a later writer waits for both.
	CHECK(edges_for({{read_only(F)}, {read_only(F)}, {read_write(F)}}) == std::vector<edge>{{1, 3}, {2, 3}});
	// Edges through several fields are deduplicated.
	CHECK(edges_for({{read_write(F), read_write(G)}, {read_only(F), read_only(G)}}) == std::vector<edge>{{1, 2}});
}

TEST_CASE("edges are consistent with the serial order over all interleavings", "[dependencies][property]") {
	// Oracle: two tasks conflict iff they share a field and at least one writes. Every conflicting
	// pair must be ordered by a path in the inferred graph, and every edge must join a conflicting pair.
	std::mt19937 rng(11);
	for(int trial = 0; trial < 300; ++trial) {
		const int n = 2 + static_cast<int>(rng() % 9);
		const int fields = 1 + static_cast<int>(rng() % 3);
		std::vector<std::vector<field_access>> program(n);
		for(auto& accesses : program) {
			for(int f = 0; f < fields; ++f) {
				if(rng() % 3 == 0) continue;
				accesses.push_back({field_handle{static_cast<std::uint32_t>(f)}, static_cast<privilege>(rng() % 3)});
			}
		}
		const auto edges = edges_for(program);
		std::vector<std::vector<bool>> reach(n + 1, std::vector<bool>(n + 1, false));
		for(const auto& e : edges) {
			REQUIRE(e.from < e.to);
			reach[e.from][e.to] = true;
		}
		for(int k = 1; k <= n; ++k)
			for(int i = 1; i <= n; ++i)
				for(int j = 1; j <= n; ++j)
					if(reach[i][k] && reach[k][j]) reach[i][j] = true;
		const auto conflict = [&](int a, int b) {
			for(const auto& x : program[a - 1])
				for(const auto& y : program[b - 1])
					if(x.field == y.field && (writes(x.priv) || writes(y.priv))) return true;
			return false;
		};
		for(int a = 1; a <= n; ++a)
			for(int b = a + 1; b <= n; ++b)
				if(conflict(a, b)) REQUIRE(reach[a][b]);
		for(const auto& e : edges) REQUIRE(conflict(static_cast<int>(e.from), static_cast<int>(e.to)));
		REQUIRE(std::set<edge>(edges.begin(), edges.end()).size() == edges.size());
	}
}

namespace {

struct random_program {
	int fields;
	std::vector<std::vector<field_access>> tasks;
};

random_program make_program(std::mt19937& rng) {
	random_program p;
	p.fields = 1 + static_cast<int>(rng() % 3);
	const int n = 2 + static_cast<int>(rng() % 9);
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
	std::vector<execution_event> log;
	graph_snapshot graph;
};

program_outcome execute(const random_program& p, executor_config cfg) {
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
			// Each written cell mixes its own value with the 5-point neighborhood of every accessed field.
			const auto& b = ctx.block();
			std::vector<double> acc(static_cast<std::size_t>(b.padded_cells()), salt);
			for(const auto& a : accesses) {
				if(a.priv == privilege::write_discard) continue;
				auto v = ctx.read(a.field);
				for_each_cell(ctx, [&](index_t i, index_t j, index_t) {
					acc[static_cast<std::size_t>(b.linear(i, j))] += 0.5 * v(i, j) + 0.125 * (v(i - 1, j) + v(i + 1, j) + v(i, j - 1) + v(i, j + 1));
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
	program_outcome out;
	rt.fence();
	for(const auto h : handles) out.fields.push_back(rt.gather(h));
	for(const auto& r : results) out.reductions.push_back(r.get());
	out.log = rt.execution_log();
	out.graph = rt.graph();
	return out;
}

} // namespace

TEST_CASE("serial equivalence over random programs", "[dependencies][property]") {
	std::mt19937 rng(2024);
	for(int trial = 0; trial < 40; ++trial) {
		const auto p = make_program(rng);
		const auto reference = execute(p, {executor_kind::sequential, 1, 1, collective_algorithm::binomial_tree});
		for(const int ranks : {1, 2, 4}) {
			for(const int workers : {1, 3}) {
				for(const auto kind : {executor_kind::sequential, executor_kind::async_dag}) {
					const auto got = execute(p, {kind, ranks, workers, collective_algorithm::binomial_tree});
					REQUIRE(got.fields == reference.fields);
					REQUIRE(got.reductions == reference.reductions);

					// Edge soundness: on every rank a task starts only after its predecessors finished there.
					std::map<std::pair<task_id, int>, execution_event> by_task;
					for(const auto& e : got.log) by_task[{e.task, e.rank}] = e;
					for(const auto& e : got.graph.edges) {
						for(int r = 0; r < ranks; ++r) REQUIRE(by_task.at({e.from, r}).end_seq < by_task.at({e.to, r}).start_seq);
					}
				}
			}
		}
	}
}

TEST_CASE("readers commute", "[dependencies][property]") {
	std::mt19937 rng(5);
	const auto run = [](const std::vector<int>& order, executor_kind kind) {
		runtime rt({kind, 2, 2, collective_algorithm::binomial_tree});
		const auto topo = rt.add_topology(mesh_topology::decompose(std::vector<index_t>{16}, std::vector<int>{2}));
		const auto f = rt.register_field(topo, "f", element_kind::scalar());
		std::vector<field_handle> outs;
		for(int r = 0; r < 4; ++r) outs.push_back(rt.register_field(topo, "out" + std::to_string(r), element_kind::scalar()));
		rt.submit({"init", {write_discard(f)}, simple_body([f](task_context& ctx) {
			           auto v = ctx.write(f);
			           for_each_cell(ctx, [&](index_t i, index_t, index_t) { v(i) = std::sin(static_cast<double>(ctx.block().owned[0].begin + i)); });
		           })});
		for(const int r : order) {
			rt.submit({"reader", {read_only(f), read_write(outs[r], false)}, simple_body([f, o = outs[r], r](task_context& ctx) {
				           auto in = ctx.read(f);
				           auto out = ctx.write(o);
				           for_each_cell(ctx, [&](index_t i, index_t, index_t) { out(i) = in(i - 1) * r + in(i + 1); });
			           })});
		}
		std::vector<std::vector<double>> result{rt.gather(f)};
		for(const auto o : outs) result.push_back(rt.gather(o));
		return result;
	};
	std::vector<int> order{0, 1, 2, 3};
	const auto reference = run(order, executor_kind::sequential);
	for(int trial = 0; trial < 6; ++trial) {
		std::shuffle(order.begin(), order.end(), rng);
		CHECK(run(order, executor_kind::sequential) == reference);
		CHECK(run(order, executor_kind::async_dag) == reference);
	}
}
