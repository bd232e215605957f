#include "taskgrid/bench/harness.h"
#include "taskgrid/bench/stats.h"
#include "taskgrid/bench/timing.h"
#include "taskgrid/validation/acceptance.h"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>
#include <thread>

using namespace taskgrid;
using namespace taskgrid::bench;
using Catch::Approx;

TEST_CASE("summary statistics of small sample sets", "[bench][stats]") {
	const std::vector<double> a{1, 2, 3, 4, 100};
	const auto s = summarize(a);
	CHECK(s.median == 3);
	CHECK(s.mean == 22);
	CHECK(s.min == 1);
	CHECK(s.max == 100);
	CHECK(s.count == 5);

	const std::vector<double> flat{5, 5, 5};
	CHECK(summarize(flat).ci95_half == 0);
	CHECK(summarize(flat).mean == 5);

	std::vector<double> ten;
	for(int i = 1; i <= 10; ++i) ten.push_back(i);
	const auto t = summarize(ten);
	CHECK(t.mean == 5.5);
	CHECK(t.median == 5.5);
	CHECK(t.ci95_half == Approx(1.96 * std::sqrt(55.0 / 6.0) / std::sqrt(10.0)).epsilon(1e-15));

	const std::vector<double> one{0.25};
	CHECK(summarize(one).ci95_half == 0);
	CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("summaries match an independent exact-sum oracle", "[bench][stats][oracle]") {
	std::mt19937_64 rng(7);
	for(int set = 0; set < 100; ++set) {
		const auto n = 2 + static_cast<std::size_t>(rng() % 200);
		std::lognormal_distribution<double> dist(-5.0, 0.5 + set % 4);
		std::vector<double> x(n);
		for(auto& v : x) v = dist(rng);
		const auto s = summarize(x);
		const double mean = validation::exact_fsum(x) / static_cast<double>(n);
		std::vector<double> dev;
		for(const double v : x) dev.push_back((v - mean) * (v - mean));
		CHECK(s.mean == mean);
		CHECK(s.ci95_half == 1.96 * std::sqrt(validation::exact_fsum(dev) / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)));
		// Order independence.
		auto shuffled = x;
		std::shuffle(shuffled.begin(), shuffled.end(), rng);
		CHECK(summarize(shuffled).mean == s.mean);
		CHECK(summarize(shuffled).ci95_half == s.ci95_half);
	}
}

TEST_CASE("exact_fsum rounds correctly", "[bench][stats][oracle]") {
	CHECK(validation::exact_fsum({0.1, 0.2, 0.3}) == 0.6);
	CHECK(validation::exact_fsum({1e100, 1.0, -1e100}) == 1.0);
	CHECK(validation::exact_fsum({1.0, 1e-16, 1e-16}) == 1.0000000000000002);
	CHECK(validation::exact_fsum({}) == 0.0);
}

TEST_CASE("aggregations", "[bench][stats]") {
	const std::vector<std::vector<double>> runs{{1, 2, 3}, {10, 20, 30, 40}, {}, {5}};
	const auto pooled = summarize(runs, aggregation::pooled);
	CHECK(pooled.count == 8);
	CHECK(headline(pooled, aggregation::pooled) == pooled.mean);
	const auto med = summarize(runs, aggregation::median_of_runs);
	CHECK(med.count == 3);
	CHECK(med.median == 5); // medians 2, 25, 5
	CHECK(med.min == 2);
	CHECK(med.max == 25);
	CHECK(headline(med, aggregation::median_of_runs) == 5);
	CHECK(aggregation_for(app_kind::poisson) == aggregation::pooled);
	CHECK(aggregation_for(app_kind::hydro) == aggregation::median_of_runs);
	CHECK_THROWS_AS(summarize(std::vector<std::vector<double>>{{}, {}}, aggregation::median_of_runs), std::invalid_argument);
}

TEST_CASE("iteration times take the slowest rank's active time", "[bench][timing]") {
	using namespace std::chrono;
	const auto t0 = steady_clock::now();
	const auto sample = [&](int run, int it, int rank, int ms, int waited_ms) {
		timing_sample s;
		s.run = run;
		s.iteration = it;
		s.rank = rank;
		s.start = t0;
		s.stop = t0 + milliseconds(ms);
		s.waited = milliseconds(waited_ms);
		return s;
	};
	const std::vector<timing_sample> samples{
	    sample(0, 0, 0, 100, 0), // warmup
	    sample(0, 1, 0, 30, 10),
	    sample(0, 1, 0, 5, 0),
	    sample(0, 1, 1, 40, 30),
	    sample(1, 1, 0, 8, 0),
	    sample(1, 2, 1, 9, 1),
	};
	const auto t = iteration_times(samples, 2, 1);
	REQUIRE(t.size() == 2);
	REQUIRE(t[0].size() == 1);
	CHECK(t[0][0] == Approx(0.025)); // rank 0: 20 + 5 ms active, rank 1: 10 ms
	REQUIRE(t[1].size() == 2);
	CHECK(t[1][0] == Approx(0.008));
	CHECK(t[1][1] == Approx(0.008));
	CHECK(iteration_times(samples, 2, 0)[0].size() == 2);
}

TEST_CASE("timed tasks measure inside the task without changing the graph", "[bench][timing]") {
	using namespace std::chrono_literals;
	const auto build = [](bool timed) {
		auto rt = std::make_unique<runtime>(executor_config{executor_kind::async_dag, 2, 1});
		const auto topo = rt->add_topology(mesh_topology::decompose(std::vector<index_t>{16}, std::vector<int>{2}));
		const auto f = rt->register_field(topo, "f", element_kind::scalar());
		const auto g = rt->register_field(topo, "g", element_kind::scalar());
		rt->set_timing_epoch(3, 4);
		for(int i = 0; i < 3; ++i) {
			task_spec spec{"nap", {read_write(f), read_only(g)}, simple_body([](task_context&) { std::this_thread::sleep_for(10ms); })};
			if(timed)
				timed_task(*rt, "nap", spec);
			else
				rt->submit(spec);
			rt->submit({"touch", {read_write(g)}, simple_body([](task_context&) {})});
		}
		rt->fence();
		return rt;
	};
	const auto plain = build(false);
	const auto timed = build(true);
	CHECK(plain->graph().edges == timed->graph().edges);
	CHECK(plain->timing_samples().empty());
	const auto samples = timed->timing_samples();
	REQUIRE(samples.size() == 6);
	for(const auto& s : samples) {
		CHECK(s.run == 3);
		CHECK(s.iteration == 4);
		CHECK(s.label == "nap");
		CHECK(s.wall_seconds() >= 0.010);
		CHECK(s.active_seconds() >= 0.010);
	}
	CHECK(plain->stats().total_point_to_point() == timed->stats().total_point_to_point());
}

TEST_CASE("bench CSV round trip", "[bench][csv]") {
	bench_row r;
	r.app = "poisson";
	r.mode = "weak";
	r.executor = "async";
	r.collective = "star";
	r.ranks = 4;
	r.workers = 2;
	r.global_size = 1 << 18;
	r.per_rank_size = 1 << 16;
	r.runs = 5;
	r.metric = "iteration_time";
	r.value = 0.1234567890123;
	r.unit = "s";
	r.p2p_msgs = 1234;
	r.coll_msg_ops = 6;
	r.coll_rounds = 4;
	r.summary = summarize(std::vector<double>{0.1, 0.2, 0.3});
	bench_row bad = r;
	bad.metric = "infeasible";
	bad.value = NAN;
	bad.note = "too few cells, per rank";
	std::stringstream ss;
	write_csv(ss, {r, bad});
	const auto back = read_csv(ss);
	REQUIRE(back.size() == 2);
	CHECK(back[0].value == r.value);
	CHECK(back[0].summary.mean == r.summary.mean);
	CHECK(back[0].summary.ci95_half == r.summary.ci95_half);
	CHECK(back[0].p2p_msgs == 1234);
	CHECK(back[0].global_size == r.global_size);
	CHECK(std::isnan(back[1].value));
	CHECK(back[1].note == "too few cells; per rank");

	std::istringstream missing("app,mode,executor\npoisson,weak,async\n");
	CHECK_THROWS_WITH(read_csv(missing), Catch::Matchers::ContainsSubstring("missing column 'collective'"));
	std::istringstream empty("");
	CHECK_THROWS_AS(read_csv(empty), std::invalid_argument);
}

TEST_CASE("bench configuration points", "[bench][harness]") {
	bench_config c;
	c.app = app_kind::poisson;
	c.runs = 2;
	c.iterations = 2;
	c.poisson_sweeps = 2;
	c.size = 1024;

	SECTION("weak scaling keeps the per-rank size") {
		c.mode = mode_kind::weak;
		c.ranks = {1, 2, 4};
		const auto rows = run_benchmark(c);
		REQUIRE(rows.size() == 3);
		for(const auto& r : rows) {
			CHECK(r.metric == "iteration_time");
			CHECK(r.per_rank_size == 1024);
			CHECK(r.global_size == 1024 * r.ranks);
			CHECK(r.summary.count == 4);
			CHECK(r.value > 0);
		}
		CHECK(rows[0].p2p_msgs == 0);
		CHECK(rows[2].p2p_msgs > 0);
	}
	SECTION("strong scaling splits a fixed size") {
		c.mode = mode_kind::strong;
		c.ranks = {1, 4};
		const auto rows = run_benchmark(c);
		REQUIRE(rows.size() == 2);
		CHECK(rows[1].global_size == 1024);
		CHECK(rows[1].per_rank_size == 256);
	}
	SECTION("size sweep doubles on one rank") {
		c.mode = mode_kind::size_sweep;
		c.sweep_points = 3;
		const auto rows = run_benchmark(c);
		REQUIRE(rows.size() == 3);
		CHECK(rows[0].global_size == 1024);
		CHECK(rows[2].global_size == 4096);
		for(const auto& r : rows) CHECK(r.ranks == 1);
	}
	SECTION("non-timing columns are deterministic") {
		c.mode = mode_kind::weak;
		c.ranks = {1, 2, 4};
		c.collectives = collective_algorithm::star;
		c.executor = executor_kind::async_dag;
		const auto a = run_benchmark(c);
		const auto b = run_benchmark(c);
		REQUIRE(a.size() == b.size());
		for(std::size_t i = 0; i < a.size(); ++i) {
			CHECK(a[i].p2p_msgs == b[i].p2p_msgs);
			CHECK(a[i].coll_msg_ops == b[i].coll_msg_ops);
			CHECK(a[i].coll_rounds == b[i].coll_rounds);
			CHECK(a[i].global_size == b[i].global_size);
			CHECK(a[i].summary.count == b[i].summary.count);
		}
	}
	SECTION("an infeasible point yields a row and the rest still run") {
		c.app = app_kind::hydro_norad;
		c.mode = mode_kind::strong;
		c.ranks = {1, 64};
		c.size = 512; // 8^3: one rank is fine, 64 ranks leave 2 cells per axis against a 3-deep halo
		c.runs = 1;
		const auto rows = run_benchmark(c);
		REQUIRE(rows.size() == 2);
		CHECK(rows[0].metric == "iteration_time");
		CHECK(rows[1].metric == "infeasible");
		CHECK(std::isnan(rows[1].value));
		CHECK_FALSE(rows[1].note.empty());
	}
	SECTION("invalid configurations") {
		c.ranks = {2, 1};
		CHECK_THROWS_AS(run_benchmark(c), std::invalid_argument);
		c.ranks = {1};
		c.runs = 0;
		CHECK_THROWS_AS(run_benchmark(c), std::invalid_argument);
		CHECK_THROWS_AS(parse_app("fluid"), std::invalid_argument);
		CHECK(parse_mode("strong") == mode_kind::strong);
	}
}
