#include "taskgrid/collectives.h"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <random>

using namespace taskgrid;

namespace {
int ceil_log2(int p) { return p <= 1 ? 0 : std::bit_width(static_cast<unsigned>(p - 1)); }
} // namespace

TEST_CASE("allreduce of rank ids sums to 6 on four ranks", "[collectives]") {
	for(const auto alg : {collective_algorithm::star, collective_algorithm::binomial_tree}) {
		transport t(4);
		const std::vector<double> in{0, 1, 2, 3};
		const auto out = allreduce_all(t, in, reduce_op::sum, alg);
		CHECK(out == std::vector<double>(4, 6.0));
		CHECK(t.pending_messages() == 0);
	}
}

TEST_CASE("star allreduce message counts", "[collectives]") {
	for(const int p : {2, 4, 8, 16}) {
		transport t(p);
		std::vector<double> in(p, 1.0);
		allreduce_all(t, in, reduce_op::sum, collective_algorithm::star);
		const auto s = t.stats();
		CHECK(s.per_rank[0].collective_message_ops == static_cast<std::uint64_t>(2 * (p - 1)));
		CHECK(s.per_rank[0].collective_rounds == static_cast<std::uint64_t>(2 * (p - 1)));
		CHECK(s.total_collective_messages() == static_cast<std::uint64_t>(2 * (p - 1)));
		CHECK(s.total_point_to_point() == 0);
	}
	transport t4(4);
	allreduce_all(t4, std::vector<double>{0, 1, 2, 3}, reduce_op::sum, collective_algorithm::star);
	CHECK(t4.stats().total_collective_messages() == 6);
	transport t8(8);
	allreduce_all(t8, std::vector<double>(8, 0.0), reduce_op::max, collective_algorithm::star);
	CHECK(t8.stats().per_rank[0].collective_message_ops == 14);
}

TEST_CASE("binomial tree rounds are logarithmic", "[collectives]") {
	for(const int p : {1, 2, 3, 4, 5, 7, 8, 16}) {
		transport t(p);
		allreduce_all(t, std::vector<double>(p, 1.0), reduce_op::sum, collective_algorithm::binomial_tree);
		const auto s = t.stats();
		CHECK(s.max_collective_rounds() <= static_cast<std::uint64_t>(2 * ceil_log2(p)));
		CHECK(s.total_collective_messages() == static_cast<std::uint64_t>(2 * (p - 1)));
	}
	transport t8(8);
	allreduce_all(t8, std::vector<double>(8, 1.0), reduce_op::sum, collective_algorithm::binomial_tree);
	CHECK(t8.stats().max_collective_rounds() == 6);
}

TEST_CASE("star rank-0 rounds exceed tree rounds for P >= 4", "[collectives][property]") {
	for(int p = 4; p <= 32; ++p) {
		transport star(p), tree(p);
		allreduce_all(star, std::vector<double>(p, 1.0), reduce_op::sum, collective_algorithm::star);
		allreduce_all(tree, std::vector<double>(p, 1.0), reduce_op::sum, collective_algorithm::binomial_tree);
		CHECK(star.stats().per_rank[0].collective_rounds > tree.stats().max_collective_rounds());
	}
}

TEST_CASE("allreduce matches a direct fold", "[collectives][property]") {
	std::mt19937_64 rng(7);
	std::normal_distribution<double> dist(0.0, 1e3);
	for(const int p : {1, 2, 3, 4, 8, 16}) {
		for(const auto op : {reduce_op::sum, reduce_op::max, reduce_op::min}) {
			std::vector<double> in(p);
			for(auto& x : in) x = dist(rng);
			double expect = in[0];
			for(int r = 1; r < p; ++r) {
				expect = op == reduce_op::sum ? expect + in[r] : op == reduce_op::max ? std::max(expect, in[r]) : std::min(expect, in[r]);
			}
			for(const auto alg : {collective_algorithm::star, collective_algorithm::binomial_tree}) {
				transport t(p);
				const auto out = allreduce_all(t, in, op, alg);
				for(const double v : out) CHECK(v == expect);
			}
		}
	}
}

TEST_CASE("allreduce stats are deterministic and resettable", "[collectives]") {
	transport a(5), b(5);
	for(int rep = 0; rep < 3; ++rep) {
		allreduce_all(a, std::vector<double>(5, 1.0), reduce_op::sum, collective_algorithm::binomial_tree, rep);
		allreduce_all(b, std::vector<double>(5, 1.0), reduce_op::sum, collective_algorithm::binomial_tree, rep);
	}
	CHECK(a.stats() == b.stats());
	a.reset_stats();
	for(const auto& r : a.stats().per_rank) CHECK(r == rank_counters{});
	CHECK(transport(3).stats().total_collective_message_ops() == 0);
}

TEST_CASE("allreduce rejects mismatched participation", "[collectives]") {
	transport t(4);
	CHECK_THROWS_AS(allreduce_all(t, std::vector<double>{1, 2, 3}, reduce_op::sum, collective_algorithm::star), std::invalid_argument);
	CHECK_THROWS_AS(parse_collective_algorithm("ring"), std::invalid_argument);
}
