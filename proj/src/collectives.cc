#include "taskgrid/collectives.h"

#include <algorithm>
#include <bit>
#include <deque>
#include <stdexcept>
#include <string>

namespace taskgrid {

std::string_view to_string(reduce_op op) {
	switch(op) {
	case reduce_op::sum:
		return "sum";
	case reduce_op::max:
		return "max";
	case reduce_op::min:
		return "min";
	}
	return "?";
}

std::string_view to_string(collective_algorithm a) { return a == collective_algorithm::star ? "star" : "binomial_tree"; }

collective_algorithm parse_collective_algorithm(std::string_view s) {
	if(s == "star") return collective_algorithm::star;
	if(s == "binomial_tree" || s == "tree" || s == "binomial") return collective_algorithm::binomial_tree;
	throw std::invalid_argument("unknown collective algorithm '" + std::string(s) + "' (expected star or binomial_tree)");
}

fold_fn elementwise_fold(reduce_op op) {
	return [op](const std::vector<payload>& by_rank) {
		payload acc = by_rank.front();
		for(std::size_t r = 1; r < by_rank.size(); ++r) {
			for(std::size_t i = 0; i < acc.size(); ++i) {
				const double v = by_rank[r][i];
				switch(op) {
				case reduce_op::sum:
					acc[i] = acc[i] + v;
					break;
				case reduce_op::max:
					acc[i] = std::max(acc[i], v);
					break;
				case reduce_op::min:
					acc[i] = std::min(acc[i], v);
					break;
				}
			}
		}
		return acc;
	};
}

fold_fn exact_sum_fold() {
	return [](const std::vector<payload>& by_rank) {
		const std::size_t width = by_rank.front().size() / exact_sum::encoded_size;
		payload out;
		out.reserve(by_rank.front().size());
		for(std::size_t e = 0; e < width; ++e) {
			exact_sum acc;
			for(const auto& contribution : by_rank) {
				acc.merge(exact_sum::decode(std::span(contribution).subspan(e * exact_sum::encoded_size, exact_sum::encoded_size)));
			}
			const auto enc = acc.encode();
			out.insert(out.end(), enc.begin(), enc.end());
		}
		return out;
	};
}

namespace {

	struct entry {
		int rank;
		int op_code;
		payload data;
	};

	payload pack(const std::vector<entry>& entries) {
		payload p;
		p.push_back(static_cast<double>(entries.size()));
		for(const auto& e : entries) {
			p.push_back(e.rank);
			p.push_back(e.op_code);
			p.push_back(static_cast<double>(e.data.size()));
			p.insert(p.end(), e.data.begin(), e.data.end());
		}
		return p;
	}

	void unpack_into(const payload& p, std::vector<entry>& out) {
		std::size_t pos = 0;
		const auto n = static_cast<std::size_t>(p.at(pos++));
		for(std::size_t i = 0; i < n; ++i) {
			entry e;
			e.rank = static_cast<int>(p.at(pos++));
			e.op_code = static_cast<int>(p.at(pos++));
			const auto len = static_cast<std::size_t>(p.at(pos++));
			e.data.assign(p.begin() + static_cast<std::ptrdiff_t>(pos), p.begin() + static_cast<std::ptrdiff_t>(pos + len));
			pos += len;
			out.push_back(std::move(e));
		}
	}

	payload fold_at_root(std::vector<entry>& entries, int ranks, const fold_fn& fold) {
		std::sort(entries.begin(), entries.end(), [](const entry& a, const entry& b) { return a.rank < b.rank; });
		if(static_cast<int>(entries.size()) != ranks) {
			throw std::logic_error(
			    "allreduce: gathered " + std::to_string(entries.size()) + " contributions from " + std::to_string(ranks) + " ranks");
		}
		std::vector<payload> by_rank;
		by_rank.reserve(entries.size());
		for(const auto& e : entries) {
			if(e.op_code != entries.front().op_code || e.data.size() != entries.front().data.size()) {
				throw std::logic_error("allreduce: mismatched collective call on rank " + std::to_string(e.rank));
			}
			by_rank.push_back(e.data);
		}
		return fold(by_rank);
	}

	constexpr std::uint32_t sub_gather = 0;
	constexpr std::uint32_t sub_result = 1;

} // namespace

rank_task<payload> allreduce(rank_channel& ch, payload contribution, fold_fn fold, collective_algorithm algorithm, int op_code) {
	const auto seq = ch.next_operation();
	const int ranks = ch.ranks();
	const int me = ch.rank();
	auto& net = ch.net();

	std::vector<entry> entries;
	entries.push_back(entry{me, op_code, std::move(contribution)});
	if(ranks == 1) co_return fold_at_root(entries, ranks, fold);

	const auto send = [&](int dst, std::uint32_t sub, payload p) {
		ch.send(dst, ch.tag(seq, sub), std::move(p), message_kind::collective);
		net.count_collective_step(me);
	};

	payload result;
	if(algorithm == collective_algorithm::star) {
		if(me == 0) {
			for(int src = 1; src < ranks; ++src) {
				auto msg = co_await ch.receive(src, ch.tag(seq, sub_gather));
				net.count_collective_step(me);
				unpack_into(msg, entries);
			}
			result = fold_at_root(entries, ranks, fold);
			for(int dst = 1; dst < ranks; ++dst) {
				send(dst, sub_result, result);
			}
		} else {
			send(0, sub_gather, pack(entries));
			result = co_await ch.receive(0, ch.tag(seq, sub_result));
			net.count_collective_step(me);
		}
		co_return result;
	}

	// Binomial tree: gather towards rank 0, then broadcast back down the same tree.
	int parent = -1;
	for(int mask = 1; mask < ranks; mask <<= 1) {
		if(me & mask) {
			parent = me - mask;
			send(parent, sub_gather, pack(entries));
			break;
		}
		if(me + mask < ranks) {
			auto msg = co_await ch.receive(me + mask, ch.tag(seq, sub_gather));
			net.count_collective_step(me);
			unpack_into(msg, entries);
		}
	}
	int top = 0;
	if(me == 0) {
		result = fold_at_root(entries, ranks, fold);
		top = static_cast<int>(std::bit_ceil(static_cast<unsigned>(ranks)));
	} else {
		result = co_await ch.receive(parent, ch.tag(seq, sub_result));
		net.count_collective_step(me);
		top = me & -me;
	}
	for(int mask = top / 2; mask >= 1; mask /= 2) {
		if(me + mask < ranks) send(me + mask, sub_result, result);
	}
	co_return result;
}

rank_task<double> allreduce(rank_channel& ch, double value, reduce_op op, collective_algorithm algorithm) {
	auto r = co_await allreduce(ch, payload{value}, elementwise_fold(op), algorithm, static_cast<int>(op));
	co_return r.front();
}

std::vector<double> allreduce_all(
    transport& t, std::span<const double> contributions, reduce_op op, collective_algorithm algorithm, std::uint64_t tag_base) {
	if(static_cast<int>(contributions.size()) != t.ranks()) {
		throw std::invalid_argument(
		    "allreduce: " + std::to_string(contributions.size()) + " contributions for " + std::to_string(t.ranks()) + " ranks");
	}
	std::deque<std::coroutine_handle<>> ready;
	std::vector<std::unique_ptr<rank_channel>> channels;
	std::vector<rank_task<double>> tasks;
	std::vector<double> results(contributions.size());
	for(int r = 0; r < t.ranks(); ++r) {
		channels.push_back(std::make_unique<rank_channel>(t, r, tag_base, [&ready](std::coroutine_handle<> h) { ready.push_back(h); }));
	}
	for(int r = 0; r < t.ranks(); ++r) {
		tasks.push_back(allreduce(*channels[static_cast<std::size_t>(r)], contributions[static_cast<std::size_t>(r)], op, algorithm));
		ready.push_back(tasks.back().handle());
	}
	while(!ready.empty()) {
		auto h = ready.front();
		ready.pop_front();
		h.resume();
	}
	for(std::size_t r = 0; r < tasks.size(); ++r) {
		if(!tasks[r].done()) throw std::logic_error("allreduce: rank " + std::to_string(r) + " did not complete");
		if(auto e = tasks[r].error()) std::rethrow_exception(e);
		results[r] = *tasks[r].handle().promise().value;
	}
	return results;
}

} // namespace taskgrid
