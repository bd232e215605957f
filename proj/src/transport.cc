#include "taskgrid/transport.h"

#include <algorithm>

namespace taskgrid {

std::uint64_t comm_stats::total_point_to_point() const {
	std::uint64_t n = 0;
	for(const auto& r : per_rank) n += r.point_to_point_sends;
	return n;
}

std::uint64_t comm_stats::total_collective_messages() const {
	std::uint64_t n = 0;
	for(const auto& r : per_rank) n += r.collective_sends;
	return n;
}

std::uint64_t comm_stats::total_collective_message_ops() const {
	std::uint64_t n = 0;
	for(const auto& r : per_rank) n += r.collective_message_ops;
	return n;
}

std::uint64_t comm_stats::max_collective_message_ops() const {
	std::uint64_t n = 0;
	for(const auto& r : per_rank) n = std::max(n, r.collective_message_ops);
	return n;
}

std::uint64_t comm_stats::max_collective_rounds() const {
	std::uint64_t n = 0;
	for(const auto& r : per_rank) n = std::max(n, r.collective_rounds);
	return n;
}

transport::transport(int ranks) : m_ranks(ranks), m_counters(static_cast<std::size_t>(ranks)) {
	if(ranks < 1) throw std::invalid_argument("transport: rank count must be >= 1");
}

void transport::send(message_envelope msg) {
	if(msg.source < 0 || msg.source >= m_ranks || msg.destination < 0 || msg.destination >= m_ranks) {
		throw std::out_of_range("transport::send: rank out of range");
	}
	std::function<void()> waker;
	{
		std::lock_guard lock(m_mutex);
		if(m_aborted) throw comm_aborted("transport aborted: " + m_abort_reason);
		auto& c = m_counters[static_cast<std::size_t>(msg.source)];
		if(msg.kind == message_kind::point_to_point) {
			++c.point_to_point_sends;
		} else {
			++c.collective_sends;
		}
		key k{msg.destination, msg.source, msg.tag};
		m_mailboxes[k].push_back(std::move(msg.data));
		if(auto it = m_waiters.find(k); it != m_waiters.end()) {
			waker = std::move(it->second);
			m_waiters.erase(it);
		}
	}
	if(waker) waker();
}

std::optional<payload> transport::try_receive(int destination, int source, const message_tag& tag) {
	std::lock_guard lock(m_mutex);
	auto it = m_mailboxes.find(key{destination, source, tag});
	if(it == m_mailboxes.end()) return std::nullopt;
	auto data = std::move(it->second.front());
	it->second.erase(it->second.begin());
	if(it->second.empty()) m_mailboxes.erase(it);
	return data;
}

std::optional<payload> transport::receive_or_register(int destination, int source, const message_tag& tag, std::function<void()> waker) {
	{
		std::lock_guard lock(m_mutex);
		key k{destination, source, tag};
		if(auto it = m_mailboxes.find(k); it != m_mailboxes.end()) {
			auto data = std::move(it->second.front());
			it->second.erase(it->second.begin());
			if(it->second.empty()) m_mailboxes.erase(it);
			return data;
		}
		if(!m_aborted) {
			m_waiters[k] = std::move(waker);
			return std::nullopt;
		}
	}
	// Aborted: resume immediately so the receiver observes the failure.
	waker();
	return std::nullopt;
}

void transport::count_collective_step(int rank) {
	std::lock_guard lock(m_mutex);
	auto& c = m_counters[static_cast<std::size_t>(rank)];
	++c.collective_message_ops;
	++c.collective_rounds;
}

void transport::abort(const std::string& reason) {
	std::map<key, std::function<void()>> waiters;
	{
		std::lock_guard lock(m_mutex);
		if(!m_aborted) {
			m_aborted = true;
			m_abort_reason = reason;
		}
		waiters.swap(m_waiters);
	}
	for(auto& [k, w] : waiters) w();
}

bool transport::aborted() const {
	std::lock_guard lock(m_mutex);
	return m_aborted;
}

std::string transport::abort_reason() const {
	std::lock_guard lock(m_mutex);
	return m_abort_reason;
}

comm_stats transport::stats() const {
	std::lock_guard lock(m_mutex);
	return comm_stats{m_counters};
}

void transport::reset_stats() {
	std::lock_guard lock(m_mutex);
	std::fill(m_counters.begin(), m_counters.end(), rank_counters{});
}

std::size_t transport::pending_messages() const {
	std::lock_guard lock(m_mutex);
	std::size_t n = 0;
	for(const auto& [k, q] : m_mailboxes) n += q.size();
	return n;
}

void rank_channel::send(int destination, const message_tag& tag, payload data, message_kind kind) {
	m_transport->send(message_envelope{m_rank, destination, tag, kind, std::move(data)});
}

bool rank_channel::receive_awaiter::await_ready() {
	result = channel->m_transport->try_receive(channel->m_rank, source, tag);
	return result.has_value();
}

bool rank_channel::receive_awaiter::await_suspend(std::coroutine_handle<> h) {
	suspended_at = std::chrono::steady_clock::now();
	auto* ch = channel;
	auto ready = ch->m_transport->receive_or_register(ch->m_rank, source, tag, [ch, h] { ch->m_resched(h); });
	// Once the waker is registered another thread may resume the coroutine, so the frame is off limits.
	if(!ready) return true;
	result = std::move(ready);
	return false;
}

payload rank_channel::receive_awaiter::await_resume() {
	if(suspended_at != std::chrono::steady_clock::time_point{}) {
		channel->m_waited += std::chrono::steady_clock::now() - suspended_at;
	}
	if(!result) result = channel->m_transport->try_receive(channel->m_rank, source, tag);
	if(!result) throw comm_aborted("receive failed: " + channel->m_transport->abort_reason());
	return std::move(*result);
}

} // namespace taskgrid
