#pragma once

#include <chrono>
#include <compare>
#include <condition_variable>
#include <coroutine>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace taskgrid {

using payload = std::vector<double>;

/// Identifies one message stream between a pair of ranks. Tags are unique per
/// communication operation, so matching never depends on arrival order across operations.
struct message_tag {
	std::uint64_t task = 0;
	std::uint32_t seq = 0;
	std::uint32_t sub = 0;
	friend auto operator<=>(const message_tag&, const message_tag&) = default;
};

enum class message_kind { point_to_point, collective };

struct message_envelope {
	int source = 0;
	int destination = 0;
	message_tag tag;
	message_kind kind = message_kind::point_to_point;
	payload data;
};

struct rank_counters {
	std::uint64_t point_to_point_sends = 0;
	std::uint64_t collective_sends = 0;
	/// Messages sent plus received by this rank inside collectives.
	std::uint64_t collective_message_ops = 0;
	/// Sequential communication steps of this rank inside collectives.
	std::uint64_t collective_rounds = 0;
	friend bool operator==(const rank_counters&, const rank_counters&) = default;
};

struct comm_stats {
	std::vector<rank_counters> per_rank;

	std::uint64_t total_point_to_point() const;
	std::uint64_t total_collective_messages() const;
	std::uint64_t total_collective_message_ops() const;
	std::uint64_t max_collective_message_ops() const;
	std::uint64_t max_collective_rounds() const;
	friend bool operator==(const comm_stats&, const comm_stats&) = default;
};

/// Thrown out of a receive when the transport was aborted by a failing task.
class comm_aborted : public std::runtime_error {
  public:
	using std::runtime_error::runtime_error;
};

/// In-process message transport between simulated ranks.
///
/// Safe for concurrent use from all rank workers. Messages are delivered exactly once,
/// in order per (source, destination, tag). A receiver that finds no message registers a
/// waker, which is invoked (outside the internal lock) when the message arrives.
class transport {
  public:
	explicit transport(int ranks);
	transport(const transport&) = delete;
	transport& operator=(const transport&) = delete;

	int ranks() const { return m_ranks; }

	void send(message_envelope msg);
	std::optional<payload> try_receive(int destination, int source, const message_tag& tag);
	/// Returns the message if present. Otherwise stores `waker` and returns nullopt.
	std::optional<payload> receive_or_register(int destination, int source, const message_tag& tag, std::function<void()> waker);

	/// Record one collective step (a send or a receive) for `rank`.
	void count_collective_step(int rank);

	/// Fails all pending and future receives with comm_aborted.
	void abort(const std::string& reason);
	bool aborted() const;
	std::string abort_reason() const;

	comm_stats stats() const;
	void reset_stats();
	std::size_t pending_messages() const;

  private:
	using key = std::tuple<int, int, message_tag>; // destination, source, tag

	int m_ranks;
	mutable std::mutex m_mutex;
	std::map<key, std::vector<payload>> m_mailboxes;
	std::map<key, std::function<void()>> m_waiters;
	std::vector<rank_counters> m_counters;
	bool m_aborted = false;
	std::string m_abort_reason;
};

/// Per-instance communication endpoint of one rank: tags operations in program
/// order and suspends the owning coroutine while it waits for messages.
class rank_channel {
  public:
	using rescheduler = std::function<void(std::coroutine_handle<>)>;

	rank_channel(transport& t, int rank, std::uint64_t task_id, rescheduler resched) :
	    m_transport(&t), m_rank(rank), m_task(task_id), m_resched(std::move(resched)) {}

	int rank() const { return m_rank; }
	int ranks() const { return m_transport->ranks(); }
	transport& net() { return *m_transport; }

	/// Reserves the tag sequence number for the next communication operation.
	std::uint32_t next_operation() { return m_seq++; }
	message_tag tag(std::uint32_t seq, std::uint32_t sub) const { return {m_task, seq, sub}; }

	void send(int destination, const message_tag& tag, payload data, message_kind kind);

	struct receive_awaiter {
		rank_channel* channel;
		int source;
		message_tag tag;
		std::optional<payload> result;
		std::chrono::steady_clock::time_point suspended_at{};

		bool await_ready();
		bool await_suspend(std::coroutine_handle<> h);
		payload await_resume();
	};
	receive_awaiter receive(int source, const message_tag& tag) { return receive_awaiter{this, source, tag, std::nullopt, {}}; }

	/// Wall time this rank spent suspended waiting for messages.
	std::chrono::nanoseconds waited() const { return m_waited; }

  private:
	transport* m_transport;
	int m_rank;
	std::uint64_t m_task;
	std::uint32_t m_seq = 0;
	rescheduler m_resched;
	std::chrono::nanoseconds m_waited{0};
};

} // namespace taskgrid
