#pragma once

#include "taskgrid/collectives.h"
#include "taskgrid/exact_sum.h"
#include "taskgrid/rank_task.h"
#include "taskgrid/topology.h"
#include "taskgrid/transport.h"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace taskgrid {

using task_id = std::uint64_t;

/// Declared access right of a task to a field.
enum class privilege {
	read_only,
	/// Prior contents need not be preserved; no ghost exchange is inserted before the task.
	write_discard,
	read_write,
};

std::string_view to_string(privilege p);
inline bool writes(privilege p) { return p != privilege::read_only; }

struct element_kind {
	int components = 1;
	static element_kind scalar() { return {1}; }
	static element_kind vector(int n) { return {n}; }
};

struct field_handle {
	std::uint32_t id = 0;
	friend bool operator==(const field_handle&, const field_handle&) = default;
	friend auto operator<=>(const field_handle&, const field_handle&) = default;
};

struct field_access {
	field_handle field;
	privilege priv = privilege::read_only;
	/// Whether the task reads ghost cells. Only such reads trigger an automatic ghost exchange.
	bool ghosts = true;
};

inline field_access read_only(field_handle f, bool ghosts = true) { return {f, privilege::read_only, ghosts}; }
inline field_access read_write(field_handle f, bool ghosts = true) { return {f, privilege::read_write, ghosts}; }
inline field_access write_discard(field_handle f) { return {f, privilege::write_discard, false}; }

enum class reduction { none, sum, max, min };

class task_context;

using task_body = std::function<rank_task<void>(task_context&)>;

/// Adapts a plain (non-suspending) function into a task body.
task_body simple_body(std::function<void(task_context&)> fn);

struct timing_tag {
	std::string label;
	int run = 0;
	int iteration = 0;
};

struct task_spec {
	std::string label;
	std::vector<field_access> accesses;
	task_body body;
	reduction reduce = reduction::none;
	std::size_t reduce_width = 1;
	/// Set by timed_task: the body is bracketed with in-task clock captures.
	std::optional<timing_tag> timing;
};

/// One in-task wall-clock measurement on one rank.
struct timing_sample {
	int run = 0;
	int iteration = 0;
	std::string label;
	int rank = 0;
	std::chrono::steady_clock::time_point start;
	std::chrono::steady_clock::time_point stop;
	/// Time the rank spent suspended waiting for messages from other ranks between start and stop.
	std::chrono::nanoseconds waited{0};

	double wall_seconds() const { return std::chrono::duration<double>(stop - start).count(); }
	/// Time the rank was actually executing the task body.
	double active_seconds() const { return std::chrono::duration<double>((stop - start) - waited).count(); }
};

struct execution_event {
	int rank = 0;
	task_id task = 0;
	std::uint64_t start_seq = 0;
	std::uint64_t end_seq = 0;
};

struct edge {
	task_id from = 0;
	task_id to = 0;
	friend auto operator<=>(const edge&, const edge&) = default;
};

/// Per-field record of prior accesses, in submission order.
struct field_history {
	std::optional<task_id> last_writer;
	std::vector<task_id> readers_since_write;
};
using access_history = std::map<field_handle, field_history>;

/// Dependency edges for a new task given the access history.
///
/// Readers depend on the last writer. Writers depend on every reader since the last
/// writer, or on the last writer itself when there were no such readers (the writer
/// edge is otherwise implied transitively and omitted). Edges are deduplicated.
std::vector<edge> infer_edges(const access_history& history, task_id new_task, std::span<const field_access> accesses);
void record_accesses(access_history& history, task_id task, std::span<const field_access> accesses);

class privilege_error : public std::logic_error {
  public:
	using std::logic_error::logic_error;
};

/// Raised from wait()/fence() when a task failed; names the failing task.
class task_failure : public std::runtime_error {
  public:
	task_failure(task_id id, std::string label, const std::string& what) :
	    std::runtime_error("task " + std::to_string(id) + " (" + label + ") failed: " + what), m_id(id), m_label(std::move(label)) {}
	task_id failing_task() const { return m_id; }
	const std::string& failing_label() const { return m_label; }

  private:
	task_id m_id;
	std::string m_label;
};

enum class executor_kind { sequential, async_dag };
std::string_view to_string(executor_kind k);
executor_kind parse_executor_kind(std::string_view s);

struct executor_config {
	executor_kind kind = executor_kind::sequential;
	int ranks = 1;
	int workers_per_rank = 1;
	collective_algorithm collectives = collective_algorithm::binomial_tree;
};

class loop_pool;
class runtime;

namespace detail {
	struct result_state;
	struct field_storage;
	struct task_node;
	class executor_base;
	struct instance;
} // namespace detail

/// Deferred handle to a task's completion and reduction value.
class task_result {
  public:
	task_result() = default;

	task_id id() const;
	bool ready() const;
	/// Blocks until the task completed on every rank. Throws task_failure on error.
	double get() const;
	const std::vector<double>& values() const;

  private:
	friend class runtime;
	task_result(runtime* rt, std::shared_ptr<detail::result_state> s) : m_rt(rt), m_state(std::move(s)) {}
	runtime* m_rt = nullptr;
	std::shared_ptr<detail::result_state> m_state;
};

/// Non-owning view of one color's storage of a field, in block-local coordinates.
template <typename T>
class field_view {
  public:
	field_view(T* data, const local_block* block, int components) :
	    m_data(data), m_block(block), m_components(components), m_component_stride(block->padded_cells()) {}

	const local_block& block() const { return *m_block; }
	int components() const { return m_components; }

	T& operator()(index_t i, index_t j = 0, index_t k = 0) const { return m_data[m_block->linear(i, j, k)]; }
	T& at(int comp, index_t i, index_t j = 0, index_t k = 0) const { return m_data[comp * m_component_stride + m_block->linear(i, j, k)]; }
	/// Pointer to cell (i, j, k) of a component; neighbors along axis a are stride(a) apart.
	T* ptr(int comp, index_t i, index_t j = 0, index_t k = 0) const { return m_data + comp * m_component_stride + m_block->linear(i, j, k); }
	index_t stride(int axis) const { return m_block->stride(axis); }

  private:
	T* m_data;
	const local_block* m_block;
	int m_components;
	index_t m_component_stride;
};

/// Everything a task body sees on one rank: its color's field storage (subject to
/// the declared privileges), its communication channel, and its reduction slot.
class task_context {
  public:
	task_context(runtime& rt, const detail::task_node& node, int rank, rank_channel::rescheduler resched);
	task_context(const task_context&) = delete;
	task_context& operator=(const task_context&) = delete;
	~task_context();

	int color() const { return m_rank; }
	int colors() const;
	const std::string& label() const;
	task_id id() const;
	int workers() const;

	/// Block of the first declared field's topology (or of `f`).
	const local_block& block() const;
	const local_block& block(field_handle f) const;

	/// Throws privilege_error unless the task declared read_write or write_discard on `f`.
	field_view<double> write(field_handle f);
	/// Throws privilege_error unless the task declared any access to `f`.
	field_view<const double> read(field_handle f) const;

	/// Exchanges ghost slabs of `f` with neighboring ranks (requires write access).
	rank_task<void> exchange(field_handle f);
	rank_task<double> allreduce(double value, reduce_op op);
	/// Sum that is bitwise independent of the rank count.
	rank_task<double> allreduce_exact(const exact_sum& partial);

	/// Adds to this rank's partial for the task's declared reduction.
	void contribute(double v, std::size_t slot = 0);
	void contribute(const exact_sum& s, std::size_t slot = 0);
	/// Result value of a task without a declared reduction; the value set on color 0 is reported.
	void set_result(std::vector<double> values) { m_explicit_result = std::move(values); }

	/// Runs fn(chunk) for chunk in [0, chunks), possibly on several workers.
	void parallel(index_t chunks, const std::function<void(index_t)>& fn) const;

	rank_channel& channel() { return m_channel; }

  private:
	friend struct detail::instance;
	const field_access* find_access(field_handle f) const;

	runtime* m_rt;
	const detail::task_node* m_node;
	int m_rank;
	rank_channel m_channel;
	std::vector<exact_sum> m_sum_partials;
	std::vector<double> m_extreme_partials;
	std::vector<double> m_explicit_result;
};

struct graph_snapshot {
	std::vector<std::pair<task_id, std::string>> nodes;
	std::vector<edge> edges;
};

/// Task-based runtime: owns topologies, fields, the transport, and an executor.
///
/// Submission happens from one control thread. Tasks run on every color; their
/// dependencies are inferred from declared field accesses, and ghost exchanges
/// are inserted automatically before tasks that read stale ghost cells.
class runtime {
  public:
	explicit runtime(executor_config cfg);
	~runtime();
	runtime(const runtime&) = delete;
	runtime& operator=(const runtime&) = delete;

	const executor_config& config() const { return m_config; }

	/// Topology color count must equal the rank count.
	std::shared_ptr<const mesh_topology> add_topology(mesh_topology t);

	/// Zero-initialized storage per color covering owned, ghost, and boundary cells.
	/// Throws std::invalid_argument for a duplicate name on the same topology.
	field_handle register_field(const std::shared_ptr<const mesh_topology>& topology, const std::string& name, element_kind kind);
	const std::string& field_name(field_handle f) const;
	int components(field_handle f) const;
	const mesh_topology& topology_of(field_handle f) const;

	/// Appends the task to program order and returns immediately.
	task_result submit(task_spec spec);

	/// Blocks until every submitted task completed. Throws task_failure on error.
	void fence();

	/// Owned cells of one component in global row-major order (x fastest). Fences first.
	std::vector<double> gather(field_handle f, int component = 0);
	/// Raw storage of one color (including halo). Fences first.
	const std::vector<double>& storage(field_handle f, int color);

	comm_stats stats() const { return m_transport.stats(); }
	void reset_stats() { m_transport.reset_stats(); }
	transport& net() { return m_transport; }

	graph_snapshot graph() const;
	std::vector<execution_event> execution_log() const;
	std::vector<timing_sample> timing_samples() const;
	void clear_timing_samples();

	/// Run/iteration indices stamped into subsequently timed tasks.
	void set_timing_epoch(int run, int iteration) {
		m_epoch_run = run;
		m_epoch_iteration = iteration;
	}
	std::pair<int, int> timing_epoch() const { return {m_epoch_run, m_epoch_iteration}; }

	// Internal interface used by executors and task contexts.
	detail::field_storage& storage_of(field_handle f);
	const detail::field_storage& storage_of(field_handle f) const;
	void wait_for(const task_result& r);
	std::uint64_t next_event_seq();
	void record_event(const execution_event& e);
	void record_sample(timing_sample s);
	loop_pool* loops() const { return m_loops.get(); }

  private:
	task_result submit_node(task_spec spec);

	executor_config m_config;
	transport m_transport;
	std::unique_ptr<loop_pool> m_loops;
	std::vector<std::shared_ptr<const mesh_topology>> m_topologies;
	std::vector<std::unique_ptr<detail::field_storage>> m_fields;
	access_history m_history;
	std::map<field_handle, bool> m_ghosts_stale;
	task_id m_next_task = 1;
	std::vector<std::pair<task_id, std::string>> m_labels;
	std::vector<edge> m_edges;

	mutable std::mutex m_log_mutex;
	std::vector<execution_event> m_log;
	std::vector<timing_sample> m_samples;
	std::atomic<std::uint64_t> m_event_seq{0};
	int m_epoch_run = 0;
	int m_epoch_iteration = 0;

	std::unique_ptr<detail::executor_base> m_executor;
};

using program = std::function<void(runtime&)>;

/// Runs `prog` on a fresh runtime with the sequential (bulk-synchronous, in-order) executor.
comm_stats run_sequential(const program& prog, executor_config cfg);
/// Runs `prog` on a fresh runtime with the asynchronous dependency-graph executor.
comm_stats run_async(const program& prog, executor_config cfg);

} // namespace taskgrid
