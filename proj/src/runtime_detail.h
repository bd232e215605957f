#pragma once

#include "taskgrid/runtime.h"

#include <condition_variable>
#include <exception>
#include <memory>
#include <mutex>
#include <vector>

namespace taskgrid::detail {

struct result_state {
	task_id id = 0;
	std::string label;

	mutable std::mutex mutex;
	mutable std::condition_variable cv;
	bool done = false;
	std::vector<double> values;
	std::exception_ptr error;

	void resolve(std::vector<double> v, std::exception_ptr e) {
		{
			std::lock_guard lock(mutex);
			values = std::move(v);
			error = std::move(e);
			done = true;
		}
		cv.notify_all();
	}
	void wait() const {
		std::unique_lock lock(mutex);
		cv.wait(lock, [&] { return done; });
	}
	bool is_done() const {
		std::lock_guard lock(mutex);
		return done;
	}
};

struct field_storage {
	std::shared_ptr<const mesh_topology> topology;
	std::string name;
	int components = 1;
	std::vector<local_block> blocks;
	exchange_plan plan;
	/// One buffer per color, component-major: [component][padded cell].
	std::vector<std::vector<double>> data;
};

struct task_node {
	task_id id = 0;
	task_spec spec;
	std::vector<task_id> predecessors;
	std::shared_ptr<result_state> result;
};

/// One rank's execution of one task.
struct instance {
	runtime* rt = nullptr;
	std::shared_ptr<task_node> node;
	int rank = 0;
	std::unique_ptr<task_context> ctx;
	rank_task<void> root;
	std::vector<double> result;
	std::uint64_t start_seq = 0;

	/// Creates the context and the (not yet started) root coroutine.
	void prepare(rank_channel::rescheduler resched);
	std::exception_ptr error() const { return root.error(); }
	/// Records the execution event; call once the root coroutine finished.
	void finish();

  private:
	static rank_task<void> run(instance& inst);
};

/// Set by an instance's root coroutine when it reaches its final suspend point on
/// the current thread. Executors check it after resume() returns: at that point
/// the coroutine can no longer be running anywhere, so it is safe to retire it.
instance*& finished_on_this_thread();

class executor_base {
  public:
	virtual ~executor_base() = default;
	virtual void submit(std::shared_ptr<task_node> node) = 0;
	/// Blocks until the task completed on all ranks (it must have been submitted).
	virtual void wait(task_id id) = 0;
	virtual void fence() = 0;
};

std::unique_ptr<executor_base> make_sequential_executor(runtime& rt);
std::unique_ptr<executor_base> make_async_executor(runtime& rt);

} // namespace taskgrid::detail
