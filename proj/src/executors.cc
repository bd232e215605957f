#include "runtime_detail.h"

#include <deque>
#include <queue>
#include <thread>
#include <unordered_map>

namespace taskgrid::detail {

namespace {

	std::string describe(const std::exception_ptr& e) {
		try {
			std::rethrow_exception(e);
		} catch(const std::exception& ex) {
			return ex.what();
		} catch(...) {
			return "unknown exception";
		}
	}

	bool is_abort(const std::exception_ptr& e) {
		try {
			std::rethrow_exception(e);
		} catch(const comm_aborted&) {
			return true;
		} catch(...) {
			return false;
		}
	}

	/// Picks the error to report for a task: a rank's own failure beats the aborts it caused on other ranks.
	std::exception_ptr root_cause(const std::vector<std::unique_ptr<instance>>& insts) {
		std::exception_ptr first;
		for(const auto& i : insts) {
			const auto e = i->error();
			if(!e) continue;
			if(!is_abort(e)) return e;
			if(!first) first = e;
		}
		return first;
	}

	std::exception_ptr as_task_failure(const task_node& node, const std::exception_ptr& cause) {
		return std::make_exception_ptr(task_failure(node.id, node.spec.label, describe(cause)));
	}

	// -----------------------------------------------------------------------------------------------------------------
	// Sequential: tasks run one at a time in submission order. Within a task every rank's
	// coroutine is driven round-robin from one thread, which yields bulk-synchronous behavior.

	class sequential_executor final : public executor_base {
	  public:
		explicit sequential_executor(runtime& rt) : m_rt(rt) {}

		void submit(std::shared_ptr<task_node> node) override { m_queue.push_back(std::move(node)); }

		void wait(task_id id) override {
			while(!m_queue.empty() && m_queue.front()->id <= id) {
				auto node = std::move(m_queue.front());
				m_queue.pop_front();
				run(*node, node);
			}
		}

		void fence() override {
			wait(std::numeric_limits<task_id>::max());
			if(m_failure) std::rethrow_exception(m_failure);
		}

	  private:
		void run(task_node& node, const std::shared_ptr<task_node>& owner) {
			if(m_failure) {
				node.result->resolve({}, m_failure);
				return;
			}
			const int ranks = m_rt.config().ranks;
			std::deque<std::coroutine_handle<>> ready;
			std::vector<std::unique_ptr<instance>> insts;
			for(int r = 0; r < ranks; ++r) {
				auto inst = std::make_unique<instance>();
				inst->rt = &m_rt;
				inst->node = owner;
				inst->rank = r;
				inst->prepare([&ready](std::coroutine_handle<> h) { ready.push_back(h); });
				ready.push_back(inst->root.handle());
				insts.push_back(std::move(inst));
			}

			int finished = 0;
			const auto drain = [&] {
				while(!ready.empty()) {
					const auto h = ready.front();
					ready.pop_front();
					finished_on_this_thread() = nullptr;
					h.resume();
					if(auto* done = finished_on_this_thread()) {
						finished_on_this_thread() = nullptr;
						done->finish();
						++finished;
						if(done->error() && !m_rt.net().aborted()) m_rt.net().abort(describe(done->error()));
					}
				}
			};
			drain();
			if(finished != ranks) {
				// Every remaining rank waits for a message nobody will send.
				m_rt.net().abort("deadlock: " + std::to_string(ranks - finished) + " rank(s) blocked in task '" + node.spec.label + "'");
				drain();
			}
			assert(finished == ranks);

			if(const auto err = root_cause(insts)) {
				m_failure = as_task_failure(node, err);
				node.result->resolve({}, m_failure);
			} else {
				node.result->resolve(std::move(insts.front()->result), nullptr);
			}
		}

		runtime& m_rt;
		std::deque<std::shared_ptr<task_node>> m_queue;
		std::exception_ptr m_failure;
	};

	// -----------------------------------------------------------------------------------------------------------------
	// Async: every rank has its own worker threads. A task instance on rank r starts as soon as
	// all its predecessors completed on rank r; ready work is served lowest task id first.

	class async_executor final : public executor_base {
	  public:
		explicit async_executor(runtime& rt) : m_rt(rt), m_queues(static_cast<std::size_t>(rt.config().ranks)) {
			for(int r = 0; r < rt.config().ranks; ++r) {
				for(int w = 0; w < rt.config().workers_per_rank; ++w) {
					m_workers.emplace_back([this, r] { work(r); });
				}
			}
		}

		~async_executor() override {
			{
				std::unique_lock lock(m_graph_mutex);
				m_idle.wait(lock, [&] { return m_outstanding == 0; });
			}
			for(auto& q : m_queues) {
				{
					std::lock_guard lock(q.mutex);
					q.stop = true;
				}
				q.cv.notify_all();
			}
			for(auto& t : m_workers) t.join();
		}

		void submit(std::shared_ptr<task_node> node) override {
			std::lock_guard lock(m_graph_mutex);
			if(m_failure) {
				node->result->resolve({}, m_failure);
				return;
			}
			const int ranks = m_rt.config().ranks;
			auto st = std::make_unique<node_state>();
			st->node = node;
			st->remaining.assign(static_cast<std::size_t>(ranks), 0);
			st->insts.resize(static_cast<std::size_t>(ranks));
			for(const auto p : node->predecessors) {
				const auto it = m_nodes.find(p);
				if(it == m_nodes.end()) continue; // already retired
				auto& pred = *it->second;
				bool pending = false;
				for(int r = 0; r < ranks; ++r) {
					if(!pred.done_on_rank[static_cast<std::size_t>(r)]) {
						++st->remaining[static_cast<std::size_t>(r)];
						pending = true;
					}
				}
				if(pending) pred.successors.push_back(node->id);
			}
			st->done_on_rank.assign(static_cast<std::size_t>(ranks), false);
			auto* raw = st.get();
			m_nodes.emplace(node->id, std::move(st));
			++m_outstanding;
			for(int r = 0; r < ranks; ++r) {
				if(raw->remaining[static_cast<std::size_t>(r)] == 0) launch(*raw, r);
			}
		}

		void wait(task_id) override {} // the runtime waits on the task's result state

		void fence() override {
			std::unique_lock lock(m_graph_mutex);
			m_idle.wait(lock, [&] { return m_outstanding == 0; });
			if(m_failure) std::rethrow_exception(m_failure);
		}

	  private:
		struct node_state {
			std::shared_ptr<task_node> node;
			std::vector<int> remaining;
			std::vector<bool> done_on_rank;
			std::vector<std::unique_ptr<instance>> insts;
			std::vector<task_id> successors;
			int ranks_done = 0;
		};

		struct work_item {
			task_id task;
			std::uint64_t seq; // FIFO among items of the same task
			std::coroutine_handle<> handle;
			friend bool operator>(const work_item& a, const work_item& b) { return std::tie(a.task, a.seq) > std::tie(b.task, b.seq); }
		};

		struct rank_queue {
			std::mutex mutex;
			std::condition_variable cv;
			std::priority_queue<work_item, std::vector<work_item>, std::greater<>> items;
			bool stop = false;
		};

		void push(int rank, task_id task, std::coroutine_handle<> h) {
			auto& q = m_queues[static_cast<std::size_t>(rank)];
			{
				std::lock_guard lock(q.mutex);
				q.items.push(work_item{task, m_item_seq.fetch_add(1), h});
			}
			q.cv.notify_one();
		}

		// Called with m_graph_mutex held.
		void launch(node_state& st, int rank) {
			auto inst = std::make_unique<instance>();
			inst->rt = &m_rt;
			inst->node = st.node;
			inst->rank = rank;
			const task_id id = st.node->id;
			inst->prepare([this, rank, id](std::coroutine_handle<> h) { push(rank, id, h); });
			const auto h = inst->root.handle();
			st.insts[static_cast<std::size_t>(rank)] = std::move(inst);
			push(rank, id, h);
		}

		void work(int rank) {
			auto& q = m_queues[static_cast<std::size_t>(rank)];
			for(;;) {
				work_item item;
				{
					std::unique_lock lock(q.mutex);
					q.cv.wait(lock, [&] { return q.stop || !q.items.empty(); });
					if(q.items.empty()) return;
					item = q.items.top();
					q.items.pop();
				}
				finished_on_this_thread() = nullptr;
				item.handle.resume();
				if(auto* done = finished_on_this_thread()) {
					finished_on_this_thread() = nullptr;
					complete(*done);
				}
			}
		}

		void complete(instance& inst) {
			inst.finish();
			if(const auto e = inst.error(); e && !m_rt.net().aborted()) m_rt.net().abort(describe(e));

			std::unique_ptr<node_state> retired;
			{
				std::lock_guard lock(m_graph_mutex);
				auto& st = *m_nodes.at(inst.node->id);
				const int rank = inst.rank;
				st.done_on_rank[static_cast<std::size_t>(rank)] = true;
				++st.ranks_done;
				for(const auto s : st.successors) {
					auto& succ = *m_nodes.at(s);
					if(--succ.remaining[static_cast<std::size_t>(rank)] == 0) launch(succ, rank);
				}
				if(st.ranks_done == m_rt.config().ranks) {
					// Every rank's resume() of this task has returned, so the frames can go.
					auto it = m_nodes.find(st.node->id);
					retired = std::move(it->second);
					m_nodes.erase(it);
					if(const auto err = root_cause(retired->insts)) {
						const auto failure = m_failure ? m_failure : as_task_failure(*retired->node, err);
						if(!m_failure) m_failure = failure;
						retired->node->result->resolve({}, failure);
					} else {
						retired->node->result->resolve(std::move(retired->insts.front()->result), nullptr);
					}
					--m_outstanding;
				}
			}
			m_idle.notify_all();
		}

		runtime& m_rt;
		std::mutex m_graph_mutex;
		std::condition_variable m_idle;
		std::unordered_map<task_id, std::unique_ptr<node_state>> m_nodes;
		std::size_t m_outstanding = 0;
		std::exception_ptr m_failure;
		std::vector<rank_queue> m_queues;
		std::atomic<std::uint64_t> m_item_seq{0};
		std::vector<std::thread> m_workers;
	};

} // namespace

std::unique_ptr<executor_base> make_sequential_executor(runtime& rt) { return std::make_unique<sequential_executor>(rt); }
std::unique_ptr<executor_base> make_async_executor(runtime& rt) { return std::make_unique<async_executor>(rt); }

} // namespace taskgrid::detail
