#include "taskgrid/runtime.h"

#include "runtime_detail.h"
#include "taskgrid/cell_loops.h"

#include <algorithm>
#include <set>

namespace taskgrid {

std::string_view to_string(privilege p) {
	switch(p) {
	case privilege::read_only:
		return "ro";
	case privilege::write_discard:
		return "wd";
	case privilege::read_write:
		return "rw";
	}
	return "?";
}

std::string_view to_string(executor_kind k) { return k == executor_kind::sequential ? "sequential" : "async"; }

executor_kind parse_executor_kind(std::string_view s) {
	if(s == "sequential" || s == "seq" || s == "mpi") return executor_kind::sequential;
	if(s == "async" || s == "async_dag" || s == "dag") return executor_kind::async_dag;
	throw std::invalid_argument("unknown executor '" + std::string(s) + "' (expected sequential or async)");
}

task_body simple_body(std::function<void(task_context&)> fn) {
	return [fn = std::move(fn)](task_context& ctx) -> rank_task<void> {
		fn(ctx);
		co_return;
	};
}

std::vector<edge> infer_edges(const access_history& history, task_id new_task, std::span<const field_access> accesses) {
	std::set<task_id> sources;
	for(const auto& a : accesses) {
		const auto it = history.find(a.field);
		if(it == history.end()) continue;
		const auto& h = it->second;
		if(!writes(a.priv)) {
			if(h.last_writer) sources.insert(*h.last_writer);
			continue;
		}
		if(!h.readers_since_write.empty()) {
			sources.insert(h.readers_since_write.begin(), h.readers_since_write.end());
		} else if(h.last_writer) {
			sources.insert(*h.last_writer);
		}
	}
	sources.erase(new_task);
	std::vector<edge> edges;
	edges.reserve(sources.size());
	for(const auto s : sources) edges.push_back(edge{s, new_task});
	return edges;
}

void record_accesses(access_history& history, task_id task, std::span<const field_access> accesses) {
	for(const auto& a : accesses) {
		auto& h = history[a.field];
		if(writes(a.priv)) {
			h.last_writer = task;
			h.readers_since_write.clear();
		} else {
			h.readers_since_write.push_back(task);
		}
	}
}

// ---------------------------------------------------------------------------------------------------------------------
// task_result

task_id task_result::id() const { return m_state ? m_state->id : 0; }

bool task_result::ready() const { return m_state && m_state->is_done(); }

double task_result::get() const {
	const auto& v = values();
	return v.empty() ? 0.0 : v.front();
}

const std::vector<double>& task_result::values() const {
	if(!m_state) throw std::logic_error("task_result: empty handle");
	m_rt->wait_for(*this);
	return m_state->values;
}

// ---------------------------------------------------------------------------------------------------------------------
// task_context

task_context::task_context(runtime& rt, const detail::task_node& node, int rank, rank_channel::rescheduler resched) :
    m_rt(&rt), m_node(&node), m_rank(rank), m_channel(rt.net(), rank, node.id, std::move(resched)) {
	const auto width = node.spec.reduce_width;
	if(node.spec.reduce == reduction::sum) m_sum_partials.resize(width);
	if(node.spec.reduce == reduction::max) m_extreme_partials.assign(width, -std::numeric_limits<double>::infinity());
	if(node.spec.reduce == reduction::min) m_extreme_partials.assign(width, std::numeric_limits<double>::infinity());
}

task_context::~task_context() = default;

int task_context::colors() const { return m_rt->config().ranks; }
const std::string& task_context::label() const { return m_node->spec.label; }
task_id task_context::id() const { return m_node->id; }
int task_context::workers() const { return m_rt->config().workers_per_rank; }

const field_access* task_context::find_access(field_handle f) const {
	for(const auto& a : m_node->spec.accesses) {
		if(a.field == f) return &a;
	}
	return nullptr;
}

const local_block& task_context::block() const {
	if(m_node->spec.accesses.empty()) throw privilege_error("task '" + label() + "' declared no fields, so it has no block");
	return block(m_node->spec.accesses.front().field);
}

const local_block& task_context::block(field_handle f) const { return m_rt->storage_of(f).blocks[static_cast<std::size_t>(m_rank)]; }

field_view<double> task_context::write(field_handle f) {
	const auto* a = find_access(f);
	if(a == nullptr || !writes(a->priv)) {
		throw privilege_error("task '" + label() + "' requested write access to field '" + m_rt->field_name(f) + "' but declared " +
		    (a ? std::string(to_string(a->priv)) : std::string("no access")));
	}
	auto& s = m_rt->storage_of(f);
	const auto r = static_cast<std::size_t>(m_rank);
	return field_view<double>(s.data[r].data(), &s.blocks[r], s.components);
}

field_view<const double> task_context::read(field_handle f) const {
	if(find_access(f) == nullptr) {
		throw privilege_error("task '" + label() + "' did not declare access to field '" + m_rt->field_name(f) + "'");
	}
	const auto& s = m_rt->storage_of(f);
	const auto r = static_cast<std::size_t>(m_rank);
	return field_view<const double>(s.data[r].data(), &s.blocks[r], s.components);
}

namespace {
	struct slab_box {
		std::array<index_t, max_dims> lo{};
		std::array<index_t, max_dims> hi{};
	};

	// Face slab in block-local coordinates: `along` on `axis`, owned range on the other axes.
	slab_box face_slab(const local_block& b, int axis, index_t along_lo, index_t along_hi) {
		slab_box box;
		for(int a = 0; a < max_dims; ++a) {
			box.lo[a] = 0;
			box.hi[a] = a < b.dims ? b.owned[a].size() : 1;
		}
		box.lo[axis] = along_lo;
		box.hi[axis] = along_hi;
		return box;
	}

	template <typename Fn>
	void visit_box(const slab_box& box, Fn&& fn) {
		for(index_t k = box.lo[2]; k < box.hi[2]; ++k)
			for(index_t j = box.lo[1]; j < box.hi[1]; ++j)
				for(index_t i = box.lo[0]; i < box.hi[0]; ++i) fn(i, j, k);
	}
} // namespace

rank_task<void> task_context::exchange(field_handle f) {
	auto dst = write(f);
	const auto& s = m_rt->storage_of(f);
	const auto& b = dst.block();
	const auto seq = m_channel.next_operation();
	const auto sub_of = [](const transfer& t) { return static_cast<std::uint32_t>(t.axis * 2 + static_cast<int>(t.recv_side)); };

	for(const auto& t : s.plan.transfers) {
		if(t.send_color != m_rank) continue;
		const index_t lo = t.cells.begin - b.owned[t.axis].begin;
		const auto box = face_slab(b, t.axis, lo, lo + t.cells.size());
		payload p;
		for(int c = 0; c < s.components; ++c) {
			visit_box(box, [&](index_t i, index_t j, index_t k) { p.push_back(dst.at(c, i, j, k)); });
		}
		m_channel.send(t.recv_color, m_channel.tag(seq, sub_of(t)), std::move(p), message_kind::point_to_point);
	}
	for(const auto& t : s.plan.transfers) {
		if(t.recv_color != m_rank) continue;
		auto p = co_await m_channel.receive(t.send_color, m_channel.tag(seq, sub_of(t)));
		const index_t n = b.owned[t.axis].size();
		const index_t depth = t.cells.size();
		const auto box = t.recv_side == side::low ? face_slab(b, t.axis, -depth, 0) : face_slab(b, t.axis, n, n + depth);
		std::size_t pos = 0;
		for(int c = 0; c < s.components; ++c) {
			visit_box(box, [&](index_t i, index_t j, index_t k) { dst.at(c, i, j, k) = p[pos++]; });
		}
	}
}

rank_task<double> task_context::allreduce(double value, reduce_op op) {
	co_return co_await taskgrid::allreduce(m_channel, value, op, m_rt->config().collectives);
}

rank_task<double> task_context::allreduce_exact(const exact_sum& partial) {
	auto reduced = co_await taskgrid::allreduce(m_channel, partial.encode(), exact_sum_fold(), m_rt->config().collectives, 16);
	co_return exact_sum::decode(reduced).value();
}

void task_context::contribute(double v, std::size_t slot) {
	switch(m_node->spec.reduce) {
	case reduction::none:
		throw std::logic_error("task '" + label() + "' contributed to a reduction it did not declare");
	case reduction::sum:
		m_sum_partials.at(slot).add(v);
		break;
	case reduction::max:
		m_extreme_partials.at(slot) = std::max(m_extreme_partials.at(slot), v);
		break;
	case reduction::min:
		m_extreme_partials.at(slot) = std::min(m_extreme_partials.at(slot), v);
		break;
	}
}

void task_context::contribute(const exact_sum& s, std::size_t slot) {
	if(m_node->spec.reduce != reduction::sum) throw std::logic_error("task '" + label() + "' contributed an exact sum to a non-sum reduction");
	m_sum_partials.at(slot).merge(s);
}

void task_context::parallel(index_t chunks, const std::function<void(index_t)>& fn) const {
	auto* pool = m_rt->loops();
	if(chunks <= 1 || pool == nullptr) {
		for(index_t c = 0; c < chunks; ++c) fn(c);
		return;
	}
	pool->parallel_for(chunks, fn);
}

// ---------------------------------------------------------------------------------------------------------------------
// instances

namespace detail {

	instance*& finished_on_this_thread() {
		thread_local instance* finished = nullptr;
		return finished;
	}

	rank_task<void> instance::run(instance& inst) {
		auto& ctx = *inst.ctx;
		const auto& spec = inst.node->spec;
		runtime& rt = *inst.rt;
		inst.start_seq = rt.next_event_seq();
		if(rt.net().aborted()) throw comm_aborted("not started: " + rt.net().abort_reason());

		std::chrono::steady_clock::time_point start;
		std::chrono::nanoseconds waited_before{0};
		if(spec.timing) {
			waited_before = ctx.channel().waited();
			start = std::chrono::steady_clock::now();
		}
		co_await spec.body(ctx);
		if(spec.timing) {
			const auto stop = std::chrono::steady_clock::now();
			rt.record_sample(timing_sample{
			    spec.timing->run, spec.timing->iteration, spec.timing->label, inst.rank, start, stop, ctx.channel().waited() - waited_before});
		}

		if(spec.reduce == reduction::none) {
			inst.result = std::move(ctx.m_explicit_result);
			co_return;
		}
		const auto algorithm = rt.config().collectives;
		if(spec.reduce == reduction::sum) {
			payload contribution;
			for(const auto& s : ctx.m_sum_partials) {
				const auto enc = s.encode();
				contribution.insert(contribution.end(), enc.begin(), enc.end());
			}
			auto reduced = co_await allreduce(ctx.channel(), std::move(contribution), exact_sum_fold(), algorithm, 1);
			for(std::size_t slot = 0; slot < spec.reduce_width; ++slot) {
				inst.result.push_back(exact_sum::decode(std::span(reduced).subspan(slot * exact_sum::encoded_size, exact_sum::encoded_size)).value());
			}
		} else {
			const auto op = spec.reduce == reduction::max ? reduce_op::max : reduce_op::min;
			inst.result = co_await allreduce(ctx.channel(), ctx.m_extreme_partials, elementwise_fold(op), algorithm, 2 + static_cast<int>(op));
		}
	}

	namespace {
		void mark_finished(void* p) { finished_on_this_thread() = static_cast<instance*>(p); }
	} // namespace

	void instance::prepare(rank_channel::rescheduler resched) {
		ctx = std::make_unique<task_context>(*rt, *node, rank, std::move(resched));
		root = run(*this);
		root.set_on_finish(&mark_finished, this);
	}

	void instance::finish() { rt->record_event(execution_event{rank, node->id, start_seq, rt->next_event_seq()}); }

} // namespace detail

// ---------------------------------------------------------------------------------------------------------------------
// runtime

runtime::runtime(executor_config cfg) : m_config(cfg), m_transport(cfg.ranks) {
	if(cfg.workers_per_rank < 1) throw std::invalid_argument("runtime: workers per rank must be >= 1");
	if(cfg.workers_per_rank > 1) m_loops = std::make_unique<loop_pool>(cfg.workers_per_rank - 1);
	m_executor = cfg.kind == executor_kind::sequential ? detail::make_sequential_executor(*this) : detail::make_async_executor(*this);
}

runtime::~runtime() {
	try {
		m_executor->fence();
	} catch(...) {
		// failures were reported to whoever waited; nothing left to do at teardown
	}
	m_executor.reset();
}

std::shared_ptr<const mesh_topology> runtime::add_topology(mesh_topology t) {
	if(t.num_colors() != m_config.ranks) {
		throw std::invalid_argument("add_topology: topology has " + std::to_string(t.num_colors()) + " colors but the runtime has " +
		    std::to_string(m_config.ranks) + " ranks");
	}
	m_topologies.push_back(std::make_shared<const mesh_topology>(std::move(t)));
	return m_topologies.back();
}

field_handle runtime::register_field(const std::shared_ptr<const mesh_topology>& topology, const std::string& name, element_kind kind) {
	if(!topology || std::find(m_topologies.begin(), m_topologies.end(), topology) == m_topologies.end()) {
		throw std::invalid_argument("register_field: topology not added to this runtime");
	}
	if(kind.components < 1) throw std::invalid_argument("register_field: element needs at least one component");
	for(const auto& f : m_fields) {
		if(f->topology == topology && f->name == name) {
			throw std::invalid_argument("register_field: field '" + name + "' already registered on this topology");
		}
	}
	auto s = std::make_unique<detail::field_storage>();
	s->topology = topology;
	s->name = name;
	s->components = kind.components;
	s->plan = topology->plan();
	for(int c = 0; c < topology->num_colors(); ++c) {
		s->blocks.push_back(topology->block(c));
		s->data.emplace_back(static_cast<std::size_t>(s->blocks.back().padded_cells() * kind.components), 0.0);
	}
	m_fields.push_back(std::move(s));
	const field_handle h{static_cast<std::uint32_t>(m_fields.size() - 1)};
	m_ghosts_stale[h] = false;
	return h;
}

detail::field_storage& runtime::storage_of(field_handle f) {
	if(f.id >= m_fields.size()) throw std::invalid_argument("unknown field handle " + std::to_string(f.id));
	return *m_fields[f.id];
}

const detail::field_storage& runtime::storage_of(field_handle f) const {
	if(f.id >= m_fields.size()) throw std::invalid_argument("unknown field handle " + std::to_string(f.id));
	return *m_fields[f.id];
}

const std::string& runtime::field_name(field_handle f) const { return storage_of(f).name; }
int runtime::components(field_handle f) const { return storage_of(f).components; }
const mesh_topology& runtime::topology_of(field_handle f) const { return *storage_of(f).topology; }

task_result runtime::submit(task_spec spec) {
	if(!spec.body) throw std::invalid_argument("submit: task '" + spec.label + "' has no body");
	if(spec.reduce != reduction::none && spec.reduce_width == 0) throw std::invalid_argument("submit: zero-width reduction");
	for(std::size_t i = 0; i < spec.accesses.size(); ++i) {
		(void)storage_of(spec.accesses[i].field); // throws for unknown handles
		for(std::size_t j = 0; j < i; ++j) {
			if(spec.accesses[j].field == spec.accesses[i].field) {
				throw std::invalid_argument("submit: task '" + spec.label + "' declares field '" + field_name(spec.accesses[i].field) + "' twice");
			}
		}
	}
	// Ghost cells read by this task must reflect the last writer.
	for(const auto& a : spec.accesses) {
		if(!a.ghosts || a.priv == privilege::write_discard || !m_ghosts_stale[a.field]) continue;
		if(!storage_of(a.field).plan.transfers.empty()) {
			const auto f = a.field;
			task_spec x;
			x.label = "ghost_exchange(" + field_name(f) + ")";
			x.accesses = {read_write(f, false)};
			x.body = [f](task_context& ctx) -> rank_task<void> { co_await ctx.exchange(f); };
			submit_node(std::move(x));
		}
		m_ghosts_stale[a.field] = false;
	}
	return submit_node(std::move(spec));
}

task_result runtime::submit_node(task_spec spec) {
	auto node = std::make_shared<detail::task_node>();
	node->id = m_next_task++;
	const auto edges = infer_edges(m_history, node->id, spec.accesses);
	record_accesses(m_history, node->id, spec.accesses);
	for(const auto& a : spec.accesses) {
		if(writes(a.priv)) m_ghosts_stale[a.field] = true;
	}
	for(const auto& e : edges) {
		assert(e.from < e.to); // edges only point forward in program order, so the graph is acyclic
		node->predecessors.push_back(e.from);
		m_edges.push_back(e);
	}
	m_labels.emplace_back(node->id, spec.label);
	node->result = std::make_shared<detail::result_state>();
	node->result->id = node->id;
	node->result->label = spec.label;
	node->spec = std::move(spec);
	task_result r(this, node->result);
	m_executor->submit(std::move(node));
	return r;
}

void runtime::fence() { m_executor->fence(); }

void runtime::wait_for(const task_result& r) {
	m_executor->wait(r.id());
	r.m_state->wait();
	if(r.m_state->error) std::rethrow_exception(r.m_state->error);
}

std::vector<double> runtime::gather(field_handle f, int component) {
	fence();
	const auto& s = storage_of(f);
	if(component < 0 || component >= s.components) throw std::out_of_range("gather: component out of range");
	const auto& t = *s.topology;
	const auto& ext = t.global_extents();
	std::vector<double> out(static_cast<std::size_t>(t.global_cells()));
	for(int c = 0; c < t.num_colors(); ++c) {
		const auto& b = s.blocks[static_cast<std::size_t>(c)];
		const field_view<const double> v(s.data[static_cast<std::size_t>(c)].data(), &b, s.components);
		for(index_t k = 0; k < (t.dims() > 2 ? b.owned[2].size() : 1); ++k)
			for(index_t j = 0; j < (t.dims() > 1 ? b.owned[1].size() : 1); ++j)
				for(index_t i = 0; i < b.owned[0].size(); ++i) {
					const index_t gi = i + b.owned[0].begin;
					const index_t gj = j + (t.dims() > 1 ? b.owned[1].begin : 0);
					const index_t gk = k + (t.dims() > 2 ? b.owned[2].begin : 0);
					out[static_cast<std::size_t>((gk * ext[1] + gj) * ext[0] + gi)] = v.at(component, i, j, k);
				}
	}
	return out;
}

const std::vector<double>& runtime::storage(field_handle f, int color) {
	fence();
	return storage_of(f).data.at(static_cast<std::size_t>(color));
}

graph_snapshot runtime::graph() const { return graph_snapshot{m_labels, m_edges}; }

std::vector<execution_event> runtime::execution_log() const {
	std::lock_guard lock(m_log_mutex);
	return m_log;
}

std::vector<timing_sample> runtime::timing_samples() const {
	std::lock_guard lock(m_log_mutex);
	return m_samples;
}

void runtime::clear_timing_samples() {
	std::lock_guard lock(m_log_mutex);
	m_samples.clear();
}

std::uint64_t runtime::next_event_seq() { return m_event_seq.fetch_add(1) + 1; }

void runtime::record_event(const execution_event& e) {
	std::lock_guard lock(m_log_mutex);
	m_log.push_back(e);
}

void runtime::record_sample(timing_sample s) {
	std::lock_guard lock(m_log_mutex);
	m_samples.push_back(std::move(s));
}

comm_stats run_sequential(const program& prog, executor_config cfg) {
	cfg.kind = executor_kind::sequential;
	runtime rt(cfg);
	prog(rt);
	rt.fence();
	return rt.stats();
}

comm_stats run_async(const program& prog, executor_config cfg) {
	cfg.kind = executor_kind::async_dag;
	runtime rt(cfg);
	prog(rt);
	rt.fence();
	return rt.stats();
}

// ---------------------------------------------------------------------------------------------------------------------
// loop_pool

loop_pool::loop_pool(int helpers) {
	for(int t = 0; t < helpers; ++t) {
		m_threads.emplace_back([this] {
			for(;;) {
				std::shared_ptr<job> j;
				{
					std::unique_lock lock(m_mutex);
					m_cv.wait(lock, [&] { return m_stop || !m_jobs.empty(); });
					if(m_stop) return;
					j = m_jobs.front();
					if(j->next.load() >= j->chunks) {
						m_jobs.pop_front();
						continue;
					}
				}
				drain(*j);
			}
		});
	}
}

loop_pool::~loop_pool() {
	{
		std::lock_guard lock(m_mutex);
		m_stop = true;
	}
	m_cv.notify_all();
	for(auto& t : m_threads) t.join();
}

void loop_pool::drain(job& j) {
	for(;;) {
		const index_t c = j.next.fetch_add(1);
		if(c >= j.chunks) return;
		try {
			(*j.fn)(c);
		} catch(...) {
			std::lock_guard lock(j.error_mutex);
			if(!j.error) j.error = std::current_exception();
		}
		j.finished.fetch_add(1);
	}
}

void loop_pool::parallel_for(index_t chunks, const std::function<void(index_t)>& fn) {
	auto j = std::make_shared<job>();
	j->fn = &fn;
	j->chunks = chunks;
	{
		std::lock_guard lock(m_mutex);
		m_jobs.push_back(j);
	}
	m_cv.notify_all();
	drain(*j);
	while(j->finished.load() < chunks) std::this_thread::yield();
	{
		std::lock_guard lock(m_mutex);
		std::erase(m_jobs, j);
	}
	if(j->error) std::rethrow_exception(j->error);
}

} // namespace taskgrid
