#pragma once

#include "taskgrid/exact_sum.h"
#include "taskgrid/runtime.h"
#include "taskgrid/topology.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

namespace taskgrid {

/// Helper threads for data-parallel loops inside task bodies. The calling thread
/// always participates, so a loop completes even when every helper is busy.
class loop_pool {
  public:
	explicit loop_pool(int helpers);
	~loop_pool();
	loop_pool(const loop_pool&) = delete;
	loop_pool& operator=(const loop_pool&) = delete;

	int helpers() const { return static_cast<int>(m_threads.size()); }
	void parallel_for(index_t chunks, const std::function<void(index_t)>& fn);

  private:
	struct job {
		const std::function<void(index_t)>* fn;
		index_t chunks;
		std::atomic<index_t> next{0};
		std::atomic<index_t> finished{0};
		std::exception_ptr error;
		std::mutex error_mutex;
	};
	static void drain(job& j);

	std::mutex m_mutex;
	std::condition_variable m_cv;
	std::deque<std::shared_ptr<job>> m_jobs;
	bool m_stop = false;
	std::vector<std::thread> m_threads;
};

/// Applies `kernel(i, j, k)` to every owned cell of the task's block.
///
/// Cells are split into contiguous chunks along the outermost axis which may run on
/// several workers; kernels must therefore be independent across cells.
template <typename Kernel>
void for_each_cell(const task_context& ctx, const local_block& b, Kernel&& kernel) {
	const int outer = std::max(0, b.dims - 1);
	const index_t n_outer = b.owned[outer].size();
	const index_t chunks = std::max<index_t>(1, std::min<index_t>(n_outer, ctx.workers()));
	const index_t nx = b.owned[0].size();
	const index_t ny = b.dims > 1 ? b.owned[1].size() : 1;
	const std::function<void(index_t)> run_chunk = [&](index_t c) {
		const index_t lo = n_outer * c / chunks;
		const index_t hi = n_outer * (c + 1) / chunks;
		if(b.dims <= 1) {
			for(index_t i = lo; i < hi; ++i) kernel(i, index_t{0}, index_t{0});
		} else if(b.dims == 2) {
			for(index_t j = lo; j < hi; ++j)
				for(index_t i = 0; i < nx; ++i) kernel(i, j, index_t{0});
		} else {
			for(index_t k = lo; k < hi; ++k)
				for(index_t j = 0; j < ny; ++j)
					for(index_t i = 0; i < nx; ++i) kernel(i, j, k);
		}
	};
	ctx.parallel(chunks, run_chunk);
}

template <typename Kernel>
void for_each_cell(const task_context& ctx, Kernel&& kernel) {
	for_each_cell(ctx, ctx.block(), std::forward<Kernel>(kernel));
}

/// Exact sum of `kernel(i, j, k)` over owned cells; independent of the worker count.
template <typename Kernel>
exact_sum sum_cells(const task_context& ctx, const local_block& b, Kernel&& kernel) {
	const int outer = std::max(0, b.dims - 1);
	const index_t chunks = std::max<index_t>(1, std::min<index_t>(b.owned[outer].size(), ctx.workers()));
	std::vector<exact_sum> partial(static_cast<std::size_t>(chunks));
	const index_t n_outer = b.owned[outer].size();
	const index_t nx = b.owned[0].size();
	const index_t ny = b.dims > 1 ? b.owned[1].size() : 1;
	const std::function<void(index_t)> run_chunk = [&](index_t c) {
		auto& acc = partial[static_cast<std::size_t>(c)];
		const index_t lo = n_outer * c / chunks;
		const index_t hi = n_outer * (c + 1) / chunks;
		if(b.dims <= 1) {
			for(index_t i = lo; i < hi; ++i) acc.add(kernel(i, index_t{0}, index_t{0}));
		} else if(b.dims == 2) {
			for(index_t j = lo; j < hi; ++j)
				for(index_t i = 0; i < nx; ++i) acc.add(kernel(i, j, index_t{0}));
		} else {
			for(index_t k = lo; k < hi; ++k)
				for(index_t j = 0; j < ny; ++j)
					for(index_t i = 0; i < nx; ++i) acc.add(kernel(i, j, k));
		}
	};
	ctx.parallel(chunks, run_chunk);
	exact_sum total;
	for(const auto& p : partial) total.merge(p);
	return total;
}

template <typename Kernel>
exact_sum sum_cells(const task_context& ctx, Kernel&& kernel) {
	return sum_cells(ctx, ctx.block(), std::forward<Kernel>(kernel));
}

/// Applies `row(j, k)` to every owned row (x-lines) of the block; rows run in parallel chunks.
template <typename RowKernel>
void for_each_row(const task_context& ctx, const local_block& b, RowKernel&& row) {
	const index_t ny = b.dims > 1 ? b.owned[1].size() : 1;
	const index_t nz = b.dims > 2 ? b.owned[2].size() : 1;
	const index_t rows = ny * nz;
	const index_t chunks = std::max<index_t>(1, std::min<index_t>(rows, ctx.workers()));
	const std::function<void(index_t)> run_chunk = [&](index_t c) {
		for(index_t r = rows * c / chunks; r < rows * (c + 1) / chunks; ++r) {
			row(r % ny, r / ny);
		}
	};
	ctx.parallel(chunks, run_chunk);
}

} // namespace taskgrid
