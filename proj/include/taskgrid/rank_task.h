#pragma once

#include <cassert>
#include <coroutine>
#include <exception>
#include <optional>
#include <utility>

namespace taskgrid {

/// Lazily started coroutine executed by one simulated rank.
///
/// Task bodies are coroutines so that a rank can suspend at a communication point
/// (waiting for a ghost slab or a collective message) without blocking the thread
/// that runs it. Awaiting a rank_task runs it to completion and resumes the awaiter
/// through symmetric transfer; exceptions propagate to the awaiter.
template <typename T = void>
class rank_task;

namespace detail {

	struct rank_task_promise_base {
		std::coroutine_handle<> continuation;
		std::exception_ptr error;

		std::suspend_always initial_suspend() noexcept { return {}; }

		struct final_awaiter {
			bool await_ready() const noexcept { return false; }
			template <typename Promise>
			std::coroutine_handle<> await_suspend(std::coroutine_handle<Promise> h) noexcept {
				auto& p = h.promise();
				if(p.continuation) return p.continuation;
				if(p.on_finish) p.on_finish(p.on_finish_arg);
				return std::noop_coroutine();
			}
			void await_resume() const noexcept {}
		};
		final_awaiter final_suspend() noexcept { return {}; }
		void unhandled_exception() noexcept { error = std::current_exception(); }

		/// Called when a root coroutine (no continuation) reaches its final suspend point.
		/// Runs on whichever thread finished the coroutine.
		void (*on_finish)(void*) = nullptr;
		void* on_finish_arg = nullptr;
	};

	template <typename T>
	struct rank_task_promise : rank_task_promise_base {
		std::optional<T> value;
		rank_task<T> get_return_object() noexcept;
		template <typename U>
		void return_value(U&& v) {
			value.emplace(std::forward<U>(v));
		}
	};

	template <>
	struct rank_task_promise<void> : rank_task_promise_base {
		rank_task<void> get_return_object() noexcept;
		void return_void() noexcept {}
	};

} // namespace detail

template <typename T>
class [[nodiscard]] rank_task {
  public:
	using promise_type = detail::rank_task_promise<T>;
	using handle_type = std::coroutine_handle<promise_type>;

	rank_task() = default;
	explicit rank_task(handle_type h) : m_handle(h) {}
	rank_task(rank_task&& other) noexcept : m_handle(std::exchange(other.m_handle, {})) {}
	rank_task& operator=(rank_task&& other) noexcept {
		if(this != &other) {
			reset();
			m_handle = std::exchange(other.m_handle, {});
		}
		return *this;
	}
	rank_task(const rank_task&) = delete;
	rank_task& operator=(const rank_task&) = delete;
	~rank_task() { reset(); }

	bool valid() const { return static_cast<bool>(m_handle); }
	bool done() const { return m_handle && m_handle.done(); }
	handle_type handle() const { return m_handle; }

	/// For root coroutines driven by an executor.
	void set_on_finish(void (*fn)(void*), void* arg) {
		m_handle.promise().on_finish = fn;
		m_handle.promise().on_finish_arg = arg;
	}
	std::exception_ptr error() const { return m_handle.promise().error; }

	struct awaiter {
		handle_type callee;
		bool await_ready() const noexcept { return !callee || callee.done(); }
		std::coroutine_handle<> await_suspend(std::coroutine_handle<> caller) noexcept {
			callee.promise().continuation = caller;
			return callee;
		}
		T await_resume() {
			auto& p = callee.promise();
			if(p.error) std::rethrow_exception(p.error);
			if constexpr(!std::is_void_v<T>) {
				assert(p.value.has_value());
				return std::move(*p.value);
			}
		}
	};
	awaiter operator co_await() const& noexcept { return awaiter{m_handle}; }

  private:
	void reset() {
		if(m_handle) m_handle.destroy();
		m_handle = {};
	}

	handle_type m_handle;
};

namespace detail {
	template <typename T>
	rank_task<T> rank_task_promise<T>::get_return_object() noexcept {
		return rank_task<T>{std::coroutine_handle<rank_task_promise<T>>::from_promise(*this)};
	}
	inline rank_task<void> rank_task_promise<void>::get_return_object() noexcept {
		return rank_task<void>{std::coroutine_handle<rank_task_promise<void>>::from_promise(*this)};
	}
} // namespace detail

} // namespace taskgrid
