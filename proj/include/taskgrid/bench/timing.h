#pragma once

#include "taskgrid/runtime.h"

#include <string>

namespace taskgrid::bench {

/// Submits `spec` with its body bracketed by clock captures taken inside the task on every
/// rank. The sample is stamped with the runtime's current timing epoch (run, iteration).
/// Adds no dependency edges, exchanges, or collectives: the wrapped task has exactly the
/// accesses of `spec`.
task_result timed_task(runtime& rt, std::string label, task_spec spec);

} // namespace taskgrid::bench
