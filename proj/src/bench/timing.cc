#include "taskgrid/bench/timing.h"

namespace taskgrid::bench {

task_result timed_task(runtime& rt, std::string label, task_spec spec) {
	const auto [run, iteration] = rt.timing_epoch();
	spec.timing = timing_tag{std::move(label), run, iteration};
	return rt.submit(std::move(spec));
}

} // namespace taskgrid::bench
