#pragma once

#include "taskgrid/runtime.h"

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace taskgrid::poisson {

/// How the physical-boundary ghost cells of p are set.
enum class boundary_mode {
	/// Ghosts hold the manufactured solution at their cell centers (Dirichlet data of
	/// the manufactured problem); keeps the discretization second order up to the wall.
	manufactured,
	/// Ghosts are zero.
	zero,
};

struct config {
	int dims = 2;
	std::array<index_t, 2> extents{64, 64};
	std::array<double, 2> length{1.0, 1.0};
	double tolerance = 1e-8;
	int max_tasks = 1000;
	int iterations_per_task = 50;
	boundary_mode boundary = boundary_mode::manufactured;
	/// Time solve tasks in-task and skip convergence checks between tasks (see bench).
	bool benchmark = false;
};

/// Analytic solution and right-hand side of the default problem.
double exact_solution(double x, double y);
double rhs(double x, double y);

struct problem {
	config cfg;
	std::shared_ptr<const mesh_topology> topology;
	field_handle p;
	field_handle f;
	double dx = 0;
	double dy = 0;

	double cx() const { return 1.0 / (dx * dx); }
	double cy() const { return cfg.dims > 1 ? 1.0 / (dy * dy) : 0.0; }
	double diag() const { return 2.0 * cx() + 2.0 * cy(); }
	/// Cell-center coordinate of global index i along axis a.
	double center(int axis, index_t i) const { return (static_cast<double>(i) + 0.5) * (axis == 0 ? dx : dy); }
};

struct solver_state {
	problem prob;
	int tasks = 0;
	std::vector<double> residual_history;
};

/// Registers p and f on a block decomposition matching the runtime's rank count,
/// fills f and the boundary ghosts of p, and zeroes p. Throws std::invalid_argument for invalid extents.
solver_state init_problem(runtime& rt, const config& cfg);

/// Updates every owned cell with (gi + gj) % 2 == parity in place (one half-sweep).
void gsm_sweep(const task_context& ctx, const problem& prob, field_view<double> p, field_view<const double> f, int parity);

/// Submits one task performing `iterations` red-black iteration pairs (default: the configured count).
task_result solve_task(runtime& rt, solver_state& state, std::optional<int> iterations = std::nullopt);

/// Submits a task computing the L2 norm of (A p - f) over owned cells, reduced across ranks.
/// The value is the square root of the reduced sum (see residual_value).
task_result residual_task(runtime& rt, const problem& prob);
double residual_value(const task_result& r);

/// Submits and waits for a residual evaluation; appends it to the state's history.
double residual(runtime& rt, solver_state& state);

/// Maximum |p - p*| over owned cells. Fences.
double linf_error(runtime& rt, const problem& prob);

struct report {
	bool converged = false;
	int tasks = 0;
	std::vector<double> residual_history;
	double final_residual = std::numeric_limits<double>::quiet_NaN();
	double linf_error = std::numeric_limits<double>::quiet_NaN();
	std::vector<double> solution; // gathered p, row-major
};

/// Runs solve tasks followed by residual evaluations until the residual drops below the
/// tolerance or max_tasks is reached (non-convergence is reported, not thrown).
/// In benchmark mode all max_tasks solve tasks are submitted without waiting in between.
report run_poisson(runtime& rt, const config& cfg);
report run_poisson(const config& cfg, const executor_config& exec);

} // namespace taskgrid::poisson
