#pragma once

#include "taskgrid/hydro/config.h"
#include "taskgrid/hydro/state.h"
#include "taskgrid/runtime.h"

#include <memory>
#include <optional>
#include <vector>

namespace taskgrid::hydro {

inline constexpr int halo_depth = 3;

/// Outcome of one submitted step; the values become available once its tasks completed.
struct step_record {
	double t = 0; // time at the start of the step
	double dt = 0;
	std::vector<double> totals; // volume-integrated conserved components after the step
	int jacobi_iterations = 0; // 0 when radiation is off
};

/// Compressible hydrodynamics (optionally with flux-limited radiation diffusion) expressed
/// as runtime tasks. State and per-stage scratch data are registered fields, so the
/// dependency-graph executor can overlap the stages of different colors.
class simulation {
  public:
	/// Registers fields and submits the initial-condition task. Throws std::invalid_argument
	/// for an invalid configuration or a color grid that does not match the rank count.
	simulation(runtime& rt, config cfg);

	const config& cfg() const { return m_cfg; }
	const layout& lay() const { return m_layout; }
	const std::shared_ptr<const mesh_topology>& topology() const { return m_topology; }
	field_handle state() const { return m_U; }
	std::array<double, 3> spacing() const { return m_dx; }
	double cell_volume() const;

	/// Submits dt, Heun, (radiation,) and totals tasks without waiting.
	void step();
	/// Submits `n` steps without waiting in between.
	void advance(int n);
	/// Steps until end_time (or max_steps) is reached, waiting for each dt. Returns the step count.
	int run_to_end();

	// Building blocks (each submits tasks and returns immediately).
	task_result compute_dt();
	void heun_step();
	task_result radiation_step();
	task_result totals();
	/// Moves the stopping time of run_to_end (and the dt clipping) for subsequently submitted steps.
	void set_end_time(double t) { m_cfg.end_time = t; }
	/// Overwrites the clock (dt used by the next stages, and the current time).
	void set_clock(double dt, double t);

	int steps() const { return static_cast<int>(m_pending.size()); }
	/// Waits for all submitted steps; one record per step.
	std::vector<step_record> history();
	/// Time after the last submitted step (waits).
	double time();

	/// One conserved component over owned cells in global x-fastest order (fences).
	std::vector<double> gather(int component);
	/// Primitive density/velocity/pressure per cell (fences).
	std::vector<primitive> gather_primitives();

  private:
	struct pending_step {
		task_result dt;
		task_result totals;
		std::optional<task_result> jacobi;
	};

	void init_scenario();

	runtime& m_rt;
	config m_cfg;
	layout m_layout;
	eos m_eos;
	std::array<double, 3> m_dx{1, 1, 1};
	std::shared_ptr<const mesh_topology> m_topology;
	std::shared_ptr<const mesh_topology> m_control;
	field_handle m_U, m_Us, m_L0, m_L1;
	field_handle m_clock;
	field_handle m_rad_x, m_rad_y, m_rad_b, m_rad_coef;
	std::vector<pending_step> m_pending;
};

/// Time derivative -div F of the conserved state over the owned cells of `U`'s block.
/// `U` must have current ghosts (halo >= 3). Exposed for tests.
void rhs_advective(
    const task_context& ctx, field_view<const double> U, field_view<double> L, const layout& l, const eos& e, const std::array<double, 3>& dx);

/// Fills the physical-boundary ghost layers of `U` from its owned cells.
void apply_boundaries(field_view<double> U, const layout& l, const std::array<boundary_kind, 3>& kinds);

} // namespace taskgrid::hydro
