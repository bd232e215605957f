#pragma once

#include "taskgrid/hydro/diffusion.h"
#include "taskgrid/hydro/state.h"
#include "taskgrid/topology.h"

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>

namespace taskgrid::hydro {

enum class boundary_kind { periodic, outflow, reflecting };

std::string_view to_string(boundary_kind b);
boundary_kind parse_boundary_kind(std::string_view s);

struct config {
	std::string scenario = "sod";
	int dims = 1;
	std::array<index_t, 3> extents{400, 1, 1};
	std::array<double, 3> length{1.0, 1.0, 1.0};
	std::array<boundary_kind, 3> boundary{boundary_kind::outflow, boundary_kind::periodic, boundary_kind::periodic};
	/// Colors per axis; all zeros selects a balanced grid for the runtime's rank count.
	std::array<int, 3> colors{0, 0, 0};

	double gamma = 1.4;
	double cfl = 0.5;
	/// Steps are clipped to land on end_time; <= 0 disables the limit.
	double end_time = 0.2;
	int max_steps = 1000000;

	bool radiation = false;
	radiation_params rad;
	double jacobi_tolerance = 1e-10;
	int jacobi_max_iterations = 20000;

	// Scenario parameters.
	primitive left{1.0, {0, 0, 0}, 1.0, 1.0};
	primitive right{0.125, {0, 0, 0}, 0.1, 1.0};
	double interface = 0.5; // discontinuity position along x (fraction of length)
	double mach = 2.0; // rankine_hugoniot shock Mach number relative to the right state
	double amplitude = 0.2; // smooth_wave density amplitude
	double velocity = 1.0; // smooth_wave advection speed
	double erad_pulse = 0.0; // amplitude of a Gaussian E_rad pulse added to the uniform value
	double erad_pulse_width = 0.1;

	int output_every = 0;
	bool benchmark = false;
};

/// Defaults for a named scenario (sod, rankine_hugoniot, smooth_wave, uniform).
/// Throws std::invalid_argument for unknown names.
config scenario_defaults(std::string_view name);

/// Applies one `key = value` setting; throws std::invalid_argument for unknown keys or bad values.
void apply_setting(config& cfg, std::string_view key, std::string_view value);

/// Reads `key = value` lines ('#' starts a comment). A `scenario` key, if present, first resets
/// the configuration to that scenario's defaults.
config parse_config(std::istream& in, config base);

/// Validates extents, CFL, gamma and boundary consistency; throws std::invalid_argument.
void validate(const config& cfg);

} // namespace taskgrid::hydro
