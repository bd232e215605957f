#include "taskgrid/hydro/config.h"

#include <charconv>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskgrid::hydro {

std::string_view to_string(boundary_kind b) {
	switch(b) {
	case boundary_kind::periodic:
		return "periodic";
	case boundary_kind::outflow:
		return "outflow";
	case boundary_kind::reflecting:
		return "reflecting";
	}
	return "?";
}

boundary_kind parse_boundary_kind(std::string_view s) {
	if(s == "periodic") return boundary_kind::periodic;
	if(s == "outflow") return boundary_kind::outflow;
	if(s == "reflecting") return boundary_kind::reflecting;
	throw std::invalid_argument("unknown boundary '" + std::string(s) + "' (expected periodic, outflow, or reflecting)");
}

config scenario_defaults(std::string_view name) {
	config c;
	c.scenario = std::string(name);
	if(name == "sod") return c;
	if(name == "rankine_hugoniot") {
		c.dims = 3;
		c.extents = {256, 4, 4};
		c.length = {1.0, 4.0 / 256.0, 4.0 / 256.0};
		c.boundary = {boundary_kind::outflow, boundary_kind::periodic, boundary_kind::periodic};
		c.right = primitive{1.0, {0, 0, 0}, 1.0, 1.0};
		c.interface = 0.25;
		c.mach = 2.0;
		c.end_time = 0.2;
		return c;
	}
	if(name == "smooth_wave") {
		c.extents = {128, 1, 1};
		c.boundary = {boundary_kind::periodic, boundary_kind::periodic, boundary_kind::periodic};
		c.left = primitive{1.0, {0, 0, 0}, 1.0, 1.0};
		c.end_time = 1.0;
		return c;
	}
	if(name == "uniform") {
		c.extents = {32, 1, 1};
		c.boundary = {boundary_kind::periodic, boundary_kind::periodic, boundary_kind::periodic};
		c.left = primitive{1.0, {0, 0, 0}, 1.0, 1.0};
		c.end_time = 0.1;
		return c;
	}
	throw std::invalid_argument("unknown scenario '" + std::string(name) + "' (expected sod, rankine_hugoniot, smooth_wave, or uniform)");
}

namespace {

	std::string trim(std::string_view s) {
		const auto b = s.find_first_not_of(" \t\r");
		if(b == std::string_view::npos) return {};
		const auto e = s.find_last_not_of(" \t\r");
		return std::string(s.substr(b, e - b + 1));
	}

	double to_double(std::string_view key, std::string_view v) {
		double d = 0;
		const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
		if(ec != std::errc{} || ptr != v.data() + v.size())
			throw std::invalid_argument("setting '" + std::string(key) + "': not a number: '" + std::string(v) + "'");
		return d;
	}

	long long to_int(std::string_view key, std::string_view v) {
		long long i = 0;
		const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
		if(ec != std::errc{} || ptr != v.data() + v.size())
			throw std::invalid_argument("setting '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
		return i;
	}

	bool to_bool(std::string_view key, std::string_view v) {
		if(v == "1" || v == "true" || v == "on" || v == "yes") return true;
		if(v == "0" || v == "false" || v == "off" || v == "no") return false;
		throw std::invalid_argument("setting '" + std::string(key) + "': not a boolean: '" + std::string(v) + "'");
	}

	std::vector<std::string> split_list(std::string_view v) {
		std::vector<std::string> out;
		std::string cur;
		for(const char ch : v) {
			if(ch == ',' || ch == 'x' || ch == ' ') {
				if(!cur.empty()) out.push_back(cur);
				cur.clear();
			} else {
				cur.push_back(ch);
			}
		}
		if(!cur.empty()) out.push_back(cur);
		return out;
	}

	void set_state(primitive& w, std::string_view key, std::string_view field, std::string_view v) {
		if(field == "rho")
			w.rho = to_double(key, v);
		else if(field == "u")
			w.u[0] = to_double(key, v);
		else if(field == "v")
			w.u[1] = to_double(key, v);
		else if(field == "w")
			w.u[2] = to_double(key, v);
		else if(field == "p")
			w.p = to_double(key, v);
		else if(field == "erad")
			w.erad = to_double(key, v);
		else
			throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
	}

} // namespace

void apply_setting(config& c, std::string_view key, std::string_view value) {
	const std::string v = trim(value);
	if(key == "scenario") {
		c = scenario_defaults(v);
	} else if(key == "dims") {
		c.dims = static_cast<int>(to_int(key, v));
	} else if(key == "extents" || key == "cells") {
		const auto parts = split_list(v);
		if(parts.empty() || parts.size() > 3) throw std::invalid_argument("setting 'extents': expected 1 to 3 values");
		c.extents = {1, 1, 1};
		for(std::size_t a = 0; a < parts.size(); ++a) c.extents[a] = to_int(key, parts[a]);
		if(key == "extents") c.dims = static_cast<int>(parts.size());
	} else if(key == "length") {
		const auto parts = split_list(v);
		if(parts.empty() || parts.size() > 3) throw std::invalid_argument("setting 'length': expected 1 to 3 values");
		for(std::size_t a = 0; a < parts.size(); ++a) c.length[a] = to_double(key, parts[a]);
	} else if(key == "boundary") {
		const auto parts = split_list(v);
		if(parts.empty() || parts.size() > 3) throw std::invalid_argument("setting 'boundary': expected 1 to 3 values");
		for(std::size_t a = 0; a < parts.size(); ++a) c.boundary[a] = parse_boundary_kind(parts[a]);
	} else if(key == "colors" || key == "color_grid") {
		const auto parts = split_list(v);
		if(parts.empty() || parts.size() > 3) throw std::invalid_argument("setting 'colors': expected 1 to 3 values");
		c.colors = {1, 1, 1};
		for(std::size_t a = 0; a < parts.size(); ++a) c.colors[a] = static_cast<int>(to_int(key, parts[a]));
	} else if(key == "gamma") {
		c.gamma = to_double(key, v);
	} else if(key == "cfl") {
		c.cfl = to_double(key, v);
	} else if(key == "end_time") {
		c.end_time = to_double(key, v);
	} else if(key == "max_steps" || key == "steps") {
		c.max_steps = static_cast<int>(to_int(key, v));
	} else if(key == "radiation") {
		c.radiation = to_bool(key, v);
	} else if(key == "kappa") {
		c.rad.kappa = to_double(key, v);
	} else if(key == "light_speed") {
		c.rad.light_speed = to_double(key, v);
	} else if(key == "fixed_diffusion") {
		c.rad.fixed_diffusion = to_double(key, v);
	} else if(key == "jacobi_tolerance") {
		c.jacobi_tolerance = to_double(key, v);
	} else if(key == "jacobi_max_iterations") {
		c.jacobi_max_iterations = static_cast<int>(to_int(key, v));
	} else if(key == "interface") {
		c.interface = to_double(key, v);
	} else if(key == "mach") {
		c.mach = to_double(key, v);
	} else if(key == "amplitude") {
		c.amplitude = to_double(key, v);
	} else if(key == "velocity") {
		c.velocity = to_double(key, v);
	} else if(key == "erad_pulse") {
		c.erad_pulse = to_double(key, v);
	} else if(key == "erad_pulse_width") {
		c.erad_pulse_width = to_double(key, v);
	} else if(key == "output_every") {
		c.output_every = static_cast<int>(to_int(key, v));
	} else if(key == "benchmark") {
		c.benchmark = to_bool(key, v);
	} else if(key.starts_with("left.")) {
		set_state(c.left, key, key.substr(5), v);
	} else if(key.starts_with("right.")) {
		set_state(c.right, key, key.substr(6), v);
	} else {
		throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
	}
}

config parse_config(std::istream& in, config base) {
	std::string line;
	int lineno = 0;
	std::vector<std::pair<std::string, std::string>> settings;
	while(std::getline(in, line)) {
		++lineno;
		if(const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
		if(trim(line).empty()) continue;
		const auto eq = line.find('=');
		if(eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
		settings.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
	}
	// The scenario resets defaults, so it goes first regardless of its position.
	for(const auto& [k, v] : settings)
		if(k == "scenario") apply_setting(base, k, v);
	for(const auto& [k, v] : settings)
		if(k != "scenario") apply_setting(base, k, v);
	return base;
}

void validate(const config& c) {
	if(c.dims < 1 || c.dims > 3) throw std::invalid_argument("hydro: dims must be 1 to 3");
	for(int a = 0; a < c.dims; ++a) {
		if(c.extents[a] < 1) throw std::invalid_argument("hydro: extents must be positive");
		if(!(c.length[a] > 0)) throw std::invalid_argument("hydro: length must be positive");
	}
	if(!(c.gamma > 1)) throw std::invalid_argument("hydro: gamma must exceed 1");
	if(!(c.cfl > 0 && c.cfl <= 1)) throw std::invalid_argument("hydro: CFL must lie in (0, 1]");
	if(c.max_steps < 0) throw std::invalid_argument("hydro: max_steps must be >= 0");
	if(c.radiation && !(c.rad.kappa > 0)) throw std::invalid_argument("hydro: kappa must be positive");
	if(c.radiation && !(c.jacobi_tolerance > 0)) throw std::invalid_argument("hydro: jacobi tolerance must be positive");
}

} // namespace taskgrid::hydro
