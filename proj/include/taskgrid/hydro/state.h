#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace taskgrid::hydro {

inline constexpr int max_components = 6; // rho, 3 momenta, E, E_rad

using state_vector = std::array<double, max_components>;

/// Component layout of the conserved state: rho, rho*u per axis, E, optionally E_rad.
struct layout {
	int dims = 1;
	bool radiation = false;

	int components() const { return dims + 2 + (radiation ? 1 : 0); }
	static constexpr int rho() { return 0; }
	static constexpr int mom(int axis) { return 1 + axis; }
	int energy() const { return 1 + dims; }
	int erad() const { return 2 + dims; }
};

struct eos {
	double gamma = 1.4;
};

struct primitive {
	double rho = 1;
	std::array<double, 3> u{0, 0, 0};
	double p = 1;
	double erad = 0;
};

/// Raised when a cell violates rho > 0, internal energy > 0, or E_rad >= 0.
class state_error : public std::runtime_error {
  public:
	using std::runtime_error::runtime_error;
};

/// Converts a conserved state; throws state_error (mentioning `where`) on invalid states.
primitive to_primitive(const state_vector& U, const layout& l, const eos& e, const char* where = "state");
state_vector to_conserved(const primitive& w, const layout& l, const eos& e);

double sound_speed(const primitive& w, const eos& e);

/// Physical flux of the Euler equations along `axis` (E_rad advected with the flow).
state_vector physical_flux(const primitive& w, const state_vector& U, const layout& l, int axis);

/// HLL flux with Davis wave-speed estimates. The E_rad component, if present, uses a
/// Lax-Friedrichs flux with the largest local signal speed.
state_vector hll_flux(const primitive& wl, const primitive& wr, const layout& l, const eos& e, int axis);

/// 1/2 (F_L + F_R) - 1/2 alpha (U_R - U_L), componentwise over n components.
state_vector lax_friedrichs_flux(const state_vector& ul, const state_vector& ur, const state_vector& fl, const state_vector& fr, double alpha, int n);

/// WENO5-Z reconstruction at the interface i+1/2 from the left-biased stencil v[0..4] = v_{i-2}..v_{i+2}.
double weno5z(double vm2, double vm1, double v0, double vp1, double vp2);

struct weno_weights {
	std::array<double, 3> beta;
	std::array<double, 3> omega; // normalized nonlinear weights
};
weno_weights weno5z_weights(double vm2, double vm1, double v0, double vp1, double vp2);

inline constexpr double weno_epsilon = 1e-40;

/// Heun's method on a scalar ODE y' = f(y): one step of size h.
template <typename F>
double heun_scalar(F&& f, double y, double h) {
	const double k0 = f(y);
	const double ys = y + h * k0;
	const double k1 = f(ys);
	return y + (0.5 * h) * (k0 + k1);
}

} // namespace taskgrid::hydro
