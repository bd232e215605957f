#include "taskgrid/hydro/state.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace taskgrid::hydro {

primitive to_primitive(const state_vector& U, const layout& l, const eos& e, const char* where) {
	primitive w;
	w.rho = U[layout::rho()];
	if(!(w.rho > 0)) throw state_error(std::string(where) + ": non-positive density " + std::to_string(w.rho));
	double kinetic = 0;
	for(int a = 0; a < l.dims; ++a) {
		w.u[a] = U[layout::mom(a)] / w.rho;
		kinetic += U[layout::mom(a)] * w.u[a];
	}
	const double internal = U[l.energy()] - 0.5 * kinetic;
	w.p = (e.gamma - 1.0) * internal;
	if(!(w.p > 0)) throw state_error(std::string(where) + ": non-positive pressure " + std::to_string(w.p));
	if(l.radiation) {
		w.erad = U[l.erad()];
		if(!(w.erad >= 0)) throw state_error(std::string(where) + ": negative radiation energy " + std::to_string(w.erad));
	}
	return w;
}

state_vector to_conserved(const primitive& w, const layout& l, const eos& e) {
	state_vector U{};
	U[layout::rho()] = w.rho;
	double kinetic = 0;
	for(int a = 0; a < l.dims; ++a) {
		U[layout::mom(a)] = w.rho * w.u[a];
		kinetic += U[layout::mom(a)] * w.u[a];
	}
	U[l.energy()] = w.p / (e.gamma - 1.0) + 0.5 * kinetic;
	if(l.radiation) U[l.erad()] = w.erad;
	return U;
}

double sound_speed(const primitive& w, const eos& e) { return std::sqrt(e.gamma * w.p / w.rho); }

state_vector physical_flux(const primitive& w, const state_vector& U, const layout& l, int axis) {
	state_vector F{};
	const double un = w.u[axis];
	F[layout::rho()] = U[layout::rho()] * un;
	for(int a = 0; a < l.dims; ++a) F[layout::mom(a)] = U[layout::mom(a)] * un;
	F[layout::mom(axis)] += w.p;
	F[l.energy()] = (U[l.energy()] + w.p) * un;
	if(l.radiation) F[l.erad()] = U[l.erad()] * un;
	return F;
}

state_vector lax_friedrichs_flux(
    const state_vector& ul, const state_vector& ur, const state_vector& fl, const state_vector& fr, double alpha, int n) {
	state_vector F{};
	for(int c = 0; c < n; ++c) F[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * alpha * (ur[c] - ul[c]);
	return F;
}

state_vector hll_flux(const primitive& wl, const primitive& wr, const layout& l, const eos& e, int axis) {
	const auto ul = to_conserved(wl, l, e);
	const auto ur = to_conserved(wr, l, e);
	const auto fl = physical_flux(wl, ul, l, axis);
	const auto fr = physical_flux(wr, ur, l, axis);
	const double al = sound_speed(wl, e);
	const double ar = sound_speed(wr, e);
	const double sl = std::min(wl.u[axis] - al, wr.u[axis] - ar);
	const double sr = std::max(wl.u[axis] + al, wr.u[axis] + ar);
	const int hydro_components = l.dims + 2;

	state_vector F{};
	if(sl >= 0) {
		F = fl;
	} else if(sr <= 0) {
		F = fr;
	} else if(sr == sl) {
		for(int c = 0; c < hydro_components; ++c) F[c] = 0.5 * (fl[c] + fr[c]);
	} else {
		for(int c = 0; c < hydro_components; ++c) F[c] = (sr * fl[c] - sl * fr[c] + sl * sr * (ur[c] - ul[c])) / (sr - sl);
	}
	if(l.radiation) {
		const double alpha = std::max(std::abs(wl.u[axis]) + al, std::abs(wr.u[axis]) + ar);
		const int c = l.erad();
		F[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * alpha * (ur[c] - ul[c]);
	}
	return F;
}

weno_weights weno5z_weights(double vm2, double vm1, double v0, double vp1, double vp2) {
	constexpr double c13 = 13.0 / 12.0;
	const double d0 = vm2 - 2.0 * vm1 + v0;
	const double e0 = vm2 - 4.0 * vm1 + 3.0 * v0;
	const double d1 = vm1 - 2.0 * v0 + vp1;
	const double e1 = vm1 - vp1;
	const double d2 = v0 - 2.0 * vp1 + vp2;
	const double e2 = 3.0 * v0 - 4.0 * vp1 + vp2;
	weno_weights w;
	w.beta = {c13 * d0 * d0 + 0.25 * e0 * e0, c13 * d1 * d1 + 0.25 * e1 * e1, c13 * d2 * d2 + 0.25 * e2 * e2};
	const double tau5 = std::abs(w.beta[0] - w.beta[2]);
	constexpr std::array<double, 3> ideal{0.1, 0.6, 0.3};
	std::array<double, 3> alpha{};
	double sum = 0;
	for(int k = 0; k < 3; ++k) {
		alpha[k] = ideal[k] * (1.0 + tau5 / (w.beta[k] + weno_epsilon));
		sum += alpha[k];
	}
	for(int k = 0; k < 3; ++k) w.omega[k] = alpha[k] / sum;
	return w;
}

double weno5z(double vm2, double vm1, double v0, double vp1, double vp2) {
	const auto w = weno5z_weights(vm2, vm1, v0, vp1, vp2);
	const double q0 = (2.0 * vm2 - 7.0 * vm1 + 11.0 * v0) / 6.0;
	const double q1 = (-vm1 + 5.0 * v0 + 2.0 * vp1) / 6.0;
	const double q2 = (2.0 * v0 + 5.0 * vp1 - vp2) / 6.0;
	return w.omega[0] * q0 + w.omega[1] * q1 + w.omega[2] * q2;
}

} // namespace taskgrid::hydro
