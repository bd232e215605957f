#include "taskgrid/validation/riemann.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace taskgrid::validation {

exact_riemann::exact_riemann(primitive_1d left, primitive_1d right, double gamma) : m_l(left), m_r(right), m_gamma(gamma) {
	if(left.rho <= 0 || right.rho <= 0 || left.p <= 0 || right.p <= 0) throw std::invalid_argument("exact_riemann: non-positive state");
	m_al = std::sqrt(gamma * left.p / left.rho);
	m_ar = std::sqrt(gamma * right.p / right.rho);
	const double du = right.u - left.u;
	if(2.0 * (m_al + m_ar) / (gamma - 1.0) <= du) throw std::invalid_argument("exact_riemann: vacuum generated");

	// Two-rarefaction initial guess, then Newton iteration on f_L(p) + f_R(p) + du = 0.
	const double z = (gamma - 1.0) / (2.0 * gamma);
	double p = std::pow((m_al + m_ar - 0.5 * (gamma - 1.0) * du) / (m_al / std::pow(left.p, z) + m_ar / std::pow(right.p, z)), 1.0 / z);
	p = std::max(p, 1e-14);
	for(int it = 0; it < 100; ++it) {
		double dl = 0, dr = 0;
		const double fl = pressure_function(p, m_l, m_al, dl);
		const double fr = pressure_function(p, m_r, m_ar, dr);
		const double next = std::max(p - (fl + fr + du) / (dl + dr), 1e-14);
		const double change = 2.0 * std::abs(next - p) / (next + p);
		p = next;
		if(change < 1e-15) break;
	}
	m_pstar = p;
	double dl = 0, dr = 0;
	m_ustar = 0.5 * (left.u + right.u) + 0.5 * (pressure_function(p, m_r, m_ar, dr) - pressure_function(p, m_l, m_al, dl));
}

double exact_riemann::pressure_function(double p, const primitive_1d& k, double a, double& derivative) const {
	const double g = m_gamma;
	if(p > k.p) { // shock
		const double A = 2.0 / ((g + 1.0) * k.rho);
		const double B = (g - 1.0) / (g + 1.0) * k.p;
		const double q = std::sqrt(A / (p + B));
		derivative = q * (1.0 - 0.5 * (p - k.p) / (B + p));
		return (p - k.p) * q;
	}
	// rarefaction
	const double pr = p / k.p;
	derivative = 1.0 / (k.rho * a) * std::pow(pr, -(g + 1.0) / (2.0 * g));
	return 2.0 * a / (g - 1.0) * (std::pow(pr, (g - 1.0) / (2.0 * g)) - 1.0);
}

primitive_1d exact_riemann::sample(double s) const {
	const double g = m_gamma;
	const double gm = (g - 1.0) / (g + 1.0);
	if(s <= m_ustar) {
		const auto& k = m_l;
		const double a = m_al;
		if(m_pstar > k.p) {
			const double pr = m_pstar / k.p;
			const double speed = k.u - a * std::sqrt((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g));
			if(s <= speed) return k;
			return {k.rho * (pr + gm) / (gm * pr + 1.0), m_ustar, m_pstar};
		}
		const double head = k.u - a;
		const double a_star = a * std::pow(m_pstar / k.p, (g - 1.0) / (2.0 * g));
		const double tail = m_ustar - a_star;
		if(s <= head) return k;
		if(s >= tail) return {k.rho * std::pow(m_pstar / k.p, 1.0 / g), m_ustar, m_pstar};
		const double c = 2.0 / (g + 1.0) + gm / a * (k.u - s);
		return {k.rho * std::pow(c, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (a + 0.5 * (g - 1.0) * k.u + s), k.p * std::pow(c, 2.0 * g / (g - 1.0))};
	}
	const auto& k = m_r;
	const double a = m_ar;
	if(m_pstar > k.p) {
		const double pr = m_pstar / k.p;
		const double speed = k.u + a * std::sqrt((g + 1.0) / (2.0 * g) * pr + (g - 1.0) / (2.0 * g));
		if(s >= speed) return k;
		return {k.rho * (pr + gm) / (gm * pr + 1.0), m_ustar, m_pstar};
	}
	const double head = k.u + a;
	const double a_star = a * std::pow(m_pstar / k.p, (g - 1.0) / (2.0 * g));
	const double tail = m_ustar + a_star;
	if(s >= head) return k;
	if(s <= tail) return {k.rho * std::pow(m_pstar / k.p, 1.0 / g), m_ustar, m_pstar};
	const double c = 2.0 / (g + 1.0) - gm / a * (k.u - s);
	return {k.rho * std::pow(c, 2.0 / (g - 1.0)), 2.0 / (g + 1.0) * (-a + 0.5 * (g - 1.0) * k.u + s), k.p * std::pow(c, 2.0 * g / (g - 1.0))};
}

double shock_speed(const primitive_1d& ahead, double p_post, double gamma, bool right_moving) {
	const double a = std::sqrt(gamma * ahead.p / ahead.rho);
	const double m = std::sqrt((gamma + 1.0) / (2.0 * gamma) * (p_post / ahead.p) + (gamma - 1.0) / (2.0 * gamma));
	return right_moving ? ahead.u + a * m : ahead.u - a * m;
}

primitive_1d post_shock_state(const primitive_1d& ahead, double mach, double gamma) {
	if(mach <= 1.0) throw std::invalid_argument("post_shock_state: Mach number must exceed 1");
	const double a = std::sqrt(gamma * ahead.p / ahead.rho);
	const double m2 = mach * mach;
	const double rho = ahead.rho * (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0);
	const double p = ahead.p * (2.0 * gamma * m2 - (gamma - 1.0)) / (gamma + 1.0);
	const double speed = ahead.u + mach * a;
	// Mass flux continuity in the shock frame: rho_a (u_a - S) = rho (u - S).
	const double u = speed + ahead.rho * (ahead.u - speed) / rho;
	return {rho, u, p};
}

} // namespace taskgrid::validation
