#pragma once

namespace taskgrid::validation {

struct primitive_1d {
	double rho = 1;
	double u = 0;
	double p = 1;
};

/// Exact solution of the 1D Riemann problem for an ideal gas (two-rarefaction / two-shock
/// Newton iteration on the star pressure, then wave-pattern sampling).
class exact_riemann {
  public:
	exact_riemann(primitive_1d left, primitive_1d right, double gamma);

	double star_pressure() const { return m_pstar; }
	double star_velocity() const { return m_ustar; }

	/// State at similarity coordinate s = (x - x0) / t.
	primitive_1d sample(double s) const;

  private:
	double pressure_function(double p, const primitive_1d& k, double a, double& derivative) const;

	primitive_1d m_l, m_r;
	double m_gamma;
	double m_al, m_ar;
	double m_pstar = 0, m_ustar = 0;
};

/// Shock speed from the Rankine-Hugoniot conditions for a shock moving into a quiescent-or-moving
/// pre-shock state `ahead` with post-shock pressure p_post (right-moving if `right_moving`).
double shock_speed(const primitive_1d& ahead, double p_post, double gamma, bool right_moving);

/// Post-shock state behind a shock of Mach number `mach` (relative to `ahead`) moving to the right.
primitive_1d post_shock_state(const primitive_1d& ahead, double mach, double gamma);

} // namespace taskgrid::validation
