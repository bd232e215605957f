#pragma once

// Scalar formulas shared by all kernel variants; the vector code mirrors their operation order.

namespace taskgrid::kernels::detail {

inline double gs_update(double pw, double pe, double ps, double pn, double f, double cx, double cy, double diag) {
	const double x = (pw + pe) * cx;
	const double y = (ps + pn) * cy;
	return ((x + y) - f) / diag;
}

inline double laplace_residual(double pw, double pe, double ps, double pn, double p, double f, double cx, double cy) {
	const double two_p = 2.0 * p;
	const double x = ((pw + pe) - two_p) * cx;
	const double y = ((ps + pn) - two_p) * cy;
	return (x + y) - f;
}

} // namespace taskgrid::kernels::detail
