#include "taskgrid/kernels/kernels.h"

#include "kernels_impl.h"

namespace taskgrid::kernels {

namespace {

	void gs_row(double* p, const double* ps, const double* pn, const double* f, index_t n, int first_parity, double cx, double cy, double diag) {
		for(index_t i = first_parity & 1; i < n; i += 2) {
			p[i] = detail::gs_update(p[i - 1], p[i + 1], ps[i], pn[i], f[i], cx, cy, diag);
		}
	}

	void poisson_residual_sq_row(double* out, const double* p, const double* ps, const double* pn, const double* f, index_t n, double cx, double cy) {
		for(index_t i = 0; i < n; ++i) {
			const double r = detail::laplace_residual(p[i - 1], p[i + 1], ps[i], pn[i], p[i], f[i], cx, cy);
			out[i] = r * r;
		}
	}

	void jacobi_row(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n) {
		for(index_t i = 0; i < n; ++i) {
			double acc = rhs[i];
			for(int t = 0; t < terms; ++t) acc = acc - coef[t][i] * x[i + offset[t]];
			out[i] = acc / diag[i];
		}
	}

	void stencil_residual_row(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n) {
		for(index_t i = 0; i < n; ++i) {
			double acc = diag[i] * x[i];
			for(int t = 0; t < terms; ++t) acc = acc + coef[t][i] * x[i + offset[t]];
			out[i] = acc - rhs[i];
		}
	}

} // namespace

const kernel_table& scalar_kernels() {
	static const kernel_table table{"scalar", gs_row, poisson_residual_sq_row, jacobi_row, stencil_residual_row};
	return table;
}

} // namespace taskgrid::kernels
