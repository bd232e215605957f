#pragma once

#include "taskgrid/topology.h"

#include <string_view>

namespace taskgrid::kernels {

/// Row kernels for the numeric inner loops. Every variant performs the same IEEE
/// operations in the same order (no fused multiply-add), so all variants produce
/// bitwise-identical results; the vector ones merely process several cells at once.
///
/// Pointers address cell 0 of the row; neighbors along the row are at +-1.
struct kernel_table {
	std::string_view name;

	/// Red-black Gauss-Seidel half-sweep over one row of n cells. Cell i is updated iff
	/// (first_parity + i) is even:
	///   p[i] = ((p[i-1] + p[i+1]) * cx + (ps[i] + pn[i]) * cy - f[i]) / diag
	/// Cells of the other parity are read but never written.
	void (*gs_row)(double* p, const double* ps, const double* pn, const double* f, index_t n, int first_parity, double cx, double cy, double diag);

	/// Squared residual of the 5-point Laplacian per cell:
	///   r = ((p[i-1] + p[i+1] - 2 p[i]) * cx + (ps[i] + pn[i] - 2 p[i]) * cy) - f[i];  out[i] = r * r
	void (*poisson_residual_sq_row)(
	    double* out, const double* p, const double* ps, const double* pn, const double* f, index_t n, double cx, double cy);

	/// Jacobi update for a stencil operator  diag[i] x[i] + sum_t coef[t][i] x[i + offset[t]] = rhs[i]:
	///   out[i] = (rhs[i] - coef[0][i] x[i+offset[0]] - coef[1][i] x[i+offset[1]] - ...) / diag[i]
	void (*jacobi_row)(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n);

	/// Residual of the same operator:  out[i] = (diag[i] x[i] + sum_t coef[t][i] x[i+offset[t]]) - rhs[i]
	void (*stencil_residual_row)(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n);
};

enum class isa { scalar, avx2 };

std::string_view to_string(isa i);

const kernel_table& scalar_kernels();
/// nullptr when the build has no AVX2 variant.
const kernel_table* avx2_kernels();

/// Whether `i` is both compiled in and supported by the running CPU.
bool supported(isa i);

/// Table for a specific ISA; throws std::runtime_error if unsupported.
const kernel_table& kernels_for(isa i);

/// Best supported table, unless the TASKGRID_ISA environment variable ("scalar" or "avx2")
/// requests a specific one. Resolved once per process.
const kernel_table& active();

} // namespace taskgrid::kernels
