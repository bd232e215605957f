#include "taskgrid/hydro/diffusion.h"

#include "taskgrid/kernels/kernels.h"

#include <cmath>
#include <stdexcept>

namespace taskgrid::hydro {

double flux_limiter(double R) { return (2.0 + R) / (6.0 + 3.0 * R + R * R); }

double face_diffusion(const radiation_params& p, double rho_lo, double rho_hi, double e_lo, double e_hi, double d) {
	if(p.fixed_diffusion > 0) return p.fixed_diffusion;
	const double rho = 0.5 * (rho_lo + rho_hi);
	const double e = 0.5 * (e_lo + e_hi);
	const double opacity = p.kappa * rho;
	const double grad = std::abs(e_hi - e_lo) / d;
	// A vanishing energy density with a gradient is the free-streaming limit (R -> inf, lambda R -> 1).
	const double R = e > 0 ? grad / (opacity * e) : (grad > 0 ? INFINITY : 0.0);
	const double lambda = std::isinf(R) ? 0.0 : flux_limiter(R);
	return p.light_speed * lambda / opacity;
}

std::vector<double> stencil_operator::apply(const std::vector<double>& x) const {
	const std::array<index_t, 3> stride{1, extents[0], extents[0] * extents[1]};
	std::vector<double> y(x.size());
	for(index_t k = 0; k < extents[2]; ++k)
		for(index_t j = 0; j < extents[1]; ++j)
			for(index_t i = 0; i < extents[0]; ++i) {
				const std::array<index_t, 3> idx{i, j, k};
				const index_t c = (k * extents[1] + j) * extents[0] + i;
				double acc = diag[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
				for(int a = 0; a < dims; ++a) {
					if(idx[a] > 0)
						acc += coef[static_cast<std::size_t>(2 * a)][static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c - stride[a])];
					if(idx[a] + 1 < extents[a]) {
						acc += coef[static_cast<std::size_t>(2 * a + 1)][static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c + stride[a])];
					}
				}
				y[static_cast<std::size_t>(c)] = acc;
			}
	return y;
}

jacobi_result jacobi_solve(const stencil_operator& A, const std::vector<double>& b, std::vector<double> guess, double tol, int max_iters) {
	const index_t n = A.cells();
	if(static_cast<index_t>(b.size()) != n || static_cast<index_t>(guess.size()) != n) throw std::invalid_argument("jacobi_solve: size mismatch");
	if(static_cast<int>(A.coef.size()) != 2 * A.dims) throw std::invalid_argument("jacobi_solve: expected 2 * dims coefficient arrays");

	// Padded copy of x with one zero layer per active axis, so the row kernels can read across the edge.
	std::array<index_t, 3> pad{1, 1, 1};
	for(int a = 0; a < A.dims; ++a) pad[a] = A.extents[a] + 2;
	const std::array<index_t, 3> pstride{1, pad[0], pad[0] * pad[1]};
	const auto padded_index = [&](index_t i, index_t j, index_t k) {
		return (k + (A.dims > 2 ? 1 : 0)) * pstride[2] + (j + (A.dims > 1 ? 1 : 0)) * pstride[1] + (i + 1);
	};
	std::vector<double> x(static_cast<std::size_t>(pad[0] * pad[1] * pad[2]), 0.0);
	const index_t nx = A.extents[0];
	for(index_t k = 0; k < A.extents[2]; ++k)
		for(index_t j = 0; j < A.extents[1]; ++j)
			for(index_t i = 0; i < nx; ++i)
				x[static_cast<std::size_t>(padded_index(i, j, k))] = guess[static_cast<std::size_t>((k * A.extents[1] + j) * nx + i)];

	std::vector<index_t> offset;
	for(int a = 0; a < A.dims; ++a) {
		offset.push_back(-pstride[a]);
		offset.push_back(pstride[a]);
	}
	const auto& kern = kernels::active();
	double bnorm = 0;
	for(const double v : b) bnorm += v * v;
	bnorm = std::sqrt(bnorm);

	jacobi_result res;
	std::vector<double> next = x;
	std::vector<double> row(static_cast<std::size_t>(nx));
	std::vector<const double*> coef(offset.size());
	for(;;) {
		double rnorm = 0;
		for(index_t k = 0; k < A.extents[2]; ++k)
			for(index_t j = 0; j < A.extents[1]; ++j) {
				const index_t c0 = (k * A.extents[1] + j) * nx;
				for(std::size_t t = 0; t < offset.size(); ++t) coef[t] = A.coef[t].data() + c0;
				const double* xr = x.data() + padded_index(0, j, k);
				kern.stencil_residual_row(
				    row.data(), xr, b.data() + c0, A.diag.data() + c0, coef.data(), offset.data(), static_cast<int>(offset.size()), nx);
				for(const double r : row) rnorm += r * r;
				kern.jacobi_row(next.data() + padded_index(0, j, k), xr, b.data() + c0, A.diag.data() + c0, coef.data(), offset.data(),
				    static_cast<int>(offset.size()), nx);
			}
		res.relative_residual = bnorm > 0 ? std::sqrt(rnorm) / bnorm : std::sqrt(rnorm);
		if(res.relative_residual < tol) {
			res.converged = true;
			break;
		}
		if(res.iterations >= max_iters) break;
		std::swap(x, next);
		++res.iterations;
	}
	res.x.resize(static_cast<std::size_t>(n));
	for(index_t k = 0; k < A.extents[2]; ++k)
		for(index_t j = 0; j < A.extents[1]; ++j)
			for(index_t i = 0; i < nx; ++i)
				res.x[static_cast<std::size_t>((k * A.extents[1] + j) * nx + i)] = x[static_cast<std::size_t>(padded_index(i, j, k))];
	return res;
}

} // namespace taskgrid::hydro
