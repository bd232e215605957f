#pragma once

#include "taskgrid/topology.h"

#include <array>
#include <vector>

namespace taskgrid::hydro {

/// Levermore-Pomraning flux limiter lambda(R) = (2 + R) / (6 + 3R + R^2); lambda(0) = 1/3.
double flux_limiter(double R);

struct radiation_params {
	double light_speed = 1.0;
	double kappa = 1.0; // opacity per unit density
	/// When positive, D is this constant instead of the flux-limited coefficient.
	double fixed_diffusion = 0.0;
};

/// Diffusion coefficient at a face between cells with (rho, E_rad) on the low and high side
/// (d = face-normal spacing): D = c lambda(R) / (kappa rho_f), R = |dE/dx| / (kappa rho_f E_f),
/// with face averages rho_f, E_f.
double face_diffusion(const radiation_params& p, double rho_lo, double rho_hi, double e_lo, double e_hi, double d);

/// Linear operator on a structured grid:
///   diag[c] x[c] + sum_{axis, side} coef[2 axis + side][c] x[neighbor(c, axis, side)] = b[c].
/// Coefficients coupling to cells outside the grid must be zero.
struct stencil_operator {
	int dims = 1;
	std::array<index_t, 3> extents{1, 1, 1};
	std::vector<double> diag;
	std::vector<std::vector<double>> coef; // 2 * dims arrays, x-fastest cell order

	index_t cells() const { return extents[0] * extents[1] * extents[2]; }
	std::vector<double> apply(const std::vector<double>& x) const;
};

struct jacobi_result {
	std::vector<double> x;
	int iterations = 0; // Jacobi updates applied
	bool converged = false;
	double relative_residual = 0;
};

/// Pointwise Jacobi iteration until ||A x - b|| / ||b|| < tol (checked before every update).
jacobi_result jacobi_solve(const stencil_operator& A, const std::vector<double>& b, std::vector<double> guess, double tol, int max_iters);

/// Backward-Euler diffusion operator (I - dt div D grad) with zero-flux outer faces. `face_d`
/// returns D for the face between flat cells `lo` and `hi` (hi = lo + stride) along `axis`.
template <typename FaceD>
stencil_operator backward_euler_operator(int dims, std::array<index_t, 3> extents, std::array<double, 3> spacing, double dt, FaceD&& face_d) {
	stencil_operator A;
	A.dims = dims;
	A.extents = extents;
	const index_t n = A.cells();
	A.diag.assign(static_cast<std::size_t>(n), 1.0);
	A.coef.assign(static_cast<std::size_t>(2 * dims), std::vector<double>(static_cast<std::size_t>(n), 0.0));
	const std::array<index_t, 3> stride{1, extents[0], extents[0] * extents[1]};
	for(index_t k = 0; k < extents[2]; ++k)
		for(index_t j = 0; j < extents[1]; ++j)
			for(index_t i = 0; i < extents[0]; ++i) {
				const std::array<index_t, 3> idx{i, j, k};
				const index_t c = (k * extents[1] + j) * extents[0] + i;
				double diag = 1.0;
				for(int a = 0; a < dims; ++a) {
					const double scale = dt / (spacing[a] * spacing[a]);
					for(int s = 0; s < 2; ++s) {
						double w = 0;
						if(s == 0 && idx[a] > 0) w = scale * face_d(c - stride[a], c, a);
						if(s == 1 && idx[a] + 1 < extents[a]) w = scale * face_d(c, c + stride[a], a);
						A.coef[static_cast<std::size_t>(2 * a + s)][static_cast<std::size_t>(c)] = -w;
						diag = diag + w;
					}
				}
				A.diag[static_cast<std::size_t>(c)] = diag;
			}
	return A;
}

} // namespace taskgrid::hydro
