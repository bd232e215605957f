#pragma once

#include <cstddef>
#include <vector>

namespace taskgrid::validation {

/// Row-major dense matrix.
struct dense_matrix {
	std::size_t rows = 0;
	std::size_t cols = 0;
	std::vector<double> a;

	dense_matrix() = default;
	dense_matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
	double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
	double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

/// Solves A x = b by Gaussian elimination with partial pivoting. Throws std::runtime_error if A is singular.
std::vector<double> dense_solve(dense_matrix A, std::vector<double> b);

std::vector<double> multiply(const dense_matrix& A, const std::vector<double>& x);

} // namespace taskgrid::validation
