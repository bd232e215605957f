#include "taskgrid/validation/dense.h"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace taskgrid::validation {

std::vector<double> dense_solve(dense_matrix A, std::vector<double> b) {
	const std::size_t n = A.rows;
	if(A.cols != n || b.size() != n) throw std::invalid_argument("dense_solve: dimension mismatch");
	for(std::size_t k = 0; k < n; ++k) {
		std::size_t piv = k;
		for(std::size_t i = k + 1; i < n; ++i) {
			if(std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
		}
		if(A(piv, k) == 0.0) throw std::runtime_error("dense_solve: singular matrix");
		if(piv != k) {
			for(std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
			std::swap(b[k], b[piv]);
		}
		for(std::size_t i = k + 1; i < n; ++i) {
			const double m = A(i, k) / A(k, k);
			if(m == 0.0) continue;
			for(std::size_t j = k; j < n; ++j) A(i, j) -= m * A(k, j);
			b[i] -= m * b[k];
		}
	}
	std::vector<double> x(n);
	for(std::size_t ii = n; ii-- > 0;) {
		double s = b[ii];
		for(std::size_t j = ii + 1; j < n; ++j) s -= A(ii, j) * x[j];
		x[ii] = s / A(ii, ii);
	}
	return x;
}

std::vector<double> multiply(const dense_matrix& A, const std::vector<double>& x) {
	std::vector<double> y(A.rows, 0.0);
	for(std::size_t i = 0; i < A.rows; ++i)
		for(std::size_t j = 0; j < A.cols; ++j) y[i] += A(i, j) * x[j];
	return y;
}

} // namespace taskgrid::validation
