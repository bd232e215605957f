// Compiled with -mavx2 (and without -mfma): every lane performs exactly the scalar operation sequence.
#include "taskgrid/kernels/kernels.h"

#include "kernels_impl.h"

#include <immintrin.h>

namespace taskgrid::kernels {

namespace {

	constexpr index_t lanes = 4;

	void gs_row(double* p, const double* ps, const double* pn, const double* f, index_t n, int first_parity, double cx, double cy, double diag) {
		const __m256d vcx = _mm256_set1_pd(cx);
		const __m256d vcy = _mm256_set1_pd(cy);
		const __m256d vdiag = _mm256_set1_pd(diag);
		// Lanes 0 and 2 share the parity of the chunk start; chunks start at even offsets.
		const __m256d even_mask = _mm256_castsi256_pd(_mm256_setr_epi64x(-1, 0, -1, 0));
		const __m256d odd_mask = _mm256_castsi256_pd(_mm256_setr_epi64x(0, -1, 0, -1));
		const __m256d update = (first_parity & 1) == 0 ? even_mask : odd_mask;
		index_t i = 0;
		for(; i + lanes <= n; i += lanes) {
			const __m256d w = _mm256_loadu_pd(p + i - 1);
			const __m256d e = _mm256_loadu_pd(p + i + 1);
			const __m256d s = _mm256_loadu_pd(ps + i);
			const __m256d nn = _mm256_loadu_pd(pn + i);
			const __m256d x = _mm256_mul_pd(_mm256_add_pd(w, e), vcx);
			const __m256d y = _mm256_mul_pd(_mm256_add_pd(s, nn), vcy);
			const __m256d v = _mm256_div_pd(_mm256_sub_pd(_mm256_add_pd(x, y), _mm256_loadu_pd(f + i)), vdiag);
			_mm256_storeu_pd(p + i, _mm256_blendv_pd(_mm256_loadu_pd(p + i), v, update));
		}
		for(index_t k = i + ((first_parity + i) & 1); k < n; k += 2) {
			p[k] = detail::gs_update(p[k - 1], p[k + 1], ps[k], pn[k], f[k], cx, cy, diag);
		}
	}

	void poisson_residual_sq_row(double* out, const double* p, const double* ps, const double* pn, const double* f, index_t n, double cx, double cy) {
		const __m256d vcx = _mm256_set1_pd(cx);
		const __m256d vcy = _mm256_set1_pd(cy);
		const __m256d two = _mm256_set1_pd(2.0);
		index_t i = 0;
		for(; i + lanes <= n; i += lanes) {
			const __m256d two_p = _mm256_mul_pd(two, _mm256_loadu_pd(p + i));
			const __m256d x = _mm256_mul_pd(_mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(p + i - 1), _mm256_loadu_pd(p + i + 1)), two_p), vcx);
			const __m256d y = _mm256_mul_pd(_mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(ps + i), _mm256_loadu_pd(pn + i)), two_p), vcy);
			const __m256d r = _mm256_sub_pd(_mm256_add_pd(x, y), _mm256_loadu_pd(f + i));
			_mm256_storeu_pd(out + i, _mm256_mul_pd(r, r));
		}
		for(; i < n; ++i) {
			const double r = detail::laplace_residual(p[i - 1], p[i + 1], ps[i], pn[i], p[i], f[i], cx, cy);
			out[i] = r * r;
		}
	}

	void jacobi_row(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n) {
		index_t i = 0;
		for(; i + lanes <= n; i += lanes) {
			__m256d acc = _mm256_loadu_pd(rhs + i);
			for(int t = 0; t < terms; ++t) {
				acc = _mm256_sub_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(coef[t] + i), _mm256_loadu_pd(x + i + offset[t])));
			}
			_mm256_storeu_pd(out + i, _mm256_div_pd(acc, _mm256_loadu_pd(diag + i)));
		}
		for(; i < n; ++i) {
			double acc = rhs[i];
			for(int t = 0; t < terms; ++t) acc = acc - coef[t][i] * x[i + offset[t]];
			out[i] = acc / diag[i];
		}
	}

	void stencil_residual_row(
	    double* out, const double* x, const double* rhs, const double* diag, const double* const* coef, const index_t* offset, int terms, index_t n) {
		index_t i = 0;
		for(; i + lanes <= n; i += lanes) {
			__m256d acc = _mm256_mul_pd(_mm256_loadu_pd(diag + i), _mm256_loadu_pd(x + i));
			for(int t = 0; t < terms; ++t) {
				acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(coef[t] + i), _mm256_loadu_pd(x + i + offset[t])));
			}
			_mm256_storeu_pd(out + i, _mm256_sub_pd(acc, _mm256_loadu_pd(rhs + i)));
		}
		for(; i < n; ++i) {
			double acc = diag[i] * x[i];
			for(int t = 0; t < terms; ++t) acc = acc + coef[t][i] * x[i + offset[t]];
			out[i] = acc - rhs[i];
		}
	}

} // namespace

const kernel_table* avx2_kernels() {
	static const kernel_table table{"avx2", gs_row, poisson_residual_sq_row, jacobi_row, stencil_residual_row};
	return &table;
}

} // namespace taskgrid::kernels
