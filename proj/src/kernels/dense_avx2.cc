// Built with -mavx2 -mfma -ffp-contract=off. Only reached through the
// dispatch table after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "fishmpc/simd_kernels.h"

namespace fishmpc::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  const std::size_t vec_end = cols - cols % 4;
  for (std::size_t o = 0; o < y.size(); ++o) {
    const double* row = w.data() + o * cols;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < vec_end; i += 4) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(row + i),
                            _mm256_loadu_pd(x.data() + i), acc);
    }
    double s = hsum(acc);
    for (std::size_t i = vec_end; i < cols; ++i) s += row[i] * x[i];
    y[o] = s + b[o];
  }
}

void affine_transpose(std::span<const double> w, std::span<const double> dy,
                      std::span<double> dx) {
  const std::size_t cols = dx.size();
  const std::size_t vec_end = cols - cols % 4;
  for (std::size_t i = 0; i < cols; ++i) dx[i] = 0.0;
  for (std::size_t o = 0; o < dy.size(); ++o) {
    const double* row = w.data() + o * cols;
    const __m256d g = _mm256_set1_pd(dy[o]);
    for (std::size_t i = 0; i < vec_end; i += 4) {
      double* out = dx.data() + i;
      _mm256_storeu_pd(out, _mm256_fmadd_pd(_mm256_loadu_pd(row + i), g,
                                            _mm256_loadu_pd(out)));
    }
    for (std::size_t i = vec_end; i < cols; ++i) dx[i] += row[i] * dy[o];
  }
}

void outer_accumulate(std::span<const double> dy, std::span<const double> x,
                      std::span<double> g) {
  const std::size_t cols = x.size();
  const std::size_t vec_end = cols - cols % 4;
  for (std::size_t o = 0; o < dy.size(); ++o) {
    double* row = g.data() + o * cols;
    const __m256d d = _mm256_set1_pd(dy[o]);
    for (std::size_t i = 0; i < vec_end; i += 4) {
      _mm256_storeu_pd(row + i, _mm256_fmadd_pd(d, _mm256_loadu_pd(x.data() + i),
                                                _mm256_loadu_pd(row + i)));
    }
    for (std::size_t i = vec_end; i < cols; ++i) row[i] += dy[o] * x[i];
  }
}

// Mirrors the scalar operation order exactly (no FMA) so optimizer state
// is bit-identical across variants.
void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v,
                  const AdamWCoeffs& c) {
  const double decay = 1.0 - c.lr * c.weight_decay;
  const double inv_bc1 = 1.0 / c.bias_correction1;
  const double inv_bc2 = 1.0 / c.bias_correction2;
  const __m256d b1 = _mm256_set1_pd(c.beta1);
  const __m256d one_b1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d b2 = _mm256_set1_pd(c.beta2);
  const __m256d one_b2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d vdecay = _mm256_set1_pd(decay);
  const __m256d vlr = _mm256_set1_pd(c.lr);
  const __m256d vbc1 = _mm256_set1_pd(inv_bc1);
  const __m256d vbc2 = _mm256_set1_pd(inv_bc2);
  const __m256d veps = _mm256_set1_pd(c.epsilon);

  const std::size_t n = params.size();
  const std::size_t vec_end = n - n % 4;
  for (std::size_t i = 0; i < vec_end; i += 4) {
    const __m256d g = _mm256_loadu_pd(grads.data() + i);
    __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m.data() + i)),
                               _mm256_mul_pd(one_b1, g));
    __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v.data() + i)),
                               _mm256_mul_pd(one_b2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m.data() + i, mi);
    _mm256_storeu_pd(v.data() + i, vi);
    const __m256d m_hat = _mm256_mul_pd(mi, vbc1);
    const __m256d v_hat = _mm256_mul_pd(vi, vbc2);
    const __m256d step = _mm256_div_pd(
        m_hat, _mm256_add_pd(_mm256_sqrt_pd(v_hat), veps));
    const __m256d p = _mm256_loadu_pd(params.data() + i);
    _mm256_storeu_pd(params.data() + i,
                     _mm256_sub_pd(_mm256_mul_pd(p, vdecay),
                                   _mm256_mul_pd(vlr, step)));
  }
  for (std::size_t i = vec_end; i < n; ++i) {
    const double g = grads[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * (g * g);
    const double m_hat = m[i] * inv_bc1;
    const double v_hat = v[i] * inv_bc2;
    params[i] = params[i] * decay - c.lr * (m_hat / (std::sqrt(v_hat) + c.epsilon));
  }
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{Isa::kAvx2, "avx2", &affine, &affine_transpose,
                             &outer_accumulate, &adamw_update};
}  // namespace detail

}  // namespace fishmpc::simd
