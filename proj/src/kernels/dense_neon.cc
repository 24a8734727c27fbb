// aarch64 variant. Same contract as the AVX2 table, two lanes per vector.

#include <arm_neon.h>

#include <cmath>

#include "fishmpc/simd_kernels.h"

namespace fishmpc::simd {
namespace {

void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  const std::size_t vec_end = cols - cols % 2;
  for (std::size_t o = 0; o < y.size(); ++o) {
    const double* row = w.data() + o * cols;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t i = 0; i < vec_end; i += 2) {
      acc = vfmaq_f64(acc, vld1q_f64(row + i), vld1q_f64(x.data() + i));
    }
    double s = vaddvq_f64(acc);
    for (std::size_t i = vec_end; i < cols; ++i) s += row[i] * x[i];
    y[o] = s + b[o];
  }
}

void affine_transpose(std::span<const double> w, std::span<const double> dy,
                      std::span<double> dx) {
  const std::size_t cols = dx.size();
  const std::size_t vec_end = cols - cols % 2;
  for (std::size_t i = 0; i < cols; ++i) dx[i] = 0.0;
  for (std::size_t o = 0; o < dy.size(); ++o) {
    const double* row = w.data() + o * cols;
    const float64x2_t g = vdupq_n_f64(dy[o]);
    for (std::size_t i = 0; i < vec_end; i += 2) {
      vst1q_f64(dx.data() + i,
                vfmaq_f64(vld1q_f64(dx.data() + i), vld1q_f64(row + i), g));
    }
    for (std::size_t i = vec_end; i < cols; ++i) dx[i] += row[i] * dy[o];
  }
}

void outer_accumulate(std::span<const double> dy, std::span<const double> x,
                      std::span<double> g) {
  const std::size_t cols = x.size();
  const std::size_t vec_end = cols - cols % 2;
  for (std::size_t o = 0; o < dy.size(); ++o) {
    double* row = g.data() + o * cols;
    const float64x2_t d = vdupq_n_f64(dy[o]);
    for (std::size_t i = 0; i < vec_end; i += 2) {
      vst1q_f64(row + i,
                vfmaq_f64(vld1q_f64(row + i), d, vld1q_f64(x.data() + i)));
    }
    for (std::size_t i = vec_end; i < cols; ++i) row[i] += dy[o] * x[i];
  }
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v,
                  const AdamWCoeffs& c) {
  const double decay = 1.0 - c.lr * c.weight_decay;
  const double inv_bc1 = 1.0 / c.bias_correction1;
  const double inv_bc2 = 1.0 / c.bias_correction2;
  const std::size_t n = params.size();
  const std::size_t vec_end = n - n % 2;
  for (std::size_t i = 0; i < vec_end; i += 2) {
    const float64x2_t g = vld1q_f64(grads.data() + i);
    const float64x2_t mi =
        vaddq_f64(vmulq_n_f64(vld1q_f64(m.data() + i), c.beta1),
                  vmulq_n_f64(g, 1.0 - c.beta1));
    const float64x2_t vi =
        vaddq_f64(vmulq_n_f64(vld1q_f64(v.data() + i), c.beta2),
                  vmulq_n_f64(vmulq_f64(g, g), 1.0 - c.beta2));
    vst1q_f64(m.data() + i, mi);
    vst1q_f64(v.data() + i, vi);
    const float64x2_t step = vdivq_f64(
        vmulq_n_f64(mi, inv_bc1),
        vaddq_f64(vsqrtq_f64(vmulq_n_f64(vi, inv_bc2)), vdupq_n_f64(c.epsilon)));
    vst1q_f64(params.data() + i,
              vsubq_f64(vmulq_n_f64(vld1q_f64(params.data() + i), decay),
                        vmulq_n_f64(step, c.lr)));
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
const KernelTable kNeonTable{Isa::kNeon, "neon", &affine, &affine_transpose,
                             &outer_accumulate, &adamw_update};
}  // namespace detail

}  // namespace fishmpc::simd
