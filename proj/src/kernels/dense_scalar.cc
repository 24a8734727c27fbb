#include <cmath>

#include "fishmpc/simd_kernels.h"

namespace fishmpc::simd {
namespace {

void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t o = 0; o < y.size(); ++o) {
    const double* row = w.data() + o * cols;
    double acc = 0.0;
    for (std::size_t i = 0; i < cols; ++i) acc += row[i] * x[i];
    y[o] = acc + b[o];
  }
}

void affine_transpose(std::span<const double> w, std::span<const double> dy,
                      std::span<double> dx) {
  const std::size_t cols = dx.size();
  for (std::size_t i = 0; i < cols; ++i) dx[i] = 0.0;
  for (std::size_t o = 0; o < dy.size(); ++o) {
    const double* row = w.data() + o * cols;
    const double g = dy[o];
    for (std::size_t i = 0; i < cols; ++i) dx[i] += row[i] * g;
  }
}

void outer_accumulate(std::span<const double> dy, std::span<const double> x,
                      std::span<double> g) {
  const std::size_t cols = x.size();
  for (std::size_t o = 0; o < dy.size(); ++o) {
    double* row = g.data() + o * cols;
    const double d = dy[o];
    for (std::size_t i = 0; i < cols; ++i) row[i] += d * x[i];
  }
}

void adamw_update(std::span<double> params, std::span<const double> grads,
                  std::span<double> m, std::span<double> v,
                  const AdamWCoeffs& c) {
  const double decay = 1.0 - c.lr * c.weight_decay;
  const double inv_bc1 = 1.0 / c.bias_correction1;
  const double inv_bc2 = 1.0 / c.bias_correction2;
  for (std::size_t i = 0; i < params.size(); ++i) {
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
const KernelTable kScalarTable{Isa::kScalar, "scalar", &affine,
                               &affine_transpose, &outer_accumulate,
                               &adamw_update};
}  // namespace detail

}  // namespace fishmpc::simd
