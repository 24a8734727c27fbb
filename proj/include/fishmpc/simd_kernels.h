#ifndef FISHMPC_SIMD_KERNELS_H_
#define FISHMPC_SIMD_KERNELS_H_

// Dense-layer and optimizer inner loops with one scalar reference
// implementation and vectorized variants selected at runtime.
//
// Matrices are row-major [rows][cols]. All variants compute the same
// mathematical result; they may differ in the last bits because the
// vectorized dot products use fused multiply-add and a different summation
// order. adamw_update is elementwise without FMA and is bit-identical
// across variants.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fishmpc::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct AdamWCoeffs {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  double bias_correction1 = 1.0;  // 1 - beta1^t
  double bias_correction2 = 1.0;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  std::string_view name;

  // y = W x + b, W is [y.size()][x.size()].
  void (*affine)(std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::span<double> y);

  // dx = W^T dy, W is [dy.size()][dx.size()].
  void (*affine_transpose)(std::span<const double> w,
                           std::span<const double> dy, std::span<double> dx);

  // G += dy x^T, G is [dy.size()][x.size()].
  void (*outer_accumulate)(std::span<const double> dy,
                           std::span<const double> x, std::span<double> g);

  // Decoupled-weight-decay Adam update applied elementwise.
  void (*adamw_update)(std::span<double> params, std::span<const double> grads,
                       std::span<double> m, std::span<double> v,
                       const AdamWCoeffs& c);
};

bool isa_supported(Isa isa);

// Throws std::invalid_argument if the variant is not compiled in or not
// supported by the running CPU.
const KernelTable& kernels_for(Isa isa);

// Active table. Picks the best supported variant on first use; the
// FISHMPC_ISA environment variable (scalar|avx2|neon) overrides the choice.
const KernelTable& kernels();

// Forces the active variant. Not thread-safe with respect to concurrent
// kernel calls; intended for tests and benchmarks.
void set_active_isa(Isa isa);

std::vector<Isa> supported_isas();

std::string_view isa_name(Isa isa);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(FISHMPC_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(FISHMPC_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace fishmpc::simd

#endif  // FISHMPC_SIMD_KERNELS_H_
