#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fishmpc/simd_kernels.h"

namespace fishmpc::simd {

namespace {

const KernelTable* table_or_null(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &detail::kScalarTable;
    case Isa::kAvx2:
#if defined(FISHMPC_HAVE_AVX2)
      return &detail::kAvx2Table;
#else
      return nullptr;
#endif
    case Isa::kNeon:
#if defined(FISHMPC_HAVE_NEON)
      return &detail::kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("FISHMPC_ISA")) {
    const std::string want(env);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (want == isa_name(isa) && isa_supported(isa)) return table_or_null(isa);
    }
  }
  if (isa_supported(Isa::kAvx2)) return table_or_null(Isa::kAvx2);
  if (isa_supported(Isa::kNeon)) return table_or_null(Isa::kNeon);
  return &detail::kScalarTable;
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  if (table_or_null(isa) == nullptr) return false;
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(__x86_64__) || defined(__i386__)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
      // Advanced SIMD is mandatory on aarch64.
      return true;
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant '" + std::string(isa_name(isa)) +
                                "' not available on this build or CPU");
  }
  return *table_or_null(isa);
}

const KernelTable& kernels() { return *active().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  active().store(&kernels_for(isa), std::memory_order_release);
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace fishmpc::simd
