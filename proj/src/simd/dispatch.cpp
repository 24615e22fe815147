#include <atomic>
#include <cstdlib>
#include <string>

#include "stackbench/errors.hpp"
#include "stackbench/simd.hpp"

namespace stackbench::simd {
namespace {

struct KernelTable {
  Isa isa;
  double (*dot)(const double*, const double*, std::size_t) noexcept;
  double (*squared_distance)(const double*, const double*, std::size_t) noexcept;
  void (*axpy)(double, const double*, double*, std::size_t) noexcept;
};

constexpr KernelTable kScalar{Isa::scalar, &scalar::dot, &scalar::squared_distance, &scalar::axpy};
#if defined(STACKBENCH_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::avx2, &avx2::dot, &avx2::squared_distance, &avx2::axpy};
#endif

bool cpu_has_avx2() noexcept {
#if defined(STACKBENCH_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) noexcept {
#if defined(STACKBENCH_HAVE_AVX2)
  if (isa == Isa::avx2) return &kAvx2;
#endif
  (void)isa;
  return &kScalar;
}

const KernelTable* initial_table() noexcept {
  const char* env = std::getenv("STACKBENCH_SIMD");
  if (env && std::string(env) == "scalar") return &kScalar;
  return cpu_has_avx2() ? table_for(Isa::avx2) : &kScalar;
}

std::atomic<const KernelTable*>& active() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_supported(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() noexcept { return active().load(std::memory_order_acquire)->isa; }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw InvalidArgument("SIMD variant '" + std::string(isa_name(isa)) + "' is not available");
  }
  active().store(table_for(isa), std::memory_order_release);
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().load(std::memory_order_acquire)->dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  return active().load(std::memory_order_acquire)->squared_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().load(std::memory_order_acquire)->axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace stackbench::simd
