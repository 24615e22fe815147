#pragma once

#include <span>
#include <string_view>

// Data-parallel inner loops (distances, dot products, axpy) with a scalar
// reference implementation and an AVX2+FMA variant. The variant is chosen
// once at runtime from CPUID, or forced with STACKBENCH_SIMD=scalar|avx2.
// All callers in one process use the same variant, so results are stable
// for a given machine and setting; the variants agree to rounding only.

namespace stackbench::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_supported(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Throws InvalidArgument if the CPU (or the build) lacks `isa`.
void set_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept;

namespace scalar {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) noexcept;
double squared_distance(const double* a, const double* b, std::size_t n) noexcept;
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept;
}  // namespace avx2

}  // namespace stackbench::simd
