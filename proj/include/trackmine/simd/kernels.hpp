#pragma once

// Data-parallel inner loops used by the clustering, embedding and anchor code.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2 variant
// selected at runtime. Floating-point reductions use the same 8-lane blocked
// accumulation order in both variants, so results are bit-identical across
// dispatch targets (the tests assert exact equality).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace trackmine::simd {

struct KernelTable {
  std::string_view name;
  // Sum of squared differences.
  double (*squared_l2)(const double* a, const double* b, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // Number of non-zero bytes.
  std::size_t (*count_nonzero_u8)(const std::uint8_t* p, std::size_t n);
  // Number of entries that are 0 (invalid) or strictly greater than threshold.
  std::size_t (*count_far_u16)(const std::uint16_t* p, std::size_t n, std::uint16_t threshold);
};

const KernelTable& scalar_kernels();

// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2_kernels();

// Best table for this CPU, unless TRACKMINE_SIMD=scalar is set in the environment.
const KernelTable& active();

// Overrides the active table (tests, benchmarks). Not thread-safe w.r.t. running kernels.
void set_active(const KernelTable& table);

inline double squared_l2(std::span<const double> a, std::span<const double> b) {
  return active().squared_l2(a.data(), b.data(), a.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

}  // namespace trackmine::simd
