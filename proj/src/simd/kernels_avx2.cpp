#include "trackmine/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define TRACKMINE_HAVE_AVX2_TU 1
#include <immintrin.h>
#else
#define TRACKMINE_HAVE_AVX2_TU 0
#endif

namespace trackmine::simd {

#if TRACKMINE_HAVE_AVX2_TU
namespace {

// Horizontal reduction in the same order as the scalar reference.
__attribute__((target("avx2"))) inline double reduce8(__m256d lo, __m256d hi) {
  const __m256d l = _mm256_add_pd(lo, hi);           // l0 l1 l2 l3
  const __m128d a = _mm256_castpd256_pd128(l);       // l0 l1
  const __m128d b = _mm256_extractf128_pd(l, 1);     // l2 l3
  const __m128d s = _mm_add_pd(a, b);                // l0+l2, l1+l3
  const __m128d h = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, h));
}

__attribute__((target("avx2"))) double squared_l2_avx2(const double* a, const double* b,
                                                        std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t i = 0; i < n8; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(d0, d0));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(d1, d1));
  }
  double r = reduce8(acc0, acc1);
  for (std::size_t i = n8; i < n; ++i) {
    const double d = a[i] - b[i];
    r = r + d * d;
  }
  return r;
}

__attribute__((target("avx2"))) double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t i = 0; i < n8; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double r = reduce8(acc0, acc1);
  for (std::size_t i = n8; i < n; ++i) r = r + a[i] * b[i];
  return r;
}

__attribute__((target("avx2,popcnt"))) std::size_t count_nonzero_u8_avx2(const std::uint8_t* p,
                                                                         std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  std::size_t zeros = 0;
  const std::size_t n32 = n & ~std::size_t{31};
  for (std::size_t i = 0; i < n32; i += 32) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    const auto m = static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(v, zero)));
    zeros += static_cast<std::size_t>(_mm_popcnt_u32(m));
  }
  std::size_t c = n32 - zeros;
  for (std::size_t i = n32; i < n; ++i) c += p[i] != 0;
  return c;
}

__attribute__((target("avx2,popcnt"))) std::size_t count_far_u16_avx2(const std::uint16_t* p,
                                                                      std::size_t n,
                                                                      std::uint16_t threshold) {
  const __m256i zero = _mm256_setzero_si256();
  const bool saturated = threshold == 0xFFFF;
  const __m256i above = _mm256_set1_epi16(static_cast<short>(saturated ? 0xFFFF : threshold + 1));
  std::size_t c = 0;
  const std::size_t n16 = n & ~std::size_t{15};
  for (std::size_t i = 0; i < n16; i += 16) {
    const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(p + i));
    __m256i hit = _mm256_cmpeq_epi16(v, zero);
    if (!saturated) {
      // v >= threshold + 1  <=>  max(v, threshold + 1) == v  (unsigned)
      hit = _mm256_or_si256(hit, _mm256_cmpeq_epi16(_mm256_max_epu16(v, above), v));
    }
    const auto m = static_cast<std::uint32_t>(_mm256_movemask_epi8(hit));
    c += static_cast<std::size_t>(_mm_popcnt_u32(m)) / 2;
  }
  for (std::size_t i = n16; i < n; ++i) c += (p[i] == 0 || p[i] > threshold);
  return c;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
  static const KernelTable table{"avx2", squared_l2_avx2, dot_avx2, count_nonzero_u8_avx2,
                                 count_far_u16_avx2};
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace trackmine::simd
