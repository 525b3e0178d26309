#include "trackmine/simd/kernels.hpp"

namespace trackmine::simd {
namespace {

// Lane layout mirrors two 4-wide AVX2 registers: acc[0..3] and acc[4..7].
inline double reduce8(const double (&acc)[8]) {
  const double l0 = acc[0] + acc[4];
  const double l1 = acc[1] + acc[5];
  const double l2 = acc[2] + acc[6];
  const double l3 = acc[3] + acc[7];
  return (l0 + l2) + (l1 + l3);
}

double squared_l2_scalar(const double* a, const double* b, std::size_t n) {
  double acc[8] = {};
  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t i = 0; i < n8; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double d = a[i + j] - b[i + j];
      acc[j] = acc[j] + d * d;
    }
  }
  double r = reduce8(acc);
  for (std::size_t i = n8; i < n; ++i) {
    const double d = a[i] - b[i];
    r = r + d * d;
  }
  return r;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc[8] = {};
  const std::size_t n8 = n & ~std::size_t{7};
  for (std::size_t i = 0; i < n8; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] = acc[j] + a[i + j] * b[i + j];
  }
  double r = reduce8(acc);
  for (std::size_t i = n8; i < n; ++i) r = r + a[i] * b[i];
  return r;
}

std::size_t count_nonzero_u8_scalar(const std::uint8_t* p, std::size_t n) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += p[i] != 0;
  return c;
}

std::size_t count_far_u16_scalar(const std::uint16_t* p, std::size_t n, std::uint16_t threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += (p[i] == 0 || p[i] > threshold);
  return c;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar", squared_l2_scalar, dot_scalar, count_nonzero_u8_scalar, count_far_u16_scalar};
  return table;
}

}  // namespace trackmine::simd
