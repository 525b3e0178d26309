#include <gtest/gtest.h>

#include <vector>

#include "trackmine/rng.hpp"
#include "trackmine/simd/kernels.hpp"

namespace simd = trackmine::simd;

namespace {

std::vector<double> random_doubles(trackmine::Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal(0.0, 3.0);
  return v;
}

}  // namespace

TEST(Kernels, ScalarMatchesNaiveLoops) {
  const auto& k = simd::scalar_kernels();
  trackmine::Rng rng(5);
  for (std::size_t n = 0; n < 40; ++n) {
    const auto a = random_doubles(rng, n), b = random_doubles(rng, n);
    double sq = 0, dt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sq += (a[i] - b[i]) * (a[i] - b[i]);
      dt += a[i] * b[i];
    }
    EXPECT_NEAR(k.squared_l2(a.data(), b.data(), n), sq, 1e-12 * (1 + sq));
    EXPECT_NEAR(k.dot(a.data(), b.data(), n), dt, 1e-12 * (1 + std::abs(dt)));
  }
  const std::uint8_t bytes[] = {0, 1, 2, 0, 255, 0, 7};
  EXPECT_EQ(k.count_nonzero_u8(bytes, 7), 4u);
  const std::uint16_t depth[] = {0, 100, 30000, 30001, 65535, 29999};
  EXPECT_EQ(k.count_far_u16(depth, 6, 30000), 3u);  // 0, 30001, 65535
}

// The vector variant must reproduce the reference bit for bit.
TEST(Kernels, Avx2IsBitIdenticalToScalar) {
  const auto* v = simd::avx2_kernels();
  if (v == nullptr) GTEST_SKIP() << "no AVX2 on this CPU";
  const auto& s = simd::scalar_kernels();
  trackmine::Rng rng(11);
  for (std::size_t n = 0; n <= 67; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto a = random_doubles(rng, n), b = random_doubles(rng, n);
      EXPECT_EQ(s.squared_l2(a.data(), b.data(), n), v->squared_l2(a.data(), b.data(), n)) << n;
      EXPECT_EQ(s.dot(a.data(), b.data(), n), v->dot(a.data(), b.data(), n)) << n;

      std::vector<std::uint8_t> bytes(n);
      std::vector<std::uint16_t> depth(n);
      for (std::size_t i = 0; i < n; ++i) {
        bytes[i] = static_cast<std::uint8_t>(rng.below(3) == 0 ? 0 : rng.below(256));
        depth[i] = static_cast<std::uint16_t>(rng.below(4) == 0 ? 0 : rng.below(65536));
      }
      EXPECT_EQ(s.count_nonzero_u8(bytes.data(), n), v->count_nonzero_u8(bytes.data(), n));
      for (std::uint16_t thr : {std::uint16_t{0}, std::uint16_t{1}, std::uint16_t{30000}, std::uint16_t{32768},
                                std::uint16_t{65534}, std::uint16_t{65535}}) {
        EXPECT_EQ(s.count_far_u16(depth.data(), n, thr), v->count_far_u16(depth.data(), n, thr)) << n << " " << thr;
      }
    }
  }
}

TEST(Kernels, ActiveTableCanBeSwitched) {
  const auto& before = simd::active();
  simd::set_active(simd::scalar_kernels());
  EXPECT_EQ(simd::active().name, "scalar");
  simd::set_active(before);
}
