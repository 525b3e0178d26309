#include <atomic>
#include <cstdlib>
#include <string_view>

#include "trackmine/simd/kernels.hpp"

namespace trackmine::simd {
namespace {

const KernelTable* pick() {
  if (const char* env = std::getenv("TRACKMINE_SIMD"); env && std::string_view(env) == "scalar") {
    return &scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{pick()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) { slot().store(&table, std::memory_order_relaxed); }

}  // namespace trackmine::simd
