#include <atomic>
#include <cstdlib>
#include <string_view>

#include "flipaudit/kernels/kernels.hpp"

namespace flipaudit::kernels {

namespace detail {
const KernelTable* avx2_table_impl();
}

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_choice() {
  const KernelTable* avx2 = avx2_table();
  if (const char* env = std::getenv("FLIPAUDIT_SIMD")) {
    std::string_view v(env);
    if (v == "scalar") return &scalar_table();
    if (v == "avx2" && avx2) return avx2;
  }
  return avx2 ? avx2 : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_choice()};
  return table;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable* table = cpu_has_avx2_fma() ? detail::avx2_table_impl() : nullptr;
  return table;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* t = isa == Isa::Scalar ? &scalar_table() : avx2_table();
  if (!t) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace flipaudit::kernels
