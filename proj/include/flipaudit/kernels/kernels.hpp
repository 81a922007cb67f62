#pragma once

// Data-parallel inner loops shared by the IRLS solver and the boosted-tree
// backend. Each kernel has a scalar reference implementation and, on x86-64,
// an AVX2+FMA implementation. The variant is chosen once at first use from the
// CPU's capabilities; FLIPAUDIT_SIMD=scalar|avx2 forces a choice.

#include <cstddef>
#include <span>
#include <string_view>

namespace flipaudit::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
  Isa isa;
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*weighted_dot)(const double* a, const double* b, const double* w, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // p = 1 / (1 + exp(-eta)); eta is clamped to [-700, 700]
  void (*logistic)(const double* eta, double* p, std::size_t n);
  // w = p * (1 - p)
  void (*binomial_weights)(const double* p, double* w, std::size_t n);
  // r = y - p
  void (*residual)(const double* y, const double* p, double* r, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

const KernelTable& active();
// Overrides the automatic choice (for tests and benchmarking). Returns false,
// leaving the selection unchanged, when the requested ISA is unavailable.
bool select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double weighted_dot(std::span<const double> a, std::span<const double> b,
                           std::span<const double> w) {
  return active().weighted_dot(a.data(), b.data(), w.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void logistic(std::span<const double> eta, std::span<double> p) {
  active().logistic(eta.data(), p.data(), eta.size());
}
inline void binomial_weights(std::span<const double> p, std::span<double> w) {
  active().binomial_weights(p.data(), w.data(), p.size());
}
inline void residual(std::span<const double> y, std::span<const double> p, std::span<double> r) {
  active().residual(y.data(), p.data(), r.data(), y.size());
}

}  // namespace flipaudit::kernels
