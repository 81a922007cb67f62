#include <algorithm>
#include <cmath>

#include "flipaudit/kernels/kernels.hpp"

namespace flipaudit::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double weighted_dot_scalar(const double* a, const double* b, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void logistic_scalar(const double* eta, double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::clamp(eta[i], -700.0, 700.0);
    p[i] = 1.0 / (1.0 + std::exp(-e));
  }
}

void binomial_weights_scalar(const double* p, double* w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) w[i] = p[i] * (1.0 - p[i]);
}

void residual_scalar(const double* y, const double* p, double* r, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - p[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar,       "scalar",
                                 dot_scalar,        weighted_dot_scalar,
                                 axpy_scalar,       logistic_scalar,
                                 binomial_weights_scalar, residual_scalar};
  return table;
}

}  // namespace flipaudit::kernels
