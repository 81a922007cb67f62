#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flipaudit/kernels/kernels.hpp"

using namespace flipaudit::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(KernelsScalar, ReferenceValues) {
  const auto& s = scalar_table();
  const double a[] = {1, 2, 3}, b[] = {4, 5, 6}, w[] = {0.5, 1, 2};
  EXPECT_DOUBLE_EQ(s.dot(a, b, 3), 32.0);
  EXPECT_DOUBLE_EQ(s.weighted_dot(a, b, w, 3), 2 + 10 + 36);
  double y[] = {1, 1, 1};
  s.axpy(2.0, a, y, 3);
  EXPECT_DOUBLE_EQ(y[2], 7.0);
  const double eta[] = {0.0, 800.0, -800.0};
  double p[3];
  s.logistic(eta, p, 3);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 1.0);
  EXPECT_GT(p[2], 0.0);
  EXPECT_LT(p[2], 1e-300);
  double wts[3];
  const double pp[] = {0.5, 0.1, 1.0};
  s.binomial_weights(pp, wts, 3);
  EXPECT_DOUBLE_EQ(wts[0], 0.25);
  EXPECT_DOUBLE_EQ(wts[2], 0.0);
  double r[3];
  s.residual(a, pp, r, 3);
  EXPECT_DOUBLE_EQ(r[1], 1.9);
}

TEST(KernelsEquivalence, Avx2MatchesScalar) {
  const KernelTable* v = avx2_table();
  if (!v) GTEST_SKIP() << "AVX2+FMA not available";
  const auto& s = scalar_table();
  std::mt19937_64 rng(42);
  for (std::size_t n = 0; n <= 67; ++n) {
    auto a = random_vec(n, rng, -3, 3), b = random_vec(n, rng, -3, 3), w = random_vec(n, rng, 0, 1);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    EXPECT_NEAR(v->dot(a.data(), b.data(), n), s.dot(a.data(), b.data(), n), 1e-14 * scale) << n;
    EXPECT_NEAR(v->weighted_dot(a.data(), b.data(), w.data(), n), s.weighted_dot(a.data(), b.data(), w.data(), n),
                1e-14 * scale)
        << n;

    auto y1 = b, y2 = b;
    s.axpy(0.7, a.data(), y1.data(), n);
    v->axpy(0.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15 * (1 + std::abs(y1[i])));

    auto eta = random_vec(n, rng, -40, 40);
    std::vector<double> p1(n), p2(n), w1(n), w2(n), r1(n), r2(n);
    s.logistic(eta.data(), p1.data(), n);
    v->logistic(eta.data(), p2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(p1[i], p2[i], 4e-16) << eta[i];
      EXPECT_NEAR(p2[i], p1[i], 1e-13 * p1[i]) << "relative, eta " << eta[i];
    }
    s.binomial_weights(p1.data(), w1.data(), n);
    v->binomial_weights(p1.data(), w2.data(), n);
    s.residual(w.data(), p1.data(), r1.data(), n);
    v->residual(w.data(), p1.data(), r2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_DOUBLE_EQ(w1[i], w2[i]);
      EXPECT_DOUBLE_EQ(r1[i], r2[i]);
    }
  }
}

TEST(KernelsEquivalence, LogisticExtremes) {
  const KernelTable* v = avx2_table();
  if (!v) GTEST_SKIP() << "AVX2+FMA not available";
  const std::vector<double> eta = {-1e6, -745, -700, -36, -1e-300, 0, 1e-300, 36, 700, 745, 1e6};
  std::vector<double> p1(eta.size()), p2(eta.size());
  scalar_table().logistic(eta.data(), p1.data(), eta.size());
  v->logistic(eta.data(), p2.data(), eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    EXPECT_TRUE(std::isfinite(p2[i]));
    EXPECT_GE(p2[i], 0.0);
    EXPECT_LE(p2[i], 1.0);
    EXPECT_NEAR(p1[i], p2[i], 1e-13 * std::max(p1[i], 1e-300)) << eta[i];
  }
}

TEST(KernelsEquivalence, LogisticIndependentOfPosition) {
  // The same input must give the same output in the vector body and in the tail.
  for (const KernelTable* t : {&scalar_table(), avx2_table()}) {
    if (!t) continue;
    std::vector<double> eta(7, 0.3141592653589793), p(7);
    t->logistic(eta.data(), p.data(), eta.size());
    for (double x : p) EXPECT_EQ(x, p[0]) << t->name;
  }
}

TEST(KernelsDispatch, SelectSwitchesTable) {
  ASSERT_TRUE(select(Isa::Scalar));
  EXPECT_EQ(active().isa, Isa::Scalar);
  const std::vector<double> a = {1, 2}, b = {3, 4};
  EXPECT_DOUBLE_EQ(dot(a, b), 11.0);
  if (avx2_table()) {
    ASSERT_TRUE(select(Isa::Avx2));
    EXPECT_EQ(active().isa, Isa::Avx2);
    EXPECT_DOUBLE_EQ(dot(a, b), 11.0);
  } else {
    EXPECT_FALSE(select(Isa::Avx2));
  }
}
