#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flipaudit::glm {

// Column-major design matrix without the intercept; fit_logistic prepends it.
struct DesignMatrix {
  std::size_t rows = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  void add_column(std::string name, std::vector<double> values);
  std::size_t cols() const { return columns.size(); }
};

struct FitConfig {
  int max_iter = 100;
  double tol = 1e-8;   // on max |coefficient change| per iteration
  double ridge = 0.0;  // L2 penalty on every coefficient, intercept included
  // Separation is declared once any fitted linear predictor exceeds this in
  // magnitude (fitted probability within ~1e-15 of 0 or 1).
  double separation_eta = 35.0;
};

inline constexpr double kSignificance = 0.05;
inline constexpr double kWaldZ = 1.96;

struct FeatureEstimate {
  std::string name;
  double coefficient = 0.0;
  double std_error = 0.0;
  double z_value = 0.0;
  double p_value = 1.0;
  double odds_ratio = 1.0;  // exp(coefficient)
  double or_ci_lower = 1.0;
  double or_ci_upper = 1.0;

  bool significant() const { return p_value < kSignificance; }
};

inline constexpr const char* kInterceptName = "(intercept)";

struct FitReport {
  std::vector<FeatureEstimate> features;  // [0] is the intercept
  bool converged = false;
  bool separation = false;
  int n_iterations = 0;
  double log_likelihood = 0.0;
  std::size_t n_obs = 0;
  std::string diagnostic;  // empty when converged cleanly
  // Xᵀ(y - p̂) - ridge·β at the reported coefficients, intercept first.
  std::vector<double> score_residual;

  const FeatureEstimate* find(const std::string& name) const;
};

// Maximum-likelihood logistic regression by iteratively reweighted least
// squares, with Wald standard errors from the inverse information matrix.
//
// Throws SingularDesignError for a constant non-intercept column or an exactly
// collinear design (naming the columns involved). Perfect or quasi-complete
// separation is not an exception: the report comes back with converged = false,
// separation = true and a diagnostic.
FitReport fit_logistic(const DesignMatrix& x, std::span<const int> y, const FitConfig& config = {});

// Two-sided normal tail probability 2·(1 − Φ(|z|)).
double two_sided_p(double z);

}  // namespace flipaudit::glm
