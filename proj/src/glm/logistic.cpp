#include "flipaudit/glm/logistic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "flipaudit/error.hpp"
#include "flipaudit/kernels/kernels.hpp"

namespace flipaudit::glm {

void DesignMatrix::add_column(std::string name, std::vector<double> values) {
  if (columns.empty() && rows == 0) rows = values.size();
  if (values.size() != rows) {
    throw InputError(fmt::format("column '{}' has {} rows, expected {}", name, values.size(), rows));
  }
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

const FeatureEstimate* FitReport::find(const std::string& name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd weighted_gram(const std::vector<std::vector<double>>& cols, std::span<const double> w) {
  const auto p = static_cast<Eigen::Index>(cols.size());
  MatrixXd g(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double v = kernels::weighted_dot(cols[static_cast<std::size_t>(j)],
                                             cols[static_cast<std::size_t>(k)], w);
      g(j, k) = v;
      g(k, j) = v;
    }
  }
  return g;
}

// Rejects an exactly collinear design, naming the dependent column and the
// columns it is a combination of.
void check_rank(const std::vector<std::vector<double>>& cols, const std::vector<std::string>& names) {
  const std::vector<double> ones(cols[0].size(), 1.0);
  MatrixXd g = weighted_gram(cols, ones);
  VectorXd scale = g.diagonal().cwiseSqrt().cwiseInverse();
  MatrixXd c = scale.asDiagonal() * g * scale.asDiagonal();

  Eigen::ColPivHouseholderQR<MatrixXd> qr(c);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == c.cols()) return;

  const auto perm = qr.colsPermutation().indices();
  const auto dependent = static_cast<Eigen::Index>(perm(rank));
  std::vector<Eigen::Index> basis;
  for (Eigen::Index i = 0; i < rank; ++i) basis.push_back(perm(i));

  // Express the dependent column over the independent ones (normal equations
  // on the scaled Gram matrix) to name the partners.
  MatrixXd cbb(rank, rank);
  VectorXd cbd(rank);
  for (Eigen::Index i = 0; i < rank; ++i) {
    cbd(i) = c(basis[static_cast<std::size_t>(i)], dependent);
    for (Eigen::Index j = 0; j < rank; ++j) {
      cbb(i, j) = c(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
    }
  }
  VectorXd coef = cbb.ldlt().solve(cbd);
  std::string partners;
  for (Eigen::Index i = 0; i < rank; ++i) {
    if (std::abs(coef(i)) > 1e-8) {
      if (!partners.empty()) partners += ", ";
      partners += "'" + names[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] + "'";
    }
  }
  throw SingularDesignError(fmt::format("singular information matrix: column '{}' is collinear with {}",
                                        names[static_cast<std::size_t>(dependent)],
                                        partners.empty() ? std::string("other columns") : partners));
}

double log_likelihood(std::span<const double> eta, std::span<const int> y) {
  double ll = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    // log(1 + e^eta) computed without overflow
    const double softplus = std::max(eta[i], 0.0) + std::log1p(std::exp(-std::abs(eta[i])));
    ll += y[i] * eta[i] - softplus;
  }
  return ll;
}

}  // namespace

FitReport fit_logistic(const DesignMatrix& x, std::span<const int> y, const FitConfig& config) {
  const std::size_t n = y.size();
  if (x.cols() > 0 && x.rows != n) {
    throw InputError(fmt::format("design has {} rows but response has {}", x.rows, n));
  }
  if (n == 0) throw InputError("fit_logistic: no observations");
  for (int v : y) {
    if (v != 0 && v != 1) throw InputError("fit_logistic: response must be 0 or 1");
  }
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto& c = x.columns[j];
    if (std::any_of(c.begin(), c.end(), [](double v) { return !std::isfinite(v); })) {
      throw InputError(fmt::format("column '{}' has non-finite values", x.names[j]));
    }
    if (std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); })) {
      throw SingularDesignError(fmt::format("column '{}' is constant", x.names[j]));
    }
  }

  std::vector<std::vector<double>> cols;
  std::vector<std::string> names;
  cols.reserve(x.cols() + 1);
  cols.emplace_back(n, 1.0);
  names.emplace_back(kInterceptName);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    cols.push_back(x.columns[j]);
    names.push_back(x.names[j]);
  }
  check_rank(cols, names);

  const std::size_t p = cols.size();
  const auto ep = static_cast<Eigen::Index>(p);
  std::vector<double> yd(y.begin(), y.end());
  std::vector<double> eta(n), prob(n), w(n), r(n);
  VectorXd beta = VectorXd::Zero(ep);

  auto refresh = [&] {
    std::fill(eta.begin(), eta.end(), 0.0);
    for (std::size_t j = 0; j < p; ++j) kernels::axpy(beta(static_cast<Eigen::Index>(j)), cols[j], eta);
    kernels::logistic(eta, prob);
    kernels::binomial_weights(prob, w);
    kernels::residual(yd, prob, r);
  };
  auto gradient = [&] {
    VectorXd g(ep);
    for (std::size_t j = 0; j < p; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      g(jj) = kernels::dot(cols[j], r) - config.ridge * beta(jj);
    }
    return g;
  };
  auto information = [&] {
    MatrixXd h = weighted_gram(cols, w);
    h.diagonal().array() += config.ridge;
    return h;
  };

  FitReport report;
  report.n_obs = n;
  refresh();
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const MatrixXd h = information();
    Eigen::LDLT<MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      report.separation = true;
      report.diagnostic = "information matrix became singular during iteration (separation)";
      break;
    }
    const VectorXd step = ldlt.solve(gradient());
    if (!step.allFinite()) {
      report.separation = true;
      report.diagnostic = "non-finite Newton step";
      break;
    }
    beta += step;
    report.n_iterations = iter;
    refresh();

    if (step.cwiseAbs().maxCoeff() < config.tol) {
      report.converged = true;
      break;
    }
    const double max_eta = std::abs(*std::max_element(eta.begin(), eta.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    if (max_eta > config.separation_eta) {
      report.separation = true;
      report.diagnostic = fmt::format(
          "perfect or quasi-complete separation: |linear predictor| reached {:.1f} after {} iterations; "
          "coefficients are diverging",
          max_eta, iter);
      break;
    }
  }
  if (!report.converged && report.diagnostic.empty()) {
    report.diagnostic = fmt::format("did not converge within {} iterations", config.max_iter);
  }

  const MatrixXd h = information();
  Eigen::LDLT<MatrixXd> ldlt(h);
  MatrixXd cov = ldlt.solve(MatrixXd::Identity(ep, ep));
  if (ldlt.info() != Eigen::Success || !cov.allFinite()) {
    if (report.converged) {
      throw SingularDesignError("information matrix is singular at the fitted coefficients");
    }
    cov = MatrixXd::Constant(ep, ep, std::numeric_limits<double>::infinity());
  }

  const VectorXd g = gradient();
  report.score_residual.assign(g.data(), g.data() + g.size());
  report.log_likelihood = log_likelihood(eta, y);
  report.features.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    FeatureEstimate f;
    f.name = names[j];
    f.coefficient = beta(jj);
    f.std_error = std::sqrt(std::max(cov(jj, jj), 0.0));
    f.z_value = f.coefficient / f.std_error;
    f.p_value = two_sided_p(f.z_value);
    f.odds_ratio = std::exp(f.coefficient);
    f.or_ci_lower = std::exp(f.coefficient - kWaldZ * f.std_error);
    f.or_ci_upper = std::exp(f.coefficient + kWaldZ * f.std_error);
    report.features.push_back(std::move(f));
  }
  return report;
}

}  // namespace flipaudit::glm
