#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "flipaudit/core/hierarchy.hpp"
#include "flipaudit/error.hpp"
#include "flipaudit/glm/audit.hpp"
#include "flipaudit/glm/logistic.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace flipaudit;
using namespace flipaudit::glm;

namespace {

std::vector<int> draw_logistic(const std::vector<double>& eta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int> y(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) y[i] = u(rng) < oracle::sigmoid(eta[i]);
  return y;
}

metrics::MisclassMatrix misclass_of(std::vector<int> wrong, Task task) {
  metrics::MisclassMatrix m;
  m.model_id = "m0";
  m.task = task;
  m.misclassified = std::move(wrong);
  return m;
}

FitReport report_with(double coefficient, double se, double p) {
  FitReport r;
  r.features.push_back({kInterceptName, 0, 1, 0, 1, 1, 1, 1});
  FeatureEstimate e;
  e.name = "age";
  e.coefficient = coefficient;
  e.std_error = se;
  e.p_value = p;
  e.odds_ratio = std::exp(coefficient);
  e.or_ci_lower = std::exp(coefficient - kWaldZ * se);
  e.or_ci_upper = std::exp(coefficient + kWaldZ * se);
  r.features.push_back(e);
  r.converged = true;
  return r;
}

}  // namespace

TEST(FitLogistic, RecoversPlantedCoefficients) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0, 1);
  const std::size_t n = 50000;
  DesignMatrix x;
  x.rows = n;
  std::vector<double> x1(n), eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = z(rng);
    eta[i] = -1 + 2 * x1[i];
  }
  x.add_column("x1", x1);
  const auto y = draw_logistic(eta, rng);
  const auto r = fit_logistic(x, y);
  ASSERT_TRUE(r.converged);
  EXPECT_FALSE(r.separation);
  EXPECT_NEAR(r.features[0].coefficient, -1, 0.05);
  EXPECT_NEAR(r.features[1].coefficient, 2, 0.05);
  EXPECT_EQ(r.features[0].name, kInterceptName);
  EXPECT_EQ(r.n_obs, n);
}

TEST(FitLogistic, NullPValuesRoughlyUniform) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0, 1);
  std::bernoulli_distribution coin(0.3);
  const std::size_t n = 5000;
  int below = 0;
  for (int rep = 0; rep < 200; ++rep) {
    DesignMatrix x;
    x.rows = n;
    std::vector<double> col(n);
    for (auto& v : col) v = z(rng);
    x.add_column("x", col);
    std::vector<int> y(n);
    for (auto& v : y) v = coin(rng);
    below += fit_logistic(x, y).features[1].p_value < 0.05;
  }
  const double frac = below / 200.0;
  EXPECT_GE(frac, 0.03);
  EXPECT_LE(frac, 0.08);
}

TEST(FitLogistic, DuplicateColumnIsSingular) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 1);
  DesignMatrix x;
  x.rows = 200;
  std::vector<double> col(200);
  for (auto& v : col) v = z(rng);
  x.add_column("a", col);
  x.add_column("b", col);
  std::vector<int> y(200);
  for (std::size_t i = 0; i < 200; ++i) y[i] = i % 3 == 0;
  try {
    fit_logistic(x, y);
    FAIL() << "expected SingularDesignError";
  } catch (const SingularDesignError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('a'), std::string::npos);
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
}

TEST(FitLogistic, ConstantColumnRejected) {
  DesignMatrix x;
  x.rows = 4;
  x.add_column("c", {1, 1, 1, 1});
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0, 1, 0, 1}), SingularDesignError);
}

TEST(FitLogistic, BadInputs) {
  DesignMatrix x;
  x.rows = 3;
  x.add_column("a", {1, 2, 3});
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0, 1}), InputError);
  EXPECT_THROW(fit_logistic(x, std::vector<int>{0, 2, 1}), InputError);
  EXPECT_THROW(x.add_column("short", {1}), InputError);
}

TEST(FitLogistic, ScoreEquationsAtConvergence) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0, 1);
  for (double ridge : {0.0, 1e-6, 0.5}) {
    const std::size_t n = 3000;
    DesignMatrix x;
    x.rows = n;
    std::vector<double> a(n), b(n), eta(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 60 + 15 * z(rng);
      b[i] = z(rng) > 0.3;
      eta[i] = -3 + 0.03 * a[i] - 0.5 * b[i];
    }
    x.add_column("a", a);
    x.add_column("b", b);
    const auto y = draw_logistic(eta, rng);
    FitConfig cfg;
    cfg.ridge = ridge;
    const auto r = fit_logistic(x, y, cfg);
    ASSERT_TRUE(r.converged);
    // Recompute the score vector independently of the reported residual.
    std::vector<double> g(3, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = r.features[0].coefficient + r.features[1].coefficient * a[i] + r.features[2].coefficient * b[i];
      const double res = y[i] - oracle::sigmoid(e);
      g[0] += res;
      g[1] += res * a[i];
      g[2] += res * b[i];
    }
    for (int j = 0; j < 3; ++j) {
      EXPECT_LT(std::abs(g[j] - ridge * r.features[j].coefficient), 1e-6) << "ridge " << ridge << " j " << j;
      EXPECT_LT(std::abs(r.score_residual[j]), 1e-6);
    }
  }
}

TEST(FitLogistic, ScaleInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0, 1);
  const std::size_t n = 2000;
  std::vector<double> a(n), b(n), eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = z(rng);
    b[i] = z(rng);
    eta[i] = 0.3 * a[i] - 0.1 * b[i];
  }
  const auto y = draw_logistic(eta, rng);
  DesignMatrix x1, x2;
  x1.rows = x2.rows = n;
  x1.add_column("a", a);
  x1.add_column("b", b);
  std::vector<double> a2(a);
  for (auto& v : a2) v *= 2;
  x2.add_column("a", a2);
  x2.add_column("b", b);
  const auto r1 = fit_logistic(x1, y), r2 = fit_logistic(x2, y);
  EXPECT_NEAR(r2.features[1].coefficient, r1.features[1].coefficient / 2, 1e-8);
  EXPECT_NEAR(r2.features[1].std_error, r1.features[1].std_error / 2, 1e-8);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(r1.features[j].z_value, r2.features[j].z_value, 1e-8);
    EXPECT_NEAR(r1.features[j].p_value, r2.features[j].p_value, 1e-8);
    EXPECT_EQ(r1.features[j].significant(), r2.features[j].significant());
  }
}

TEST(FitLogistic, SeparationFlagged) {
  DesignMatrix x;
  x.rows = 40;
  std::vector<double> col(40);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    col[i] = i;
    y[i] = i >= 20;
  }
  x.add_column("x", col);
  FitReport r;
  ASSERT_NO_THROW(r = fit_logistic(x, y));
  EXPECT_TRUE(r.separation);
  EXPECT_FALSE(r.converged);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(FitLogistic, OddsRatioAndWaldBounds) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0, 1);
  const std::size_t n = 1000;
  DesignMatrix x;
  x.rows = n;
  std::vector<double> a(n), eta(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = z(rng);
    eta[i] = 0.4 * a[i];
  }
  x.add_column("a", a);
  const auto r = fit_logistic(x, draw_logistic(eta, rng));
  for (const auto& f : r.features) {
    EXPECT_EQ(f.odds_ratio, std::exp(f.coefficient));
    EXPECT_GT(f.std_error, 0);
    EXPECT_NEAR(f.z_value, f.coefficient / f.std_error, 1e-12);
    EXPECT_NEAR(f.or_ci_lower, std::exp(f.coefficient - 1.96 * f.std_error), 1e-12);
    EXPECT_NEAR(f.or_ci_upper, std::exp(f.coefficient + 1.96 * f.std_error), 1e-12);
    EXPECT_LT(f.or_ci_lower, f.odds_ratio);
    EXPECT_LT(f.odds_ratio, f.or_ci_upper);
    EXPECT_NEAR(f.p_value, std::erfc(std::abs(f.z_value) / std::sqrt(2.0)), 1e-12);
  }
  EXPECT_NE(r.find("a"), nullptr);
  EXPECT_EQ(r.find("zzz"), nullptr);
}

TEST(TwoSidedP, ReferenceValues) {
  EXPECT_NEAR(two_sided_p(0), 1.0, 1e-15);
  EXPECT_NEAR(two_sided_p(1.959963984540054), 0.05, 1e-12);
  EXPECT_NEAR(two_sided_p(-1.959963984540054), 0.05, 1e-12);
  EXPECT_GE(two_sided_p(40), 0.0);
}

TEST(DesignSpec, FindingsExcludeHierarchyForEveryTask) {
  const Dataset ds = fixtures::random_dataset(10, 1, 1);
  std::vector<std::pair<int, int>> edges;
  for (const auto& [p, c] : ds.hierarchy().edges()) edges.emplace_back(index_of(p), index_of(c));
  for (Task t : kAllTasks) {
    const auto spec = design_spec(ds, FeatureKind::Findings, t);
    std::set<int> banned = oracle::reachable_up(edges, static_cast<int>(index_of(task_finding(t))));
    const auto down = oracle::reachable_down(edges, static_cast<int>(index_of(task_finding(t))));
    banned.insert(down.begin(), down.end());
    banned.insert(static_cast<int>(index_of(task_finding(t))));
    EXPECT_EQ(spec.feature_names.size(), kNumFindings - banned.size()) << task_name(t);
    for (const auto& name : spec.feature_names) {
      const int f = static_cast<int>(index_of(*parse_finding(name)));
      EXPECT_FALSE(banned.count(f)) << task_name(t) << " includes " << name;
    }
  }
}

TEST(DesignSpec, ConsolidationHasElevenFeatures) {
  const Dataset ds = fixtures::random_dataset(10, 1, 1);
  const auto spec = design_spec(ds, FeatureKind::Findings, Task::Consolidation);
  EXPECT_EQ(spec.feature_names.size(), 11u);
  for (const char* gone : {"Consolidation", "Lung Opacity", "Pneumonia"}) {
    EXPECT_EQ(std::count(spec.feature_names.begin(), spec.feature_names.end(), gone), 0) << gone;
  }
  EXPECT_EQ(std::count(spec.feature_names.begin(), spec.feature_names.end(), "No Finding"), 1);
}

TEST(DesignSpec, ClinicalAndComorbidity) {
  const Dataset ds = fixtures::random_dataset(10, 1, 1);
  EXPECT_EQ(design_spec(ds, FeatureKind::Clinical, Task::Edema).feature_names.size(), 5u);
  const auto ac = design_spec(ds, FeatureKind::AgeComorbidity, Task::Edema).feature_names;
  EXPECT_EQ(ac, (std::vector<std::string>{"age", "comorbidity_count"}));
}

TEST(Comorbidity, Counts) {
  StudyRecord s;
  EXPECT_EQ(comorbidity_count(s, Task::Edema), 0);
  s.labels[index_of(Finding::Fracture)] = 1;
  s.labels[index_of(Finding::SupportDevices)] = 1;
  s.labels[index_of(Finding::Pneumothorax)] = 1;
  EXPECT_EQ(comorbidity_count(s, Task::Edema), 3);
  s.labels[index_of(Finding::Edema)] = 1;
  s.labels[index_of(Finding::NoFinding)] = 1;
  EXPECT_EQ(comorbidity_count(s, Task::Edema), 3);
  EXPECT_EQ(comorbidity_count(s, Task::Atelectasis), 4);
}

TEST(AuditFindings, AllFindingsAbsentRejected) {
  std::vector<StudyRecord> studies(30);
  for (std::size_t i = 0; i < studies.size(); ++i) {
    studies[i].study_id = fmt::format("s{}", i);
    studies[i].age = 40 + i;
    studies[i].num_pa_views = 1;
    studies[i].scores.assign(1, {0.5, 0.5, 0.5, 0.5, 0.5});
  }
  const Dataset ds(std::move(studies), {"m0"}, LabelHierarchy::standard());
  std::vector<int> wrong(30);
  for (std::size_t i = 0; i < 30; ++i) wrong[i] = i % 2;
  EXPECT_THROW(audit_findings(ds, misclass_of(wrong, Task::Edema)), SingularDesignError);
}

TEST(AuditClinical, PlantedAgeEffectRecovered) {
  const Dataset ds = fixtures::random_dataset(3000, 1, 7);
  std::mt19937_64 rng(8);
  std::vector<double> eta(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) eta[i] = -1.7 + 0.03 * (ds[i].age - 55);
  const auto r = audit_clinical(ds, misclass_of(draw_logistic(eta, rng), Task::Atelectasis));
  const auto* age = r.find("age");
  ASSERT_NE(age, nullptr);
  EXPECT_LT(age->p_value, 0.05);
  EXPECT_GT(age->odds_ratio, 1.0);
  EXPECT_EQ(r.features.size(), 6u);
}

TEST(AuditClinical, NullRarelySignificant) {
  // Per feature: p >= 0.05 in at least 90% of replicates.
  std::array<int, kNumClinical> quiet{};
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset ds = fixtures::random_dataset(700, 1, 100 + rep);
    std::mt19937_64 rng(200 + rep);
    std::bernoulli_distribution coin(0.2);
    std::vector<int> wrong(ds.size());
    for (auto& w : wrong) w = coin(rng);
    const auto r = audit_clinical(ds, misclass_of(wrong, Task::Edema));
    for (std::size_t k = 0; k < kNumClinical; ++k) quiet[k] += r.features[k + 1].p_value >= 0.05;
  }
  for (std::size_t k = 0; k < kNumClinical; ++k) EXPECT_GE(quiet[k], 90) << kClinicalNames[k];
}

TEST(AuditFindings, PlantedSupportDevices) {
  const Dataset ds = fixtures::random_dataset(3000, 1, 9);
  std::mt19937_64 rng(10);
  std::vector<double> eta(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) eta[i] = -1.8 + 0.8 * ds[i].label(Finding::SupportDevices);
  const auto r = audit_findings(ds, misclass_of(draw_logistic(eta, rng), Task::PleuralEffusion));
  const auto* sd = r.find("Support Devices");
  ASSERT_NE(sd, nullptr);
  EXPECT_LT(sd->p_value, 0.05);
  EXPECT_GT(sd->odds_ratio, 1.0);
  EXPECT_EQ(r.find("Pleural Effusion"), nullptr);
}

TEST(AuditAgeComorbidity, AgeOnlyPlant) {
  int hits = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset ds = fixtures::random_dataset(2000, 1, 300 + rep);
    std::mt19937_64 rng(400 + rep);
    std::vector<double> eta(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) eta[i] = -1.5 + 0.03 * (ds[i].age - 55);
    const auto r = audit_age_comorbidity(ds, misclass_of(draw_logistic(eta, rng), Task::Cardiomegaly));
    hits += r.find("age")->p_value < 0.05 && r.find("comorbidity_count")->p_value >= 0.05;
  }
  EXPECT_GE(hits, 45);
}

TEST(AuditClinical, LengthMismatch) {
  const Dataset ds = fixtures::random_dataset(20, 1, 1);
  EXPECT_THROW(audit_clinical(ds, misclass_of({0, 1}, Task::Edema)), InputError);
}

TEST(Aggregate, IdenticalReports) {
  std::vector<FitReport> reports(10, report_with(std::log(1.5), 0.1, 0.2));
  const auto rows = aggregate_across_models(reports, Task::Edema);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_odds_ratio, 1.5, 1e-12);
  EXPECT_EQ(rows[0].n_models, 10u);
  EXPECT_EQ(rows[0].n_significant_models, 0u);
  EXPECT_NEAR(rows[0].agg_ci_lower, std::exp(std::log(1.5) - 0.196), 1e-12);
}

TEST(Aggregate, CountsSignificant) {
  std::vector<FitReport> reports(10, report_with(0.1, 0.1, 0.3));
  reports[3] = report_with(0.1, 0.1, 0.01);
  reports[7] = report_with(0.1, 0.1, 0.01);
  EXPECT_EQ(aggregate_across_models(reports, Task::Edema)[0].n_significant_models, 2u);
}

TEST(Aggregate, ArithmeticMeanAndBoundAverage) {
  std::vector<FitReport> reports = {report_with(0, 0.2, 0.5), report_with(std::log(2.0), 0.2, 0.5),
                                    report_with(std::log(3.0), 0.2, 0.5)};
  const auto row = aggregate_across_models(reports, Task::Edema)[0];
  EXPECT_NEAR(row.mean_odds_ratio, 2.0, 1e-12);
  double lo = 0, hi = 0;
  for (const auto& r : reports) {
    lo += r.features[1].or_ci_lower / 3;
    hi += r.features[1].or_ci_upper / 3;
  }
  EXPECT_NEAR(row.agg_ci_lower, lo, 1e-12);
  EXPECT_NEAR(row.agg_ci_upper, hi, 1e-12);
  EXPECT_EQ(row.task, Task::Edema);
}

TEST(Aggregate, Errors) {
  EXPECT_THROW(aggregate_across_models(std::vector<FitReport>{}, Task::Edema), InputError);
  auto a = report_with(0, 1, 1), b = report_with(0, 1, 1);
  b.features[1].name = "sex";
  EXPECT_THROW(aggregate_across_models(std::vector<FitReport>{a, b}, Task::Edema), InputError);
}
