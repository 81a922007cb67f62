// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "flipaudit/core/splits.hpp"
#include "flipaudit/flipping/flipping.hpp"
#include "flipaudit/glm/audit.hpp"
#include "flipaudit/glm/logistic.hpp"
#include "flipaudit/identifiers/identifiers.hpp"
#include "flipaudit/metrics/metrics.hpp"
#include "flipaudit/metrics/misclass.hpp"
#include "flipaudit/pipeline/synth.hpp"
#include "flipaudit/util/seed.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace flipaudit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Worked example: eight sub-matrix counts, before/after F1, rule refuses.
Verdict worked_example() {
  const auto t0 = Clock::now();
  const flip::FlipSubMatrices m{0, 8, 2, 0, 35, 2, 1, 2};
  const auto st = oracle::reconstruct(m.kn01, m.kn11, m.kp01, m.kp11, m.rn00, m.rn10, m.rp00, m.rp10);
  const auto rebuilt = flip::sub_matrices(st.pred, st.label, st.wrong, st.likelihood, 10);
  const auto f = flip::f1_after_from_matrices(rebuilt);
  const auto after = flip::apply_flip(st.pred, st.likelihood, flip::top_k_threshold(st.likelihood, 10) - 0.5);
  const double direct_before = oracle::f1(st.pred, st.label), direct_after = oracle::f1(after, st.label);
  const bool rule = flip::flipping_rule(rebuilt);
  const double secs = seconds_since(t0);
  const bool ok = rebuilt == m && std::abs(f.f1_before - 0.3333) < 1e-4 && std::abs(f.f1_after - 0.25) < 1e-4 &&
                  std::abs(f.change() + 0.0833) < 1e-4 && std::abs(direct_before - f.f1_before) < 1e-12 &&
                  std::abs(direct_after - f.f1_after) < 1e-12 && !rule && secs < 1.0;
  return {ok, fmt::format("F1 {:.4f} -> {:.4f} (change {:+.4f}), rule {}, {:.3f}s", f.f1_before, f.f1_after,
                          f.change(), rule ? "true" : "false", secs)};
}

// 2. Every rule-satisfying instance has F1 after >= F1 before.
Verdict rule_theorem() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(2, "acceptance-theorem"));
  std::size_t checked = 0, violations = 0, strict_cases = 0, strict_violations = 0;
  while (checked < 10000) {
    std::uniform_int_distribution<int> c(0, checked % 4 ? 8 : 25);
    flip::FlipSubMatrices m;
    for (auto* cell : {&m.kn01, &m.kn11, &m.kp01, &m.kp11, &m.rn00, &m.rn10, &m.rp00, &m.rp10}) {
      *cell = static_cast<std::size_t>(c(rng));
    }
    if (!flip::flipping_rule(m)) continue;
    ++checked;
    const auto st = oracle::reconstruct(m.kn01, m.kn11, m.kp01, m.kp11, m.rn00, m.rn10, m.rp00, m.rp10);
    const double before = oracle::f1(st.pred, st.label);
    const double after = oracle::f1(flip::apply_flip(st.pred, st.likelihood, 0.5), st.label);
    const auto closed = flip::f1_after_from_matrices(m);
    if (after < before || closed.f1_after < closed.f1_before || std::abs(closed.f1_after - after) > 1e-12 ||
        std::abs(closed.f1_before - before) > 1e-12) {
      ++violations;
    }
    if (m.kp11 > m.kp01) {
      ++strict_cases;
      strict_violations += !(after > before);
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && strict_violations == 0 && secs < 10.0,
          fmt::format("{} instances, {} violations, {} strict cases with {} violations, {:.2f}s", checked, violations,
                      strict_cases, strict_violations, secs)};
}

// 3. Three-disease binarization and misclassification example.
Verdict table_reproduction() {
  const std::vector<double> outputs = {0.532, 0.123, 0.394}, thresholds = {0.7, 0.5, 0.2};
  const std::vector<int> truth = {0, 1, 1};
  std::vector<int> preds;
  for (std::size_t i = 0; i < 3; ++i) preds.push_back(metrics::binarize(std::vector<double>{outputs[i]}, thresholds[i])[0]);
  const auto wrong = metrics::misclass_ground_truth(preds, truth);
  return {wrong == std::vector<int>{0, 1, 0} && preds == std::vector<int>{0, 0, 1},
          fmt::format("predictions ({}), misclassified ({})", fmt::join(preds, ", "), fmt::join(wrong, ", "))};
}

// 4. AUROC and Youden against brute force.
Verdict metric_oracles() {
  std::mt19937_64 rng(derive_seed(4, "acceptance-metrics"));
  double worst = 0;
  std::size_t youden_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 63;
    std::uniform_int_distribution<int> grid(0, static_cast<int>(n));
    std::bernoulli_distribution coin(0.45);
    std::vector<double> s(n);
    std::vector<int> y(n);
    do {
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = grid(rng) / static_cast<double>(n);
        y[i] = coin(rng);
      }
    } while (std::count(y.begin(), y.end(), 1) == 0 || std::count(y.begin(), y.end(), 0) == 0);
    worst = std::max(worst, std::abs(metrics::auroc(s, y) - oracle::auroc(s, y)));
    const auto got = metrics::youden_threshold(s, y);
    const auto want = oracle::youden_scan(s, y);
    youden_mismatch += got.threshold != want.threshold || got.youden_j != want.j;
  }
  return {worst <= 1e-12 && youden_mismatch == 0,
          fmt::format("1000 instances: max AUROC error {:.1e}, Youden mismatches {}", worst, youden_mismatch)};
}

// 5. IRLS coefficient recovery and null p-value calibration.
Verdict irls_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(derive_seed(5, "acceptance-irls"));
  std::normal_distribution<double> z(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  const std::size_t n = 50000;
  glm::DesignMatrix x;
  x.rows = n;
  std::vector<double> x1(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = z(rng);
    y[i] = u(rng) < oracle::sigmoid(-1 + 2 * x1[i]);
  }
  x.add_column("x1", x1);
  const auto fit = glm::fit_logistic(x, y);
  const double b0 = fit.features[0].coefficient, b1 = fit.features[1].coefficient;

  int below = 0;
  for (int rep = 0; rep < 200; ++rep) {
    glm::DesignMatrix xn;
    xn.rows = 5000;
    std::vector<double> col(5000);
    std::vector<int> yn(5000);
    for (std::size_t i = 0; i < 5000; ++i) {
      col[i] = z(rng);
      yn[i] = u(rng) < 0.3;
    }
    xn.add_column("noise", col);
    below += glm::fit_logistic(xn, yn).features[1].p_value < 0.05;
  }
  const double rate = below / 200.0;
  const double secs = seconds_since(t0);
  const bool ok = fit.converged && std::abs(b0 + 1) <= 0.05 && std::abs(b1 - 2) <= 0.05 && rate >= 0.03 &&
                  rate <= 0.08 && secs < 60.0;
  return {ok, fmt::format("beta = ({:.4f}, {:.4f}), null p<0.05 rate {:.3f}, {:.2f}s", b0, b1, rate, secs)};
}

// 6. Planted +0.02/yr age effect recovered by the clinical audit.
Verdict planted_age() {
  auto spec = synth::SynthSpec::planted();
  spec.n_studies = 20000;
  for (auto& t : spec.tasks) t.finding_effects.clear();  // age and lateral view only
  const auto gen = synth::generate(spec, LabelHierarchy::standard(), derive_seed(6, "acceptance-age"));
  const auto& ds = gen.dataset;
  double sum = 0, lo = std::numeric_limits<double>::infinity(), hi = 0;
  std::size_t fits = 0, significant = 0;
  for (std::size_t m = 0; m < ds.num_models(); ++m) {
    for (Task t : kAllTasks) {
      const auto fold = train_test_split(ds.size(), 0.72, derive_seed(6, "acceptance-age-fold", {m, index_of(t)})).train;
      const auto mm = metrics::build_misclass_matrix(ds, m, t, fold);
      const auto* age = glm::audit_clinical(ds, mm).find("age");
      sum += age->odds_ratio;
      lo = std::min(lo, age->odds_ratio);
      hi = std::max(hi, age->odds_ratio);
      significant += age->significant();
      ++fits;
    }
  }
  const double mean = sum / static_cast<double>(fits);
  return {mean >= 1.015 && mean <= 1.025,
          fmt::format("mean OR/year {:.4f} over {} fits (range {:.4f}..{:.4f}, {} significant); planted exp(0.02) = {:.4f}",
                      mean, fits, lo, hi, significant, std::exp(0.02))};
}

// 7. same_label >= naive > clinical_only >= 0.5 and same_label ~ all_labels, 5 seeds.
Verdict identifier_ordering() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const std::uint64_t seed = derive_seed(7, "acceptance-identifiers", {s});
    const auto gen = synth::generate(synth::SynthSpec::planted(), LabelHierarchy::standard(), seed);
    identify::EvalOptions opt;
    opt.n_resamples = 0;  // point estimates suffice for the ordering
    const auto rep = identify::evaluate_identifiers(gen.dataset, {}, opt, seed);
    std::map<identify::IdentifierKind, std::pair<double, std::size_t>> acc;
    for (const auto& c : rep.cells) {
      acc[c.kind].first += c.auroc.point;
      acc[c.kind].second += 1;
    }
    auto mean = [&](identify::IdentifierKind k) { return acc[k].first / static_cast<double>(acc[k].second); };
    const double naive = mean(identify::IdentifierKind::Naive), clin = mean(identify::IdentifierKind::ClinicalOnly),
                 same = mean(identify::IdentifierKind::SameLabel), all = mean(identify::IdentifierKind::AllLabels);
    const bool seed_ok = same >= naive && naive > clin && clin >= 0.5 && std::abs(same - all) <= 0.05;
    ok = ok && seed_ok;
    detail += fmt::format("{}seed{} same {:.3f} all {:.3f} naive {:.3f} clinical {:.3f}{}", s ? "; " : "", s, same,
                          all, naive, clin, seed_ok ? "" : " (violated)");
  }
  return {ok, fmt::format("{}; {:.1f}s", detail, seconds_since(t0))};
}

// 8. Oracle identifier improves test F1; anti-oracle never flips.
Verdict oracle_flip() {
  int improved = 0, anti_quiet = 0, tied_improved = 0;
  const int n_seeds = 20;
  for (int s = 0; s < n_seeds; ++s) {
    const std::uint64_t seed = derive_seed(8, "acceptance-flip", {static_cast<std::uint64_t>(s)});
    auto spec = synth::SynthSpec::planted();
    spec.n_models = 1;
    for (auto& t : spec.tasks) t.base_rate = 0.15;
    const auto gen = synth::generate(spec, LabelHierarchy::standard(), seed);
    const auto& ds = gen.dataset;
    const Task task = kAllTasks[static_cast<std::size_t>(s) % kNumTasks];
    const auto split = train_val_test_split(ds.size(), 0.6, 0.2, derive_seed(seed, "split"));

    std::vector<double> train_scores;
    std::vector<int> train_labels;
    for (auto i : split.train) {
      train_scores.push_back(ds[i].score(0, task));
      train_labels.push_back(ds[i].label(task));
    }
    const double thr = metrics::youden_threshold(train_scores, train_labels).threshold;

    // Oracle: every misclassified study above every correct one, distinct values.
    // Tied: exactly 1 on misclassified, 0 elsewhere.
    std::mt19937_64 rng(derive_seed(seed, "jitter"));
    std::uniform_real_distribution<double> u(0, 1);
    auto fold = [&](const std::vector<std::size_t>& rows, int mode) {
      auto f = flip::make_fold(ds, rows, 0, task, thr, std::vector<double>(rows.size(), 0.0));
      const auto wrong = f.misclassified();
      for (std::size_t i = 0; i < f.size(); ++i) {
        const int hit = mode == 1 ? 1 - wrong[i] : wrong[i];
        f.likelihoods[i] = mode == 2 ? hit : 0.5 * (hit + u(rng));
      }
      return f;
    };
    auto search = [&](int mode) {
      const auto tr = fold(split.train, mode), va = fold(split.val, mode), te = fold(split.test, mode);
      return flip::flip_search(tr, va, te, flip::default_k_grid(tr.size()), 200, seed);
    };
    improved += search(0).f1_change > 0;
    anti_quiet += !search(1).decision.flip;
    tied_improved += search(2).f1_change > 0;
  }
  const bool ok = improved >= 19 && anti_quiet == n_seeds;
  return {ok, fmt::format("oracle improved {}/{}, anti-oracle no-flip {}/{} (tied 0/1 oracle improved {}/{})", improved,
                          n_seeds, anti_quiet, n_seeds, tied_improved, n_seeds)};
}

// 9. Full CLI pipeline twice, byte-identical output directories.
Verdict determinism() {
  const auto t0 = Clock::now();
  fixtures::TempDir tmp("acceptance_det");
  const fs::path config = fs::path(FLIPAUDIT_SOURCE_DIR) / "configs" / "default.json";
  std::vector<std::map<std::string, std::string>> snaps;
  for (const char* run : {"a", "b"}) {
    const fs::path out = tmp / run;
    for (const char* cmd : {"synth", "audit", "identify", "flip", "report"}) {
      const std::string line = fmt::format("'{}' {} --config '{}' --out '{}' >/dev/null 2>&1", FLIPAUDIT_BINARY, cmd,
                                           config.string(), out.string());
      const int status = std::system(line.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return {false, fmt::format("`flipaudit {}` failed in run {}", cmd, run)};
      }
    }
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), out).string()] = fixtures::read_file(e.path());
    }
    snaps.push_back(std::move(files));
  }
  std::vector<std::string> differing;
  for (const auto& [name, content] : snaps[0]) {
    auto it = snaps[1].find(name);
    if (it == snaps[1].end() || it->second != content) differing.push_back(name);
  }
  const bool ok = differing.empty() && snaps[0].size() == snaps[1].size() && !snaps[0].empty();
  return {ok, fmt::format("{} files compared, {} differ{}{}; {:.1f}s", snaps[0].size(), differing.size(),
                          differing.empty() ? "" : ": ", fmt::join(differing, ", "), seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"worked flip example", worked_example},
      {"flipping rule never lowers F1", rule_theorem},
      {"binarization and misclassification table", table_reproduction},
      {"AUROC and Youden match brute force", metric_oracles},
      {"IRLS recovery and null calibration", irls_recovery},
      {"planted age effect recovered", planted_age},
      {"identifier ordering", identifier_ordering},
      {"oracle flip improvement", oracle_flip},
      {"pipeline determinism", determinism},
  };
  std::set<std::size_t> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoul(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!wanted.empty() && !wanted.count(i + 1)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, fmt::format("exception: {}", e.what())};
    }
    failures += !v.pass;
    fmt::print("[{}] {}. {}: {}\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
