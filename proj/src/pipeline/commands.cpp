#include "flipaudit/pipeline/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <tuple>

#include <fmt/format.h>

#include "flipaudit/core/splits.hpp"
#include "flipaudit/error.hpp"
#include "flipaudit/glm/audit.hpp"
#include "flipaudit/metrics/misclass.hpp"
#include "flipaudit/util/csv.hpp"
#include "flipaudit/util/files.hpp"
#include "flipaudit/util/parallel.hpp"
#include "flipaudit/util/seed.hpp"

namespace flipaudit::pipeline {

namespace fs = std::filesystem;
using csv::format_double;

namespace {

using FileSet = std::vector<std::pair<fs::path, std::string>>;

Dataset load_inputs(const RunConfig& c) {
  for (const fs::path& p : {c.studies_path(), c.outputs_path(), c.hierarchy_path()}) {
    if (!fs::exists(p)) {
      throw InputError(fmt::format("input '{}' does not exist (run `flipaudit synth` or set the data paths)",
                                   p.string()));
    }
  }
  return load_dataset(c.studies_path(), c.outputs_path(), c.hierarchy_path());
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string rows_to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out = csv::join(header) + "\n";
  for (const auto& r : rows) out += csv::join(r) + "\n";
  return out;
}

constexpr std::array<glm::FeatureKind, 3> kAnalyses = {glm::FeatureKind::Clinical, glm::FeatureKind::Findings,
                                                      glm::FeatureKind::AgeComorbidity};

}  // namespace

Warnings cmd_synth(const RunConfig& c) {
  const LabelHierarchy hierarchy = c.hierarchy_json ? load_hierarchy(*c.hierarchy_json) : LabelHierarchy::standard();
  const synth::SynthResult result = synth::generate(c.synth, hierarchy, c.seed);
  auto [studies, outputs] = format_dataset(result.dataset);
  FileSet files = {{c.studies_path(), std::move(studies)},
                   {c.outputs_path(), std::move(outputs)},
                   {c.output_dir / "synth_recipe.json", synth::recipe_json(c.synth, result, c.seed)}};
  if (!c.hierarchy_json) files.emplace_back(c.hierarchy_path(), hierarchy_to_json(hierarchy));
  write_files_atomically(files);
  return {};
}

Warnings cmd_audit(const RunConfig& c) {
  const Dataset ds = load_inputs(c);
  const auto fold =
      train_test_split(ds.size(), c.audit_threshold_fraction, derive_seed(c.seed, "audit-threshold-fold")).train;

  struct Cell {
    metrics::MisclassMatrix misclass;
    std::array<glm::FitReport, kAnalyses.size()> fits;
  };
  std::vector<Cell> cells(ds.num_models() * kNumTasks);
  parallel_for(cells.size(), [&](std::size_t i) {
    const std::size_t model = i / kNumTasks;
    const Task task = kAllTasks[i % kNumTasks];
    Cell& cell = cells[i];
    cell.misclass = metrics::build_misclass_matrix(ds, model, task, fold);
    cell.fits[0] = glm::audit_clinical(ds, cell.misclass, c.glm);
    cell.fits[1] = glm::audit_findings(ds, cell.misclass, c.glm);
    cell.fits[2] = glm::audit_age_comorbidity(ds, cell.misclass, c.glm);
  });

  Warnings warnings;
  std::vector<std::vector<std::string>> report;
  for (const Cell& cell : cells) {
    for (std::size_t a = 0; a < kAnalyses.size(); ++a) {
      const glm::FitReport& fit = cell.fits[a];
      const std::string analysis(glm::feature_kind_name(kAnalyses[a]));
      if (!fit.converged) {
        warnings.push_back(fmt::format("{} / {} / {}: {}; excluded from aggregates", cell.misclass.model_id,
                                       task_name(cell.misclass.task), analysis, fit.diagnostic));
      }
      for (const auto& f : fit.features) {
        report.push_back({cell.misclass.model_id, std::string(task_name(cell.misclass.task)), analysis, f.name,
                          format_double(cell.misclass.threshold.threshold), format_double(f.coefficient),
                          format_double(f.std_error), format_double(f.z_value), format_double(f.p_value),
                          format_double(f.odds_ratio), format_double(f.or_ci_lower), format_double(f.or_ci_upper),
                          fmt_bool(f.significant()), fmt_bool(fit.converged), fmt_bool(fit.separation)});
      }
    }
  }

  std::vector<std::vector<std::string>> aggregate;
  for (Task task : kAllTasks) {
    for (std::size_t a = 0; a < kAnalyses.size(); ++a) {
      std::vector<glm::FitReport> usable;
      for (std::size_t m = 0; m < ds.num_models(); ++m) {
        const auto& fit = cells[m * kNumTasks + index_of(task)].fits[a];
        if (fit.converged) usable.push_back(fit);
      }
      if (usable.empty()) {
        warnings.push_back(fmt::format("{} / {}: no converged fits to aggregate", task_name(task),
                                       glm::feature_kind_name(kAnalyses[a])));
        continue;
      }
      for (const auto& row : glm::aggregate_across_models(usable, task)) {
        aggregate.push_back({std::string(task_name(task)), std::string(glm::feature_kind_name(kAnalyses[a])),
                             row.feature, std::to_string(row.n_models), std::to_string(row.n_significant_models),
                             format_double(row.mean_odds_ratio), format_double(row.agg_ci_lower),
                             format_double(row.agg_ci_upper)});
      }
    }
  }

  write_files_atomically(
      {{c.output_dir / "audit_report.csv",
        rows_to_csv({"model_id", "task", "analysis", "feature", "threshold", "coefficient", "std_error", "z_value",
                     "p_value", "odds_ratio", "ci_lower", "ci_upper", "significant", "converged", "separation"},
                    report)},
       {c.output_dir / "audit_aggregate.csv",
        rows_to_csv({"task", "analysis", "feature", "n_models", "n_significant_models", "mean_odds_ratio",
                     "ci_lower", "ci_upper"},
                    aggregate)}});
  return warnings;
}

Warnings cmd_identify(const RunConfig& c) {
  const Dataset ds = load_inputs(c);
  identify::EvalOptions options;
  options.splits = c.identify_splits;
  options.n_resamples = c.n_resamples;
  options.kinds = c.identify_kinds;
  const auto report = identify::evaluate_identifiers(ds, c.backend, options, c.seed);

  std::vector<std::vector<std::string>> cells, summary;
  for (const auto& cell : report.cells) {
    cells.push_back({std::string(task_name(cell.task)), std::string(identify::kind_name(cell.kind)), cell.model_id,
                     std::to_string(cell.split), format_double(cell.threshold), format_double(cell.auroc.point),
                     format_double(cell.auroc.lower), format_double(cell.auroc.upper)});
  }
  for (const auto& s : report.summary) {
    summary.push_back({std::string(task_name(s.task)), std::string(identify::kind_name(s.kind)),
                       std::to_string(s.n_cells), format_double(s.mean_auroc), format_double(s.ci_lower),
                       format_double(s.ci_upper)});
  }
  write_files_atomically(
      {{c.output_dir / "identifier_report.csv",
        rows_to_csv({"task", "kind", "model_id", "split", "threshold", "auroc", "ci_lower", "ci_upper"}, cells)},
       {c.output_dir / "identifier_summary.csv",
        rows_to_csv({"task", "kind", "n_cells", "mean_auroc", "ci_lower", "ci_upper"}, summary)}});
  return report.warnings;
}

Warnings cmd_flip(const RunConfig& c) {
  const Dataset ds = load_inputs(c);
  flip::FlipOptions options = c.flip;
  options.n_resamples = c.n_resamples;

  struct Job {
    Task task;
    identify::IdentifierKind kind;
    std::size_t model;
    std::size_t split;
  };
  std::vector<Job> jobs;
  for (Task t : kAllTasks) {
    for (auto k : c.flip_kinds) {
      for (std::size_t m = 0; m < ds.num_models(); ++m) {
        for (std::size_t s = 0; s < c.flip_splits; ++s) jobs.push_back({t, k, m, s});
      }
    }
  }
  std::vector<std::optional<flip::FlipRun>> runs(jobs.size());
  std::vector<std::string> errors(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& j = jobs[i];
    try {
      runs[i] = flip::evaluate_flipping(ds, j.model, j.task, j.kind, c.backend, options, j.split, c.seed);
    } catch (const ComputeError& e) {
      errors[i] = fmt::format("{} / {} / {} / split {}: {}; skipped", task_name(j.task), identify::kind_name(j.kind),
                              ds.model_ids()[j.model], j.split, e.what());
    }
  });

  Warnings warnings;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!runs[i]) {
      warnings.push_back(errors[i]);
      continue;
    }
    const flip::FlipRun& r = *runs[i];
    const flip::FlipOutcome& o = r.outcome;
    rows.push_back({std::string(task_name(r.task)), std::string(identify::kind_name(r.kind)), r.model_id,
                    std::to_string(r.split), fmt_bool(o.decision.flip), std::to_string(o.decision.k),
                    format_double(o.decision.flipping_threshold), format_double(o.decision.top_k_precision),
                    format_double(o.f1_before), format_double(o.f1_after), format_double(o.f1_change),
                    format_double(o.f1_change_ci.lower), format_double(o.f1_change_ci.upper)});
  }
  write_files_atomically(
      {{c.output_dir / "flip_report.csv",
        rows_to_csv({"task", "identifier_kind", "model_id", "split", "flipped", "k", "flipping_threshold",
                     "top_k_precision", "f1_before", "f1_after", "f1_change", "ci_lower", "ci_upper"},
                    rows)}});
  return warnings;
}

namespace {

csv::Table read_prerequisite(const RunConfig& c, const std::string& file, const std::string& command) {
  const fs::path p = c.output_dir / file;
  if (!fs::exists(p)) {
    throw InputError(fmt::format("{} not found in '{}'; run `flipaudit {} --config <config>` first", file,
                                 c.output_dir.string(), command));
  }
  return csv::read_file(p);
}

// Column accessor over a csv::Table with the source name baked in.
struct Columns {
  const csv::Table& table;
  std::string source;
  std::size_t operator()(std::string_view name) const { return table.column(name, source); }
};

std::string ci_text(double lo, double hi) { return fmt::format("[{:.3f}, {:.3f}]", lo, hi); }

double num(const csv::Row& row, std::size_t col, std::string_view what) {
  return csv::parse_double(row.fields[col], what, row.line);
}

}  // namespace

Warnings cmd_report(const RunConfig& c) {
  const csv::Table audit = read_prerequisite(c, "audit_aggregate.csv", "audit");
  const csv::Table ident = read_prerequisite(c, "identifier_summary.csv", "identify");
  const csv::Table flips = read_prerequisite(c, "flip_report.csv", "flip");

  std::string md = "# Misclassification audit summary\n\n";
  md += fmt::format("Master seed: {}\n", c.seed);

  // Audit: odds ratios averaged over models.
  std::vector<std::vector<std::string>> audit_plot;
  {
    Columns col{audit, "audit_aggregate.csv"};
    const auto task = col("task"), analysis = col("analysis"), feature = col("feature"), n = col("n_models"),
               sig = col("n_significant_models"), or_ = col("mean_odds_ratio"), lo = col("ci_lower"),
               hi = col("ci_upper");
    std::string current;
    for (const auto& r : audit.rows) {
      const auto& f = r.fields;
      if (f[analysis] != current) {
        current = f[analysis];
        md += fmt::format("\n## Odds ratios of misclassification: {} covariates\n\n", current);
        md += "| task | feature | mean OR | mean 95% CI | significant models |\n|---|---|---|---|---|\n";
      }
      const double o = num(r, or_, "mean_odds_ratio"), l = num(r, lo, "ci_lower"), h = num(r, hi, "ci_upper");
      md += fmt::format("| {} | {} | {:.3f} | {} | {}/{} |\n", f[task], f[feature], o, ci_text(l, h), f[sig], f[n]);
      audit_plot.push_back({f[task], f[analysis], f[feature], format_double(o), format_double(l), format_double(h),
                            f[sig], f[n]});
    }
  }

  // Identifiers: one column per kind.
  std::vector<std::vector<std::string>> ident_plot;
  {
    Columns col{ident, "identifier_summary.csv"};
    const auto task = col("task"), kind = col("kind"), n = col("n_cells"), mean = col("mean_auroc"),
               lo = col("ci_lower"), hi = col("ci_upper");
    std::vector<std::string> kinds, tasks;
    std::map<std::pair<std::string, std::string>, std::string> cell;
    for (const auto& r : ident.rows) {
      const auto& f = r.fields;
      if (std::find(kinds.begin(), kinds.end(), f[kind]) == kinds.end()) kinds.push_back(f[kind]);
      if (std::find(tasks.begin(), tasks.end(), f[task]) == tasks.end()) tasks.push_back(f[task]);
      const double m = num(r, mean, "mean_auroc"), l = num(r, lo, "ci_lower"), h = num(r, hi, "ci_upper");
      cell[{f[task], f[kind]}] = fmt::format("{:.3f} {}", m, ci_text(l, h));
      ident_plot.push_back({f[task], f[kind], f[n], format_double(m), format_double(l), format_double(h)});
    }
    md += "\n## Misclassification identifiers: mean test AUROC over models and splits\n\n| task |";
    for (const auto& k : kinds) md += fmt::format(" {} |", k);
    md += "\n|---|";
    for (std::size_t i = 0; i < kinds.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& t : tasks) {
      md += fmt::format("| {} |", t);
      for (const auto& k : kinds) {
        auto it = cell.find({t, k});
        md += fmt::format(" {} |", it == cell.end() ? "-" : it->second);
      }
      md += "\n";
    }
  }

  // Flipping: mean F1 change per (task, identifier), unflipped runs count as zero.
  std::vector<std::vector<std::string>> flip_plot;
  {
    Columns col{flips, "flip_report.csv"};
    const auto task = col("task"), kind = col("identifier_kind"), flipped = col("flipped"),
               change = col("f1_change"), lo = col("ci_lower"), hi = col("ci_upper");
    struct Acc {
      std::size_t runs = 0, flipped = 0;
      double change = 0, lo = 0, hi = 0;
    };
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, Acc> acc;
    for (const auto& r : flips.rows) {
      const auto& f = r.fields;
      const auto key = std::make_pair(f[task], f[kind]);
      if (!acc.count(key)) order.push_back(key);
      Acc& a = acc[key];
      a.runs += 1;
      a.flipped += f[flipped] == "true" ? 1 : 0;
      a.change += num(r, change, "f1_change");
      a.lo += num(r, lo, "ci_lower");
      a.hi += num(r, hi, "ci_upper");
    }
    md += "\n## Flipping: mean test-fold F1 change\n\n";
    md += "| task | identifier | runs flipped | mean F1 change | mean 95% CI |\n|---|---|---|---|---|\n";
    for (const auto& key : order) {
      const Acc& a = acc[key];
      const double n = static_cast<double>(a.runs);
      md += fmt::format("| {} | {} | {}/{} | {:+.4f} | [{:+.4f}, {:+.4f}] |\n", key.first, key.second, a.flipped,
                        a.runs, a.change / n, a.lo / n, a.hi / n);
      flip_plot.push_back({key.first, key.second, std::to_string(a.runs), std::to_string(a.flipped),
                           format_double(a.change / n), format_double(a.lo / n), format_double(a.hi / n)});
    }
  }

  write_files_atomically(
      {{c.output_dir / "summary.md", std::move(md)},
       {c.output_dir / "plot_audit_odds_ratios.csv",
        rows_to_csv({"task", "analysis", "feature", "mean_odds_ratio", "ci_lower", "ci_upper",
                     "n_significant_models", "n_models"},
                    audit_plot)},
       {c.output_dir / "plot_identifier_auroc.csv",
        rows_to_csv({"task", "kind", "n_cells", "mean_auroc", "ci_lower", "ci_upper"}, ident_plot)},
       {c.output_dir / "plot_flip_f1_change.csv",
        rows_to_csv({"task", "identifier_kind", "n_runs", "n_flipped", "mean_f1_change", "mean_ci_lower",
                     "mean_ci_upper"},
                    flip_plot)}});
  return {};
}

Warnings run_command(const std::string& name, const RunConfig& config) {
  if (name == "synth") return cmd_synth(config);
  if (name == "audit") return cmd_audit(config);
  if (name == "identify") return cmd_identify(config);
  if (name == "flip") return cmd_flip(config);
  if (name == "report") return cmd_report(config);
  throw InputError(fmt::format("unknown command '{}'", name));
}

}  // namespace flipaudit::pipeline
