#pragma once

#include <string>
#include <vector>

#include "flipaudit/pipeline/config.hpp"

namespace flipaudit::pipeline {

// Each command reads its inputs, computes everything in memory and only then
// writes its outputs (all-or-nothing) into config.output_dir. Errors are
// InputError (exit 2) or ComputeError (exit 1); skipped work is returned as
// warnings.
using Warnings = std::vector<std::string>;

// studies.csv, outputs.csv, hierarchy.json (unless one was configured), synth_recipe.json
Warnings cmd_synth(const RunConfig& config);
// audit_report.csv, audit_aggregate.csv
Warnings cmd_audit(const RunConfig& config);
// identifier_report.csv, identifier_summary.csv
Warnings cmd_identify(const RunConfig& config);
// flip_report.csv
Warnings cmd_flip(const RunConfig& config);
// summary.md, plot_audit_odds_ratios.csv, plot_identifier_auroc.csv, plot_flip_f1_change.csv
Warnings cmd_report(const RunConfig& config);

// Maps a command name to one of the above; InputError for unknown names.
Warnings run_command(const std::string& name, const RunConfig& config);

}  // namespace flipaudit::pipeline
