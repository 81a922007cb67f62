// flipaudit: audit, identify and flip misclassifications of binary classifiers.
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "flipaudit/error.hpp"
#include "flipaudit/pipeline/commands.hpp"
#include "flipaudit/pipeline/config.hpp"
#include "flipaudit/util/parallel.hpp"

namespace {

constexpr int kExitCompute = 1;
constexpr int kExitInput = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit, identify and flip misclassified predictions of binary classifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  const std::pair<const char*, const char*> commands[] = {
      {"synth", "generate a synthetic dataset with planted misclassification signal"},
      {"audit", "logistic-regression audit of misclassification vs clinical features and findings"},
      {"identify", "train and evaluate misclassification identifiers"},
      {"flip", "search for and evaluate prediction flipping"},
      {"report", "write summary.md and plot-data CSVs from the other reports"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration (JSON, comments allowed)")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--out", out, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    flipaudit::pipeline::RunConfig config = flipaudit::pipeline::load_config(config_path);
    if (seed) config.seed = *seed;
    if (out) config.output_dir = std::filesystem::absolute(*out).lexically_normal();
    if (config.threads) flipaudit::set_thread_cap(*config.threads);

    for (const auto& w : flipaudit::pipeline::run_command(command, config)) {
      fmt::print(stderr, "warning: {}\n", w);
    }
    fmt::print(stderr, "{}: done, outputs in {}\n", command, config.output_dir.string());
    return 0;
  } catch (const flipaudit::InputError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const flipaudit::ComputeError& e) {
    fmt::print(stderr, "computation failed: {}\n", e.what());
    return kExitCompute;
  } catch (const std::exception& e) {
    fmt::print(stderr, "computation failed: {}\n", e.what());
    return kExitCompute;
  }
}
