#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "svtp/run_config.hpp"

namespace svtp::cli {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;  // fisher-verify found failing entries
constexpr int kExitConfig = 2;       // bad configuration, CLI usage or IO
constexpr int kExitNumerical = 3;    // training or evaluation broke down numerically

struct PreparedData {
  Dataset train;
  Dataset test;
  std::size_t batch = 0;
  std::size_t inducing = 0;
};

/// Loads or generates the dataset, splits and standardizes it with `split_seed`,
/// and resolves automatic batch and inducing counts.
PreparedData prepare_data(const RunConfig& cfg, std::uint64_t split_seed);

std::string model_to_json(const SVTPState& s, const Standardization& st,
                          const std::vector<std::string>& feature_names, const std::string& target);

struct LoadedModel {
  SVTPState state;
  Standardization standardization;
  std::vector<std::string> feature_names;
  std::string target;
};
LoadedModel load_model(const std::string& path);

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Called before each (mode, seed index) run of cmd_compare; an exception it
/// throws aborts that run only.
using RunHook = std::function<void(const std::string& mode, std::size_t seed_index)>;
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err,
                const RunHook& hook = {});

int cmd_fisher_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand + flags over an optional --config file) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svtp::cli
