#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svtp/optim.hpp"

namespace svtp {

/// Everything a CLI run needs. Zero-valued batch/inducing mean "resolve from the data".
struct RunConfig {
  std::string command = "train";

  // data
  std::string dataset = "synthetic";  // CSV path or "synthetic"
  std::string target;                 // header name or zero-based index; empty = last column
  bool has_header = true;
  double train_frac = 0.8;
  std::uint64_t data_seed = 0;
  std::size_t synthetic_n = 2500;
  std::size_t synthetic_d = 2;
  double synthetic_noise_df = 3.0;
  double synthetic_noise_scale = 0.3;

  // model and initialization
  std::size_t inducing = 0;
  std::string inducing_rule = "auto";  // auto | data | batch
  double prior_nu = 5.0;
  double init_nu_tilde = 5.0;
  double init_noise_fraction = 0.1;
  std::string sigma_init = "prior_mean_field";
  double kzz_jitter = 1e-6;

  // optimization
  std::string mode = "sngd";
  std::vector<std::string> modes{"sngd", "adam_all", "sgd_all"};
  std::size_t iters = 300;
  std::size_t batch = 0;
  double lr = 0.01;
  double adam_lr = -1.0;  // negative: same as lr
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t n_mc = 8;
  std::size_t n_mc_eval = 32;
  std::size_t eval_every = 10;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 5;
  double nu_floor = 2.001;
  double sigma_floor = 1e-6;
  int backtrack_max = 10;
  bool paper_literal = false;
  double damping_relative = 1e-6;
  int damping_max_doublings = 10;
  bool record_wall_time = false;

  // fisher-verify
  std::size_t fisher_samples = 1000000;
  std::uint64_t fisher_seed = 20240905;
  int fisher_sigmas = 3;

  // predict
  std::string model_path;
  std::string input_path;

  std::string out = "svtp_out";

  void validate() const;
  TrainMode train_mode() const { return parse_train_mode(mode); }
  SNGDConfig sngd_config(std::size_t resolved_batch, std::uint64_t run_seed) const;
  AdamConfig adam_config() const;
  InitOptions init_options() const;
};

std::string config_to_json(const RunConfig& c);
/// Accepts a JSON object or flat `key = value` lines; unknown keys are errors.
RunConfig config_from_text(const std::string& text, const RunConfig& base = {});
RunConfig load_config_file(const std::string& path, const RunConfig& base = {});

}  // namespace svtp
