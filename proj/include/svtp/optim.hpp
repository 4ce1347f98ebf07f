#pragma once

// Training: stochastic natural-gradient steps on the variational parameters,
// Adam on the hyperparameters, and plain SGD / Adam baselines.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "svtp/data_io.hpp"
#include "svtp/fisher.hpp"
#include "svtp/model.hpp"

namespace svtp {

enum class TrainMode { Sngd, AdamAll, SgdAll };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct SNGDConfig {
  double step_size = 0.01;
  std::size_t batch_size = 1024;
  std::size_t n_mc = 8;
  std::size_t max_iters = 300;
  std::uint64_t seed = 0;
  double nu_floor = 2.001;
  double sigma_floor = 1e-6;
  int backtrack_max = 10;
  std::size_t eval_every = 10;        // 0 disables test-MSE evaluation
  std::size_t n_mc_eval = 32;         // samples for test MSE and the final full-data ELBO
  bool final_full_elbo = true;
  bool record_wall_time = true;
  fisher::Mode fisher_mode = fisher::Mode::Reconciled;
  fisher::DampingPolicy damping;

  void validate() const;
};

struct AdamConfig {
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainRecord {
  std::size_t iter = 0;
  double wall_time_s = 0.0;
  double neg_elbo = 0.0;
  std::optional<double> test_mse;
};

struct AdamMoments {
  Vector first;
  Vector second;
};

/// One Adam update of `params` against the loss gradient `grad` at step t >= 1.
Vector adam_step(const Vector& params, const Vector& grad, AdamMoments& moments,
                 const AdamConfig& cfg, std::size_t t);

/// Supplies the metric used by sngd_step; the default assembles the closed form.
using FisherProvider = std::function<fisher::FisherBlocks(const DiagStudentT&)>;

struct StepInfo {
  double neg_elbo = 0.0;     // mini-batch estimate at the incoming state
  int halvings = 0;
  bool clamped = false;
  bool rejected = false;
  bool fisher_fallback = false;
};

/// Bundles the mini-batch with the Monte-Carlo seed used for every evaluation in a step.
struct Batch {
  Matrix x;
  Vector y;
  std::size_t n_total = 0;
  std::uint64_t mc_seed = 0;
};

/// theta' = theta - lambda (B/N) F^-1 grad(-L_B), hyperparameters untouched.
SVTPState sngd_step(const SVTPState& state, const Batch& batch, const SNGDConfig& cfg,
                    const FisherProvider& fisher = {}, StepInfo* info = nullptr);

/// Plain gradient step on every parameter: p' = p - lambda (B/N) grad(-L_B).
SVTPState sgd_step(const SVTPState& state, const Batch& batch, const SNGDConfig& cfg,
                   StepInfo* info = nullptr);

/// Seed of the Monte-Carlo draws at iteration t of a run seeded with `seed`.
std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t t);

struct TrainResult {
  SVTPState state;
  std::vector<TrainRecord> records;
  std::size_t rejected_steps = 0;
  std::size_t clamped_steps = 0;
  std::size_t fisher_fallbacks = 0;
  std::optional<double> final_neg_elbo;  // full training set, fixed seed
  std::optional<double> final_test_mse;
};

using RecordObserver = std::function<void(const TrainRecord&)>;

TrainResult train(const SVTPState& state0, const Dataset& train_data, const Dataset* test_data,
                  const SNGDConfig& cfg, const AdamConfig& adam_cfg, TrainMode mode,
                  const RecordObserver& observer = {});

double test_mse(const SVTPState& s, const Dataset& test, std::size_t n_mc, std::uint64_t seed);

/// Neg-ELBO over the whole training set with a fixed seed.
double full_neg_elbo(const SVTPState& s, const Dataset& train, std::size_t n_mc,
                     std::uint64_t seed);

enum class SigmaInit {
  Unit,            // sigma_i = 1
  PriorMeanField,  // sigma_i^2 = 1 / (K_ZZ^-1)_ii, so that E[u^T K_ZZ^-1 u] = M at m = 0
};

std::string to_string(SigmaInit init);
SigmaInit parse_sigma_init(const std::string& name);

struct InitOptions {
  SigmaInit sigma_init = SigmaInit::PriorMeanField;
  double nu_tilde = 5.0;
  double prior_nu = 5.0;
  double noise_fraction = 0.1;
};

/// Z = random subset of the training inputs, m = 0, sigma per InitOptions, lengthscale =
/// median pairwise distance, signal sd = sd(y), noise sd = 0.1 sd(y).
SVTPState initial_state(const Dataset& train, std::size_t num_inducing, std::uint64_t seed,
                        const InitOptions& opts = {});

/// N/4 for small training sets, B/4 once N exceeds `large_threshold`.
std::size_t default_inducing_count(std::size_t n_train, std::size_t batch,
                                   std::size_t large_threshold = 10000);

}  // namespace svtp
