#include "svtp/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "svtp/errors.hpp"

namespace svtp {

namespace {

constexpr std::uint64_t kInitStream = 0x1417;

bool feasible(const DiagStudentT& q, const SNGDConfig& cfg) {
  return q.nu_tilde >= cfg.nu_floor && (q.sigma.array() >= cfg.sigma_floor).all() &&
         q.m.allFinite() && std::isfinite(q.nu_tilde);
}

bool objective_finite(const SVTPState& s, const Batch& batch, std::size_t n_mc) {
  try {
    const auto r = elbo_minibatch(s, batch.x, batch.y, batch.n_total, n_mc, batch.mc_seed, false);
    return std::isfinite(r.value);
  } catch (const NumericalError&) {
    return false;
  } catch (const DomainError&) {
    return false;
  }
}

// (theta, eta)' = (theta, eta) - h * (delta_theta, delta_hyper) with h = 1, 1/2, ...
// until the proposal is feasible and the objective finite; clamps to the floors
// as a last resort.
SVTPState constrained_update(const SVTPState& base, const Vector& delta_theta,
                             const Vector* delta_hyper, const SNGDConfig& cfg,
                             const Batch& batch, StepInfo& info) {
  const Vector theta0 = pack_theta(base.q);
  const Vector hyper0 = delta_hyper ? pack_hyper(base) : Vector();
  SVTPState candidate = base;
  auto propose = [&](double h) {
    unpack_theta(theta0 - h * delta_theta, candidate.q);
    if (delta_hyper) unpack_hyper(hyper0 - h * *delta_hyper, candidate);
  };
  double h = 1.0;
  for (int k = 0; k <= cfg.backtrack_max; ++k, h *= 0.5) {
    propose(h);
    info.halvings = k;
    if (feasible(candidate.q, cfg) && objective_finite(candidate, batch, cfg.n_mc))
      return candidate;
  }
  propose(h * 2.0);
  if (candidate.q.m.allFinite() && std::isfinite(candidate.q.nu_tilde) &&
      candidate.q.sigma.allFinite()) {
    candidate.q.nu_tilde = std::max(candidate.q.nu_tilde, cfg.nu_floor);
    candidate.q.sigma = candidate.q.sigma.cwiseMax(cfg.sigma_floor);
    if (objective_finite(candidate, batch, cfg.n_mc)) {
      info.clamped = true;
      return candidate;
    }
  }
  info.rejected = true;
  return base;
}

struct Evaluated {
  double neg_elbo;
  Vector theta_grad;  // gradient of the loss (-ELBO)
  Vector hyper_grad;
};

Evaluated evaluate_loss(const SVTPState& s, const Batch& batch, std::size_t n_mc) {
  const auto r = elbo_minibatch(s, batch.x, batch.y, batch.n_total, n_mc, batch.mc_seed, true);
  return {-r.value, -r.grad.theta(), -r.grad.hyper()};
}

double batch_fraction(const Batch& batch) {
  return static_cast<double>(batch.x.rows()) / static_cast<double>(batch.n_total);
}

fisher::FisherBlocks default_fisher(const DiagStudentT& q, const SNGDConfig& cfg,
                                    fisher::BetaLinkCache* cache) {
  return fisher::assemble(q.nu_tilde, static_cast<int>(q.dim()), q.sigma, cfg.damping,
                          cfg.fisher_mode, cache);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Sngd: return "sngd";
    case TrainMode::AdamAll: return "adam_all";
    case TrainMode::SgdAll: return "sgd_all";
  }
  return "unknown";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "sngd") return TrainMode::Sngd;
  if (name == "adam_all") return TrainMode::AdamAll;
  if (name == "sgd_all") return TrainMode::SgdAll;
  throw InputError("unknown mode '" + name + "' (expected sngd, adam_all or sgd_all)");
}

void SNGDConfig::validate() const {
  if (!(step_size >= 0.0)) throw DomainError("SNGDConfig: step_size must be nonnegative");
  if (batch_size < 1) throw DomainError("SNGDConfig: batch_size must be >= 1");
  if (n_mc < 1) throw DomainError("SNGDConfig: n_mc must be >= 1");
  if (!(nu_floor > 2.0)) throw DomainError("SNGDConfig: nu_floor must exceed 2");
  if (!(sigma_floor > 0.0)) throw DomainError("SNGDConfig: sigma_floor must be positive");
  if (backtrack_max < 0) throw DomainError("SNGDConfig: backtrack_max must be nonnegative");
}

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw DomainError("AdamConfig: beta1, beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw DomainError("AdamConfig: epsilon must be positive");
  if (!(step_size >= 0.0)) throw DomainError("AdamConfig: step_size must be nonnegative");
}

Vector adam_step(const Vector& params, const Vector& grad, AdamMoments& moments,
                 const AdamConfig& cfg, std::size_t t) {
  if (t < 1) throw DomainError("adam_step: t starts at 1");
  if (moments.first.size() != params.size()) moments.first = Vector::Zero(params.size());
  if (moments.second.size() != params.size()) moments.second = Vector::Zero(params.size());
  moments.first = cfg.beta1 * moments.first + (1.0 - cfg.beta1) * grad;
  moments.second = cfg.beta2 * moments.second + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double td = static_cast<double>(t);
  const double c1 = 1.0 - std::pow(cfg.beta1, td);
  const double c2 = 1.0 - std::pow(cfg.beta2, td);
  const Vector m_hat = moments.first / c1;
  const Vector v_hat = moments.second / c2;
  return params - cfg.step_size * (m_hat.array() / (v_hat.array().sqrt() + cfg.epsilon)).matrix();
}

SVTPState sngd_step(const SVTPState& state, const Batch& batch, const SNGDConfig& cfg,
                    const FisherProvider& fisher, StepInfo* info) {
  cfg.validate();
  StepInfo local;
  StepInfo& out = info ? *info : local;
  out = StepInfo{};
  const auto blocks = fisher ? fisher(state.q) : default_fisher(state.q, cfg, nullptr);
  out.fisher_fallback = blocks.used_mc_fallback;
  const auto loss = evaluate_loss(state, batch, cfg.n_mc);
  out.neg_elbo = loss.neg_elbo;
  const Vector direction = fisher::natural_direction(blocks, loss.theta_grad);
  const Vector delta = cfg.step_size * batch_fraction(batch) * direction;
  return constrained_update(state, delta, nullptr, cfg, batch, out);
}

SVTPState sgd_step(const SVTPState& state, const Batch& batch, const SNGDConfig& cfg,
                   StepInfo* info) {
  cfg.validate();
  StepInfo local;
  StepInfo& out = info ? *info : local;
  out = StepInfo{};
  const auto loss = evaluate_loss(state, batch, cfg.n_mc);
  out.neg_elbo = loss.neg_elbo;
  const double scale = cfg.step_size * batch_fraction(batch);
  const Vector hyper_delta = scale * loss.hyper_grad;
  return constrained_update(state, scale * loss.theta_grad, &hyper_delta, cfg, batch, out);
}

std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t t) {
  return splitmix64(splitmix64(seed) ^ (t + 1));
}

double test_mse(const SVTPState& s, const Dataset& test, std::size_t n_mc, std::uint64_t seed) {
  const auto pred = predict(s, test.X, n_mc, seed);
  return (pred.mean - test.y).squaredNorm() / static_cast<double>(test.y.size());
}

double full_neg_elbo(const SVTPState& s, const Dataset& train, std::size_t n_mc,
                     std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(train.size());
  return -elbo_minibatch(s, train.X, train.y, n, n_mc, seed, false).value;
}

TrainResult train(const SVTPState& state0, const Dataset& train_data, const Dataset* test_data,
                  const SNGDConfig& cfg, const AdamConfig& adam_cfg, TrainMode mode,
                  const RecordObserver& observer) {
  cfg.validate();
  adam_cfg.validate();
  state0.validate();
  if (train_data.size() == 0) throw DomainError("train: empty training set");

  TrainResult result;
  result.state = state0;
  const auto n = static_cast<std::size_t>(train_data.size());
  const std::size_t b = std::min(cfg.batch_size, n);
  const std::uint64_t eval_seed = iteration_seed(cfg.seed, ~0ULL);
  fisher::BetaLinkCache cache;
  AdamMoments hyper_moments;
  AdamMoments all_moments;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    SVTPState& s = result.state;
    StepInfo info;

    // Metric at theta_t, then the mini-batch.
    std::optional<fisher::FisherBlocks> blocks;
    if (mode == TrainMode::Sngd) {
      blocks = default_fisher(s.q, cfg, &cache);
      info.fisher_fallback = blocks->used_mc_fallback;
    }
    const auto idx = minibatch_indices(n, b, cfg.seed, t);
    auto [xb, yb] = gather_rows(train_data, idx);
    const Batch batch{std::move(xb), std::move(yb), n, iteration_seed(cfg.seed, t)};
    const auto loss = evaluate_loss(s, batch, cfg.n_mc);
    info.neg_elbo = loss.neg_elbo;

    SVTPState next = s;
    switch (mode) {
      case TrainMode::Sngd: {
        unpack_hyper(adam_step(pack_hyper(s), loss.hyper_grad, hyper_moments, adam_cfg, t + 1),
                     next);
        const Vector direction = fisher::natural_direction(*blocks, loss.theta_grad);
        next = constrained_update(next, cfg.step_size * batch_fraction(batch) * direction,
                                  nullptr, cfg, batch, info);
        break;
      }
      case TrainMode::AdamAll: {
        const Eigen::Index p = loss.theta_grad.size();
        Vector params(p + loss.hyper_grad.size());
        params << pack_theta(s.q), pack_hyper(s);
        Vector grad(params.size());
        grad << loss.theta_grad, loss.hyper_grad;
        const Vector delta = params - adam_step(params, grad, all_moments, adam_cfg, t + 1);
        const Vector hyper_delta = delta.tail(loss.hyper_grad.size());
        next = constrained_update(s, delta.head(p), &hyper_delta, cfg, batch, info);
        break;
      }
      case TrainMode::SgdAll: {
        const double scale = cfg.step_size * batch_fraction(batch);
        const Vector hyper_delta = scale * loss.hyper_grad;
        next = constrained_update(s, scale * loss.theta_grad, &hyper_delta, cfg, batch, info);
        break;
      }
    }
    if (info.rejected) {
      ++result.rejected_steps;
    } else {
      s = std::move(next);
    }
    if (info.clamped) ++result.clamped_steps;
    if (info.fisher_fallback) ++result.fisher_fallbacks;

    TrainRecord rec;
    rec.iter = t + 1;
    rec.neg_elbo = info.neg_elbo;
    if (cfg.record_wall_time)
      rec.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool eval_now =
        test_data && cfg.eval_every > 0 && ((t + 1) % cfg.eval_every == 0 || t + 1 == cfg.max_iters);
    if (eval_now) rec.test_mse = test_mse(s, *test_data, cfg.n_mc_eval, eval_seed);
    result.records.push_back(rec);
    if (observer) observer(rec);
  }

  if (cfg.final_full_elbo) {
    result.final_neg_elbo = full_neg_elbo(result.state, train_data, cfg.n_mc_eval, eval_seed);
    if (test_data) result.final_test_mse = test_mse(result.state, *test_data, cfg.n_mc_eval, eval_seed);
  }
  return result;
}

std::string to_string(SigmaInit init) {
  return init == SigmaInit::Unit ? "unit" : "prior_mean_field";
}

SigmaInit parse_sigma_init(const std::string& name) {
  if (name == "unit") return SigmaInit::Unit;
  if (name == "prior_mean_field") return SigmaInit::PriorMeanField;
  throw InputError("unknown sigma_init '" + name + "' (expected unit or prior_mean_field)");
}

std::size_t default_inducing_count(std::size_t n_train, std::size_t batch,
                                   std::size_t large_threshold) {
  const std::size_t base = n_train > large_threshold ? batch : n_train;
  return std::max<std::size_t>(1, base / 4);
}

SVTPState initial_state(const Dataset& train, std::size_t num_inducing, std::uint64_t seed,
                        const InitOptions& opts) {
  const auto n = static_cast<std::size_t>(train.size());
  if (n == 0) throw DomainError("initial_state: empty training set");
  if (num_inducing < 1) throw DomainError("initial_state: need at least one inducing point");
  const std::size_t M = std::min(num_inducing, n);

  auto idx = minibatch_indices(n, M, seed ^ kInitStream, 0);
  SVTPState s;
  s.Z = train.X(idx, Eigen::all);
  s.q.nu_tilde = opts.nu_tilde;
  s.q.m = Vector::Zero(static_cast<Eigen::Index>(M));
  s.q.sigma = Vector::Ones(static_cast<Eigen::Index>(M));
  s.prior_nu = opts.prior_nu;

  // Median pairwise distance over a bounded subsample.
  const auto sub = minibatch_indices(n, std::min<std::size_t>(n, 500), seed ^ kInitStream, 1);
  std::vector<double> dists;
  dists.reserve(sub.size() * (sub.size() - 1) / 2);
  for (std::size_t i = 0; i < sub.size(); ++i)
    for (std::size_t j = i + 1; j < sub.size(); ++j)
      dists.push_back((train.X.row(sub[i]) - train.X.row(sub[j])).norm());
  double median = 1.0;
  if (!dists.empty()) {
    auto mid = dists.begin() + static_cast<long>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    if (*mid > 0.0) median = *mid;
  }
  s.kernel.log_lengthscale = std::log(median);
  const double y_mean = train.y.mean();
  double y_sd = std::sqrt((train.y.array() - y_mean).square().mean());
  if (!(y_sd > 0.0)) y_sd = 1.0;
  s.kernel.log_signal_sd = std::log(y_sd);
  s.log_noise_sd = std::log(opts.noise_fraction * y_sd);
  if (opts.sigma_init == SigmaInit::PriorMeanField) {
    const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
    const Matrix kinv = kzz.factor.llt.solve(Matrix::Identity(s.Z.rows(), s.Z.rows()));
    s.q.sigma = kinv.diagonal().cwiseInverse().cwiseSqrt();
  }
  return s;
}

}  // namespace svtp
