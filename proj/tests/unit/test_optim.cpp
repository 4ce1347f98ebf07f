#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "svtp/errors.hpp"
#include "svtp/optim.hpp"

namespace {

using namespace svtp;
using svtp::testing::random_instance;
using svtp::testing::random_vector;

fisher::FisherBlocks identity_blocks(const DiagStudentT& q) {
  const Eigen::Index M = q.dim();
  fisher::FisherBlocks b;
  b.fm_diag = Vector::Ones(M);
  b.f_nu = 1.0;
  b.f_nu_s = Vector::Zero(M);
  b.f_s = Matrix::Identity(M, M);
  return b;
}

Batch make_batch(const svtp::testing::ModelInstance& inst, std::size_t n_total, std::uint64_t seed) {
  return Batch{inst.xb, inst.yb, n_total, seed};
}

SNGDConfig small_config(double lr) {
  SNGDConfig c;
  c.step_size = lr;
  c.n_mc = 16;
  return c;
}

TEST(SngdStep, ZeroStepSizeLeavesStateUnchanged) {
  std::mt19937_64 rng(1);
  auto inst = random_instance(rng, 4, 10);
  const auto out = sngd_step(inst.state, make_batch(inst, inst.n_total, 3), small_config(0.0));
  EXPECT_TRUE((pack_theta(out.q).array() == pack_theta(inst.state.q).array()).all());
  EXPECT_TRUE((pack_hyper(out).array() == pack_hyper(inst.state).array()).all());
}

TEST(SngdStep, IdentityFisherFullBatchIsPlainGradientStep) {
  std::mt19937_64 rng(2);
  auto inst = random_instance(rng, 3, 12);
  const std::size_t n = 12;  // B = N
  const double lr = 1e-3;
  const Batch batch = make_batch(inst, n, 8);
  const auto out = sngd_step(inst.state, batch, small_config(lr), identity_blocks);
  const auto r = elbo_minibatch(inst.state, batch.x, batch.y, n, 16, 8);
  const Vector expected = pack_theta(inst.state.q) - lr * (-r.grad.theta());
  EXPECT_TRUE((pack_theta(out.q).array() == expected.array()).all())
      << (pack_theta(out.q) - expected).transpose();
  EXPECT_TRUE((pack_hyper(out).array() == pack_hyper(inst.state).array()).all());
}

TEST(SngdStep, MatchesSgdUpdateOnThetaWithIdentityFisher) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 5; ++k) {
    auto inst = random_instance(rng, 2 + k, 8);
    const Batch batch = make_batch(inst, inst.n_total, 40 + k);
    const auto cfg = small_config(2e-3);
    const auto a = sngd_step(inst.state, batch, cfg, identity_blocks);
    const auto b = sgd_step(inst.state, batch, cfg);
    EXPECT_TRUE((pack_theta(a.q).array() == pack_theta(b.q).array()).all()) << "k=" << k;
  }
}

TEST(SngdStep, BacktracksOutOfInfeasibleDof) {
  std::mt19937_64 rng(4);
  int constructed = 0;
  for (int k = 0; k < 40 && constructed < 3; ++k) {
    auto inst = random_instance(rng, 3, 10);
    SNGDConfig cfg = small_config(1.0);
    const Batch batch = make_batch(inst, inst.n_total, 100 + k);
    const auto r = elbo_minibatch(inst.state, batch.x, batch.y, batch.n_total, cfg.n_mc, batch.mc_seed);
    const auto blocks = fisher::assemble(inst.state.q.nu_tilde, 3, inst.state.q.sigma, cfg.damping);
    const Vector d = fisher::natural_direction(blocks, -r.grad.theta());
    const double scale = static_cast<double>(batch.x.rows()) / static_cast<double>(batch.n_total);
    if (!(d(3) > 0.0)) continue;
    // Full step lands at nu = 2 - 5 (nu - 2).
    cfg.step_size = 6.0 * (inst.state.q.nu_tilde - 2.0) / (scale * d(3));
    ++constructed;
    StepInfo info;
    const auto out = sngd_step(inst.state, batch, cfg, {}, &info);
    EXPECT_GE(out.q.nu_tilde, cfg.nu_floor);
    EXPECT_TRUE((out.q.sigma.array() >= cfg.sigma_floor).all());
    EXPECT_TRUE(info.halvings > 0 || info.clamped || info.rejected);
  }
  EXPECT_GT(constructed, 0);
}

TEST(SngdStep, RejectsInvalidConfig) {
  std::mt19937_64 rng(5);
  auto inst = random_instance(rng, 2, 4);
  SNGDConfig cfg = small_config(-1.0);
  EXPECT_THROW(sngd_step(inst.state, make_batch(inst, 12, 1), cfg), DomainError);
}

TEST(Adam, ZeroGradientKeepsParametersAndDecaysMoments) {
  AdamConfig cfg;
  AdamMoments mom{Vector::Constant(3, 0.5), Vector::Constant(3, 0.25)};
  const Vector p = (Vector(3) << 1.0, -2.0, 3.0).finished();
  // The moments still carry the past, so the step is nonzero but the update uses only them.
  const Vector out = adam_step(p, Vector::Zero(3), mom, cfg, 5);
  EXPECT_TRUE((mom.first.array() == 0.5 * cfg.beta1).all());
  EXPECT_TRUE((mom.second.array() == 0.25 * cfg.beta2).all());
  AdamMoments fresh{Vector::Zero(3), Vector::Zero(3)};
  const Vector same = adam_step(p, Vector::Zero(3), fresh, cfg, 1);
  EXPECT_TRUE((same.array() == p.array()).all());
  EXPECT_TRUE(out.allFinite());
}

TEST(Adam, FirstStepIsNormalizedGradient) {
  AdamConfig cfg;
  cfg.step_size = 0.05;
  AdamMoments mom{Vector::Zero(3), Vector::Zero(3)};
  const Vector g = (Vector(3) << 3.0, -0.2, 1e-3).finished();
  const Vector out = adam_step(Vector::Zero(3), g, mom, cfg, 1);
  for (int i = 0; i < 3; ++i) {
    const double expected = -cfg.step_size * g(i) / (std::abs(g(i)) + cfg.epsilon);
    EXPECT_NEAR(out(i), expected, 1e-12);
  }
}

TEST(Adam, StepBoundedUnderConstantGradient) {
  AdamConfig cfg;
  cfg.step_size = 0.01;
  AdamMoments mom{Vector::Zero(2), Vector::Zero(2)};
  const Vector g = (Vector(2) << 4.0, -0.01).finished();
  Vector p = Vector::Zero(2);
  for (std::size_t t = 1; t <= 500; ++t) {
    const Vector next = adam_step(p, g, mom, cfg, t);
    EXPECT_LE((next - p).cwiseAbs().maxCoeff(), cfg.step_size * (1.0 + cfg.epsilon));
    p = next;
  }
}

TEST(Adam, RejectsBadConfig) {
  AdamConfig cfg;
  cfg.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg = AdamConfig{};
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

Dataset small_synthetic(std::size_t n, std::uint64_t seed) {
  return synthetic_t_regression(n, 2, 3.0, 0.3, seed);
}

SNGDConfig run_config(std::size_t iters, std::size_t batch) {
  SNGDConfig c;
  c.step_size = 0.01;
  c.batch_size = batch;
  c.max_iters = iters;
  c.n_mc = 8;
  c.eval_every = 5;
  c.record_wall_time = false;
  return c;
}

TEST(Train, ZeroIterationsReturnsInitialState) {
  const Dataset d = small_synthetic(80, 1);
  const SVTPState s0 = initial_state(d, 6, 2);
  const auto r = train(s0, d, nullptr, run_config(0, 20), AdamConfig{}, TrainMode::Sngd);
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE((pack_theta(r.state.q).array() == pack_theta(s0.q).array()).all());
  EXPECT_TRUE((pack_hyper(r.state).array() == pack_hyper(s0).array()).all());
}

TEST(Train, DeterministicRecordsInEveryMode) {
  const Dataset d = small_synthetic(120, 3);
  const Dataset t = small_synthetic(40, 4);
  const SVTPState s0 = initial_state(d, 8, 5);
  for (TrainMode mode : {TrainMode::Sngd, TrainMode::AdamAll, TrainMode::SgdAll}) {
    auto cfg = run_config(15, 30);
    cfg.seed = 11;
    const auto a = train(s0, d, &t, cfg, AdamConfig{}, mode);
    const auto b = train(s0, d, &t, cfg, AdamConfig{}, mode);
    ASSERT_EQ(a.records.size(), 15u);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].iter, i + 1);
      EXPECT_EQ(a.records[i].neg_elbo, b.records[i].neg_elbo);
      EXPECT_EQ(a.records[i].test_mse.has_value(), b.records[i].test_mse.has_value());
      if (a.records[i].test_mse) EXPECT_EQ(*a.records[i].test_mse, *b.records[i].test_mse);
    }
    EXPECT_TRUE(a.records[4].test_mse.has_value());
    EXPECT_FALSE(a.records[3].test_mse.has_value());
    EXPECT_TRUE(a.records.back().test_mse.has_value());
    EXPECT_TRUE((pack_theta(a.state.q).array() == pack_theta(b.state.q).array()).all());
  }
}

TEST(Train, ConstraintsHoldAtEveryState) {
  std::mt19937_64 rng(6);
  auto inst = random_instance(rng, 4, 16);
  SNGDConfig cfg = small_config(0.5);
  SVTPState s = inst.state;
  for (std::uint64_t t = 0; t < 60; ++t) {
    s = sngd_step(s, Batch{inst.xb, inst.yb, inst.n_total, t}, cfg);
    ASSERT_GT(s.q.nu_tilde, 2.0);
    ASSERT_TRUE((s.q.sigma.array() > 0.0).all());
  }
  const Dataset d = small_synthetic(100, 7);
  for (TrainMode mode : {TrainMode::Sngd, TrainMode::AdamAll, TrainMode::SgdAll}) {
    auto c = run_config(25, 25);
    c.step_size = 0.2;
    const auto r = train(initial_state(d, 6, 1), d, nullptr, c, AdamConfig{}, mode);
    EXPECT_GT(r.state.q.nu_tilde, 2.0);
    EXPECT_TRUE((r.state.q.sigma.array() > 0.0).all());
  }
}

TEST(Train, ObserverSeesStrictlyIncreasingIterations) {
  const Dataset d = small_synthetic(60, 8);
  std::vector<std::size_t> seen;
  train(initial_state(d, 4, 1), d, nullptr, run_config(7, 20), AdamConfig{}, TrainMode::AdamAll,
        [&](const TrainRecord& r) { seen.push_back(r.iter); });
  ASSERT_EQ(seen.size(), 7u);
  for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i + 1);
}

TEST(MiniBatch, DisjointBatchesAverageToFullGradient) {
  std::mt19937_64 rng(9);
  auto inst = random_instance(rng, 4, 40);
  const std::size_t n = 40, b = 10;
  const auto full = elbo_minibatch(inst.state, inst.xb, inst.yb, n, 16, 5);
  Vector theta_sum = Vector::Zero(full.grad.theta().size());
  Vector hyper_sum = Vector::Zero(full.grad.hyper().size());
  for (std::size_t k = 0; k < n / b; ++k) {
    const auto r = elbo_minibatch(inst.state, inst.xb.middleRows(k * b, b),
                                  inst.yb.segment(k * b, b), n, 16, 5);
    theta_sum += r.grad.theta();
    hyper_sum += r.grad.hyper();
  }
  const double kb = static_cast<double>(n / b);
  EXPECT_LE((theta_sum / kb - full.grad.theta()).norm(), 1e-9 * full.grad.theta().norm());
  EXPECT_LE((hyper_sum / kb - full.grad.hyper()).norm(), 1e-9 * full.grad.hyper().norm());
}

TEST(Train, MovingAverageOfNegElboIsNonIncreasing) {
  const Dataset all = synthetic_t_regression(2500, 2, 3.0, 0.3, 0);
  constexpr std::size_t kIters = 300, kWindow = 50;
  std::vector<std::vector<double>> curves;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [tr, te] = split_standardize(all, 0.8, seed);
    auto cfg = run_config(kIters, 256);
    cfg.seed = seed;
    cfg.eval_every = 0;
    cfg.final_full_elbo = false;
    const auto r = train(initial_state(tr, 32, seed), tr, nullptr, cfg, AdamConfig{}, TrainMode::Sngd);
    std::vector<double> c;
    for (const auto& rec : r.records) c.push_back(rec.neg_elbo);
    curves.push_back(c);
  }
  std::vector<double> median(kIters);
  for (std::size_t i = 0; i < kIters; ++i) {
    std::vector<double> v;
    for (const auto& c : curves) v.push_back(c[i]);
    std::nth_element(v.begin(), v.begin() + 2, v.end());
    median[i] = v[2];
  }
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t end = kWindow; end <= kIters; ++end) {
    double avg = 0.0;
    for (std::size_t i = end - kWindow; i < end; ++i) avg += median[i];
    avg /= kWindow;
    EXPECT_LE(avg, prev) << "window ending at " << end;
    prev = avg;
  }
}

TEST(Init, InitialStateFollowsConventions) {
  const Dataset d = small_synthetic(200, 10);
  const SVTPState s = initial_state(d, 12, 3);
  ASSERT_EQ(s.num_inducing(), 12);
  for (Eigen::Index i = 0; i < 12; ++i) {
    bool found = false;
    for (Eigen::Index r = 0; r < d.size() && !found; ++r) found = (d.X.row(r) == s.Z.row(i));
    EXPECT_TRUE(found) << "inducing row " << i;
  }
  EXPECT_TRUE((s.q.m.array() == 0.0).all());
  EXPECT_EQ(s.q.nu_tilde, 5.0);
  const double mean = d.y.mean();
  const double sd = std::sqrt((d.y.array() - mean).square().sum() / d.size());
  EXPECT_NEAR(std::exp(s.log_noise_sd), 0.1 * sd, 1e-3 * sd);
  EXPECT_NEAR(std::exp(s.kernel.log_signal_sd), sd, 1e-3 * sd);
  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const Vector inv_diag = kzz.factor.llt.solve(Matrix::Identity(12, 12)).diagonal();
  EXPECT_LE((s.q.sigma.array().square() * inv_diag.array() - 1.0).abs().maxCoeff(), 1e-8);

  InitOptions unit;
  unit.sigma_init = SigmaInit::Unit;
  EXPECT_TRUE((initial_state(d, 12, 3, unit).q.sigma.array() == 1.0).all());
}

TEST(Init, DefaultInducingCount) {
  EXPECT_EQ(default_inducing_count(2000, 1000), 500u);
  EXPECT_EQ(default_inducing_count(40000, 1024), 256u);
  EXPECT_EQ(default_inducing_count(2, 2), 1u);
}

TEST(Modes, ParseAndPrint) {
  for (TrainMode m : {TrainMode::Sngd, TrainMode::AdamAll, TrainMode::SgdAll})
    EXPECT_EQ(parse_train_mode(to_string(m)), m);
  EXPECT_THROW(parse_train_mode("lbfgs"), InputError);
  EXPECT_EQ(parse_sigma_init("unit"), SigmaInit::Unit);
  EXPECT_EQ(parse_sigma_init(to_string(SigmaInit::PriorMeanField)), SigmaInit::PriorMeanField);
}

}  // namespace
