#pragma once

#include <cmath>
#include <random>

#include "support.hpp"
#include "svtp/model.hpp"

namespace svtp::testing {

struct ModelInstance {
  SVTPState state;
  Matrix xb;
  Vector yb;
  std::size_t n_total = 0;
};

/// Small random SVTP problem: M inducing points, a batch of B rows out of 3B.
inline ModelInstance random_instance(std::mt19937_64& rng, Eigen::Index M, Eigen::Index B,
                                     Eigen::Index D = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelInstance inst;
  SVTPState& s = inst.state;
  s.Z = random_matrix(rng, M, D, -1.5, 1.5);
  s.q.m = random_vector(rng, M, -1.0, 1.0);
  s.q.sigma = random_vector(rng, M, 0.05, 0.6);
  s.q.nu_tilde = 3.0 + 10.0 * u(rng);
  s.prior_nu = 3.0 + 10.0 * u(rng);
  s.kernel.log_lengthscale = std::log(0.6 + 0.8 * u(rng));
  s.kernel.log_signal_sd = std::log(0.7 + 0.6 * u(rng));
  s.log_noise_sd = std::log(0.2 + 0.3 * u(rng));
  inst.xb = random_matrix(rng, B, D, -2.0, 2.0);
  inst.yb = random_vector(rng, B, -1.5, 1.5);
  inst.n_total = static_cast<std::size_t>(3 * B);
  return inst;
}

struct GradientCheck {
  double max_rel_m = 0.0;      // blockwise ||g - fd|| / ||fd||
  double max_rel_sigma = 0.0;
  double worst_component = 0.0;  // max_i |g_i - fd_i| / max(|fd_i|, |g_i|)
};

/// Central differences of the common-random-number ELBO against the pathwise
/// gradient for the m and sigma blocks.
inline void fd_theta_gradient(const ModelInstance& inst, std::size_t n_mc, std::uint64_t seed,
                              Vector& analytic, Vector& numeric) {
  const SVTPState& s = inst.state;
  const auto r = elbo_minibatch(s, inst.xb, inst.yb, inst.n_total, n_mc, seed, true);
  analytic = r.grad.theta();
  const Vector theta = pack_theta(s.q);
  numeric = Vector::Zero(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta(j)));
    auto at = [&](double v) {
      SVTPState p = s;
      Vector t = theta;
      t(j) = v;
      unpack_theta(t, p.q);
      return elbo_minibatch(p, inst.xb, inst.yb, inst.n_total, n_mc, seed, false).value;
    };
    numeric(j) = central_difference(at, theta(j), h);
  }
}

}  // namespace svtp::testing
