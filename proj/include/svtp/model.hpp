#pragma once

// Sparse variational Student-t process: inducing-value prior, conditional
// p(f | u), Monte-Carlo ELBO with pathwise gradients, and prediction.
//
// The likelihood is Gaussian, y_i ~ N(f_i, noise_sd^2). Given u the marginal
// of f_i is Student-t with dof = nu + M, mean mu_i(u) and variance
// c(u) * Sigma_ii, so E_f[log N(y_i | f_i, noise)] is evaluated exactly and
// only u is sampled.

#include <cstdint>

#include "svtp/kernel.hpp"
#include "svtp/stdist.hpp"

namespace svtp {

struct SVTPState {
  Matrix Z;         // M x D inducing inputs
  DiagStudentT q;   // variational posterior over u
  double prior_nu = 5.0;
  KernelParams kernel;
  double log_noise_sd = -2.302585092994046;  // ln 0.1
  double kzz_min_jitter = 1e-6;              // relative to mean(diag K_ZZ)

  Eigen::Index num_inducing() const { return Z.rows(); }
  Eigen::Index input_dim() const { return Z.cols(); }
  double noise_variance() const;
  void validate() const;
};

struct ConditionalParams {
  double dof = 0.0;           // nu + M
  Vector mean;                // K_XZ K_ZZ^-1 u
  double scale_factor = 0.0;  // (nu + beta - 2) / (nu + M - 2)
  Matrix base_cov;            // K_XX - K_XZ K_ZZ^-1 K_ZX
  double beta = 0.0;          // u^T K_ZZ^-1 u
};

ConditionalParams conditional_given_u(const SVTPState& s, const Matrix& xb, const Vector& u);

struct McEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

/// E_{q(u)} E_{p(f|u)} [sum_i log N(y_i | f_i, noise)] over the given batch.
McEstimate expected_log_lik(const SVTPState& s, const Matrix& xb, const Vector& yb,
                            std::size_t n_mc, std::uint64_t seed);

/// Monte-Carlo KL(q(u) || p(u)) with p(u) = ST(prior_nu, 0, K_ZZ).
McEstimate kl_q_p(const SVTPState& s, std::size_t n_mc, std::uint64_t seed);

/// Gradient of the ELBO estimate with respect to every trainable quantity.
struct ElboGradient {
  Vector m;
  double nu_tilde = 0.0;
  Vector sigma;
  Matrix Z;
  double log_lengthscale = 0.0;
  double log_signal_sd = 0.0;
  double log_noise_sd = 0.0;

  /// theta = (m, nu_tilde, sigma), the coordinate order of the Fisher matrix.
  Vector theta() const;
  /// (vec(Z) column-major, log_lengthscale, log_signal_sd, log_noise_sd).
  Vector hyper() const;
};

struct ElboResult {
  double value = 0.0;  // (N / B) * expected log-lik - KL
  double stderr = 0.0;
  double expected_log_lik = 0.0;
  double kl = 0.0;
  ElboGradient grad;   // filled only when requested
};

/// Mini-batch ELBO estimate and (optionally) its pathwise gradient. The chi-square
/// radius draws are held fixed, so the nu_tilde gradient omits the dependence of
/// their distribution on nu_tilde.
ElboResult elbo_minibatch(const SVTPState& s, const Matrix& xb, const Vector& yb,
                          std::size_t n_total, std::size_t n_mc, std::uint64_t seed,
                          bool with_gradient = true);

struct Prediction {
  Vector mean;
  Vector variance;  // includes noise variance
};

Prediction predict(const SVTPState& s, const Matrix& xstar, std::size_t n_mc,
                   std::uint64_t seed);

// Packing helpers shared by the optimizers.
Vector pack_theta(const DiagStudentT& q);
void unpack_theta(const Vector& theta, DiagStudentT& q);
Vector pack_hyper(const SVTPState& s);
void unpack_hyper(const Vector& hyper, SVTPState& s);

}  // namespace svtp
