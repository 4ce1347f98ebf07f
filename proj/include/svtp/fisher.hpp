#pragma once

// Closed-form Fisher information of the diagonal multivariate Student-t
// q(u) = ST(nu, m, diag(sigma^2)) in the coordinates theta = (m, nu, sigma).
//
// Every block is a Beta-function ratio times a power of 1/sigma. With
// b = Q / (1 + Q) ~ Beta(M/2, nu/2), Q = sum_i (u_i - m_i)^2 / ((nu - 2) sigma_i^2),
// each block reduces to a moment of b:
//
//   F^m_ii  = c_m / sigma_i^2
//   F^nu    = alpha^2 + c_nu_1 alpha + c_nu_2
//   F^S_ii  = (1 - 2 c_s_diag_1 + c_s_diag_2) / sigma_i^2
//   F^S_ij  = (1 - 2 c_s_off_1 + c_s_off_2) / (sigma_i sigma_j)
//   F^nuS_i = (c_nus_1 + c_nus_2 + c_nus_3) / sigma_i
//
// The m block is diagonal and the (m, nu) and (m, sigma) blocks vanish.
//
// Mode::Reconciled ships constants that agree with the Monte-Carlo expectation
// of the score outer product. Mode::PaperLiteral evaluates the originally
// published Beta arguments, kept so the discrepancy stays reproducible.

#include <cstdint>
#include <optional>

#include "svtp/parallel.hpp"
#include "svtp/stdist.hpp"

namespace svtp::fisher {

enum class Mode { Reconciled, PaperLiteral };

struct BetaLinkConstants {
  double alpha_nu = 0.0;
  double c_m = 0.0;
  double c_nu_1 = 0.0;
  double c_nu_2 = 0.0;
  double c_s_diag_1 = 0.0;
  double c_s_diag_2 = 0.0;
  double c_s_off_1 = 0.0;
  double c_s_off_2 = 0.0;
  double c_nus_1 = 0.0;
  double c_nus_2 = 0.0;
  double c_nus_3 = 0.0;
};

/// -Psi(nu/2)/2 + Psi((nu+M)/2)/2 - M / (2 (nu - 2)); the nu-only part of the nu score.
double alpha_nu(double nu_tilde, int M);

BetaLinkConstants beta_link_constants(double nu_tilde, int M, Mode mode = Mode::Reconciled);

Vector fm_closed_form(double nu_tilde, int M, const Vector& sigma, Mode mode = Mode::Reconciled);
double fnu_closed_form(double nu_tilde, int M, Mode mode = Mode::Reconciled);
Matrix fs_closed_form(double nu_tilde, int M, const Vector& sigma, Mode mode = Mode::Reconciled);
Vector fnus_closed_form(double nu_tilde, int M, const Vector& sigma,
                        Mode mode = Mode::Reconciled);

/// Constants memoized per (nu, M, mode); recomputed when nu moves by more than
/// 1e-12 or M/mode change. Not thread-safe: keep one per worker.
class BetaLinkCache {
 public:
  const BetaLinkConstants& get(double nu_tilde, int M, Mode mode);
  std::size_t recomputations() const { return recomputations_; }

 private:
  std::optional<BetaLinkConstants> cached_;
  double nu_ = 0.0;
  int M_ = -1;
  Mode mode_ = Mode::Reconciled;
  std::size_t recomputations_ = 0;
};

struct FisherBlocks {
  Vector fm_diag;   // M
  double f_nu = 0.0;
  Vector f_nu_s;    // M
  Matrix f_s;       // M x M
  double damping = 0.0;
  bool used_mc_fallback = false;

  Eigen::Index dim() const { return fm_diag.size(); }
  /// (2M+1) x (2M+1) matrix in theta order, damping added to the diagonal.
  Matrix dense() const;
};

struct DampingPolicy {
  double relative = 1e-6;   // tau = relative * trace(F) / (2M + 1)
  int max_doublings = 10;
  std::size_t fallback_samples = 100000;
  std::uint64_t fallback_seed = 0xf15e;
};

/// Builds the blocks, then the smallest damping tau * 2^k (k <= max_doublings)
/// under which the assembled matrix is positive definite. If none is, the
/// Monte-Carlo Fisher is used instead and used_mc_fallback is set.
FisherBlocks assemble(double nu_tilde, int M, const Vector& sigma,
                      const DampingPolicy& policy = {}, Mode mode = Mode::Reconciled,
                      BetaLinkCache* cache = nullptr);

/// Solves F d = grad using the block structure: a diagonal solve on the m block
/// and a Cholesky solve on the (nu, sigma) block. Throws NumericalError if the
/// damped (nu, sigma) block is not positive definite.
Vector natural_direction(const FisherBlocks& b, const Vector& grad);

struct MonteCarloFisher {
  Matrix mean;    // (2M+1) x (2M+1)
  Matrix stderr;  // per-entry standard error of the mean
  std::size_t n_samples = 0;
};

/// Sample average of score outer products under q.
MonteCarloFisher mc_fisher_oracle(const DiagStudentT& q, std::size_t n_samples,
                                  std::uint64_t seed,
                                  parallel::Exec exec = parallel::Exec::Parallel);

/// Blocks read out of a dense Fisher matrix (used for the Monte-Carlo fallback).
FisherBlocks blocks_from_dense(const Matrix& f);

}  // namespace svtp::fisher
