#pragma once

// Multivariate Student-t distributions in the (nu - 2)-scaled parameterization,
// where the matrix parameter is the covariance (finite for nu > 2).

#include <cstdint>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "svtp/parallel.hpp"

namespace svtp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cholesky factor together with the diagonal jitter that made it succeed.
struct JitteredCholesky {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  double log_det = 0.0;
};

inline constexpr double kJitterBase = 1e-8;
inline constexpr int kJitterGrowthSteps = 4;

/// Factors A + jitter*I. Tries jitter = 0 first (unless min_relative_jitter > 0),
/// then 1e-8*mean(diag A) growing tenfold up to four times. A positive
/// min_relative_jitter skips every rung below it. Throws NumericalError naming
/// the last jitter tried.
JitteredCholesky cholesky_with_jitter(const Matrix& a, double min_relative_jitter = 0.0);

class DenseStudentT {
 public:
  DenseStudentT(double nu, Vector mean, Matrix cov);

  double nu() const { return nu_; }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }
  const JitteredCholesky& factor() const { return factor_; }

 private:
  double nu_;
  Vector mean_;
  Matrix cov_;
  JitteredCholesky factor_;
};

struct DiagStudentT {
  double nu_tilde = 5.0;
  Vector m;
  Vector sigma;

  Eigen::Index dim() const { return m.size(); }
  /// Throws DomainError unless nu_tilde > 2, sigma > 0 and sizes agree.
  void validate() const;
};

/// Draws u = m + sigma .* z * sqrt((nu - 2) / w), z ~ N(0, I), w ~ chi2(nu).
struct TSampleBatch {
  RowMatrix u;  // n_samples x M
  RowMatrix z;  // n_samples x M
  Vector w;     // n_samples
  std::uint64_t seed = 0;
};

double log_density_dense(const DenseStudentT& d, const Vector& y);

double log_density_diag(const DiagStudentT& q, const Vector& u);

TSampleBatch sample_diag(const DiagStudentT& q, std::size_t n_samples, std::uint64_t seed,
                         parallel::Exec exec = parallel::Exec::Parallel);

/// Gradient of log_density_diag with respect to (m_1..m_M, nu_tilde, sigma_1..sigma_M).
Vector score(const DiagStudentT& q, const Vector& u);

/// Score evaluated from the standardized residual xi = (u - m) / (sqrt(nu - 2) sigma),
/// with the nu-only part alpha(nu, M) precomputed. Used by the Monte-Carlo kernels.
void score_from_xi(double nu_tilde, double alpha, const double* xi, const Vector& sigma,
                   double* out);

}  // namespace svtp
