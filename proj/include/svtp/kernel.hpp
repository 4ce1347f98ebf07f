#pragma once

// Isotropic squared-exponential kernel
//   k(a, b) = s^2 exp(-|a - b|^2 / (2 l^2)),  s = exp(log_signal_sd), l = exp(log_lengthscale).

#include "svtp/parallel.hpp"
#include "svtp/stdist.hpp"

namespace svtp {

struct KernelParams {
  double log_lengthscale = 0.0;
  double log_signal_sd = 0.0;

  double lengthscale() const;
  double signal_variance() const;
};

/// Rows of A against rows of B; both must have the same column count.
Matrix gram(const KernelParams& p, const Matrix& a, const Matrix& b,
            parallel::Exec exec = parallel::Exec::Parallel);

/// Single-threaded version of gram kept as the reference for the parallel kernel.
Matrix gram_reference(const KernelParams& p, const Matrix& a, const Matrix& b);

struct JitteredGram {
  Matrix k;  // gram(A, A) + jitter I
  JitteredCholesky factor;
};

/// gram(A, A) plus the smallest ladder jitter whose Cholesky succeeds.
JitteredGram gram_with_jitter(const KernelParams& p, const Matrix& a,
                              double min_relative_jitter = 0.0);

}  // namespace svtp
