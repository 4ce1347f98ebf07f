#include "svtp/kernel.hpp"

#include <cmath>

#include "svtp/errors.hpp"

namespace svtp {

namespace {

constexpr std::size_t kGramRowChunk = 64;

void check_shapes(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("gram: inputs differ in feature dimension");
}

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double d = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const double diff = a(i, c) - b(j, c);
    d += diff * diff;
  }
  return d;
}

}  // namespace

double KernelParams::lengthscale() const { return std::exp(log_lengthscale); }

double KernelParams::signal_variance() const { return std::exp(2.0 * log_signal_sd); }

Matrix gram(const KernelParams& p, const Matrix& a, const Matrix& b, parallel::Exec exec) {
  check_shapes(a, b);
  const double s2 = p.signal_variance();
  const double scale = -0.5 / (p.lengthscale() * p.lengthscale());
  Matrix out(a.rows(), b.rows());
  parallel::for_chunks(static_cast<std::size_t>(a.rows()), kGramRowChunk, exec,
                       [&](std::size_t, std::size_t begin, std::size_t end) {
                         for (auto i = static_cast<Eigen::Index>(begin);
                              i < static_cast<Eigen::Index>(end); ++i) {
                           for (Eigen::Index j = 0; j < b.rows(); ++j) {
                             out(i, j) = s2 * std::exp(scale * sq_dist(a, i, b, j));
                           }
                         }
                       });
  return out;
}

Matrix gram_reference(const KernelParams& p, const Matrix& a, const Matrix& b) {
  check_shapes(a, b);
  const double s2 = p.signal_variance();
  const double scale = -0.5 / (p.lengthscale() * p.lengthscale());
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      out(i, j) = s2 * std::exp(scale * sq_dist(a, i, b, j));
  return out;
}

JitteredGram gram_with_jitter(const KernelParams& p, const Matrix& a,
                              double min_relative_jitter) {
  JitteredGram out;
  out.k = gram(p, a, a);
  out.factor = cholesky_with_jitter(out.k, min_relative_jitter);
  out.k.diagonal().array() += out.factor.jitter;
  return out;
}

}  // namespace svtp
