#include "svtp/stdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "svtp/errors.hpp"
#include "svtp/special.hpp"

namespace svtp {

namespace {

constexpr std::uint64_t kSampleStream = 0x5d1a6;

double log_normalizer(double nu, Eigen::Index dim) {
  const double n = static_cast<double>(dim);
  return special::log_gamma(0.5 * (nu + n)) - special::log_gamma(0.5 * nu) -
         0.5 * n * std::log((nu - 2.0) * std::numbers::pi);
}

}  // namespace

JitteredCholesky cholesky_with_jitter(const Matrix& a, double min_relative_jitter) {
  if (a.rows() != a.cols()) throw ShapeError("cholesky_with_jitter: matrix must be square");
  const double scale = a.rows() > 0 ? a.diagonal().mean() : 1.0;
  std::vector<double> ladder{std::max(min_relative_jitter, 0.0)};
  double rung = kJitterBase;
  for (int k = 0; k <= kJitterGrowthSteps; ++k, rung *= 10.0) {
    if (rung > ladder.front()) ladder.push_back(rung);
  }

  JitteredCholesky out;
  for (double rel : ladder) {
    out.jitter = rel * scale;
    Matrix shifted = a;
    shifted.diagonal().array() += out.jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.log_det = 2.0 * out.llt.matrixLLT().diagonal().array().log().sum();
      if (std::isfinite(out.log_det)) return out;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky failed after jitter ladder; last jitter tried = " << out.jitter;
  throw NumericalError(msg.str());
}

DenseStudentT::DenseStudentT(double nu, Vector mean, Matrix cov)
    : nu_(nu), mean_(std::move(mean)), cov_(std::move(cov)) {
  if (!(nu_ > 2.0)) throw DomainError("DenseStudentT: nu must exceed 2");
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
    throw ShapeError("DenseStudentT: covariance shape does not match mean");
  if (!cov_.isApprox(cov_.transpose(), 1e-12))
    throw DomainError("DenseStudentT: covariance must be symmetric");
  factor_ = cholesky_with_jitter(cov_);
}

void DiagStudentT::validate() const {
  if (!(nu_tilde > 2.0)) throw DomainError("DiagStudentT: nu_tilde must exceed 2");
  if (m.size() != sigma.size()) throw ShapeError("DiagStudentT: m and sigma differ in length");
  if (!(sigma.array() > 0.0).all()) throw DomainError("DiagStudentT: sigma must be positive");
}

double log_density_dense(const DenseStudentT& d, const Vector& y) {
  if (y.size() != d.dim()) throw ShapeError("log_density_dense: dimension mismatch");
  const Vector r = y - d.mean();
  const Vector half = d.factor().llt.matrixL().solve(r);
  const double quad = half.squaredNorm();
  const double nu = d.nu();
  const double n = static_cast<double>(d.dim());
  return log_normalizer(nu, d.dim()) - 0.5 * d.factor().log_det -
         0.5 * (nu + n) * std::log1p(quad / (nu - 2.0));
}

double log_density_diag(const DiagStudentT& q, const Vector& u) {
  if (u.size() != q.dim()) throw ShapeError("log_density_diag: dimension mismatch");
  const double nu = q.nu_tilde;
  const double n = static_cast<double>(q.dim());
  const double delta = ((u - q.m).array() / q.sigma.array()).square().sum();
  return log_normalizer(nu, q.dim()) - q.sigma.array().log().sum() -
         0.5 * (nu + n) * std::log1p(delta / (nu - 2.0));
}

TSampleBatch sample_diag(const DiagStudentT& q, std::size_t n_samples, std::uint64_t seed,
                         parallel::Exec exec) {
  q.validate();
  if (n_samples < 1) throw DomainError("sample_diag: n_samples must be >= 1");
  const Eigen::Index M = q.dim();
  TSampleBatch batch;
  batch.seed = seed;
  batch.u.resize(static_cast<Eigen::Index>(n_samples), M);
  batch.z.resize(static_cast<Eigen::Index>(n_samples), M);
  batch.w.resize(static_cast<Eigen::Index>(n_samples));
  const double nu = q.nu_tilde;
  parallel::for_chunks(n_samples, parallel::kDefaultChunk, exec,
                       [&](std::size_t chunk, std::size_t begin, std::size_t end) {
                         auto rng = parallel::chunk_rng(seed, kSampleStream, chunk);
                         std::normal_distribution<double> normal(0.0, 1.0);
                         std::gamma_distribution<double> chi2(0.5 * nu, 2.0);
                         for (std::size_t s = begin; s < end; ++s) {
                           const auto row = static_cast<Eigen::Index>(s);
                           const double w = chi2(rng);
                           batch.w(row) = w;
                           const double radius = std::sqrt((nu - 2.0) / w);
                           for (Eigen::Index i = 0; i < M; ++i) {
                             const double z = normal(rng);
                             batch.z(row, i) = z;
                             batch.u(row, i) = q.m(i) + q.sigma(i) * z * radius;
                           }
                         }
                       });
  return batch;
}

void score_from_xi(double nu_tilde, double alpha, const double* xi, const Vector& sigma,
                   double* out) {
  const Eigen::Index M = sigma.size();
  const double total = nu_tilde + static_cast<double>(M);
  double quad = 0.0;
  for (Eigen::Index i = 0; i < M; ++i) quad += xi[i] * xi[i];
  const double inv_one_plus = 1.0 / (1.0 + quad);
  const double m_scale = total / std::sqrt(nu_tilde - 2.0) * inv_one_plus;
  for (Eigen::Index i = 0; i < M; ++i) {
    out[i] = m_scale * xi[i] / sigma(i);
    out[M + 1 + i] = (total * xi[i] * xi[i] * inv_one_plus - 1.0) / sigma(i);
  }
  out[M] = alpha - 0.5 * std::log1p(quad) +
           0.5 * total / (nu_tilde - 2.0) * quad * inv_one_plus;
}

Vector score(const DiagStudentT& q, const Vector& u) {
  if (u.size() != q.dim()) throw ShapeError("score: dimension mismatch");
  const Eigen::Index M = q.dim();
  const double nu = q.nu_tilde;
  const double alpha = -0.5 * special::digamma(0.5 * nu) +
                       0.5 * special::digamma(0.5 * (nu + static_cast<double>(M))) -
                       0.5 * static_cast<double>(M) / (nu - 2.0);
  const Vector xi = ((u - q.m).array() / (std::sqrt(nu - 2.0) * q.sigma.array())).matrix();
  Vector out(2 * M + 1);
  score_from_xi(nu, alpha, xi.data(), q.sigma, out.data());
  return out;
}

}  // namespace svtp
