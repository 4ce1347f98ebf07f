#include "svtp/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "svtp/errors.hpp"
#include "svtp/special.hpp"

namespace svtp {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void check_batch(const SVTPState& s, const Matrix& xb) {
  if (xb.rows() == 0) throw ShapeError("batch must be nonempty");
  if (xb.cols() != s.input_dim()) throw ShapeError("batch feature dimension differs from Z");
}

double log_normalizer(double nu, double dim) {
  return special::log_gamma(0.5 * (nu + dim)) - special::log_gamma(0.5 * nu) -
         0.5 * dim * std::log((nu - 2.0) * std::numbers::pi);
}

// K_XZ, A^T = K_ZZ^-1 K_ZX and the conditional marginal variances Sigma_ii.
struct CrossTerms {
  Matrix kxz;        // B x M
  Matrix at;         // M x B
  Vector sigma_diag; // B
};

CrossTerms cross_terms(const SVTPState& s, const JitteredGram& kzz, const Matrix& xb) {
  CrossTerms out;
  out.kxz = gram(s.kernel, xb, s.Z);
  out.at = kzz.factor.llt.solve(out.kxz.transpose());
  out.sigma_diag = (s.kernel.signal_variance() -
                    (out.at.array() * out.kxz.transpose().array()).colwise().sum().transpose())
                       .max(0.0)
                       .matrix();
  return out;
}

McEstimate mean_and_stderr(const Vector& v) {
  McEstimate est;
  const double n = static_cast<double>(v.size());
  est.value = v.mean();
  if (v.size() > 1) {
    const double var = (v.array() - est.value).square().sum() / (n - 1.0);
    est.stderr = std::sqrt(var / n);
  }
  return est;
}

}  // namespace

double SVTPState::noise_variance() const { return std::exp(2.0 * log_noise_sd); }

void SVTPState::validate() const {
  q.validate();
  if (q.dim() != Z.rows()) throw ShapeError("SVTPState: q dimension must equal rows of Z");
  if (!(prior_nu > 2.0)) throw DomainError("SVTPState: prior_nu must exceed 2");
  if (!std::isfinite(kernel.log_lengthscale) || !std::isfinite(kernel.log_signal_sd) ||
      !std::isfinite(log_noise_sd))
    throw DomainError("SVTPState: hyperparameters must be finite");
}

ConditionalParams conditional_given_u(const SVTPState& s, const Matrix& xb, const Vector& u) {
  s.validate();
  check_batch(s, xb);
  if (u.size() != s.num_inducing()) throw ShapeError("conditional_given_u: u has wrong length");
  if (!u.allFinite()) throw DomainError("conditional_given_u: u must be finite");
  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const Matrix kxz = gram(s.kernel, xb, s.Z);
  const Matrix at = kzz.factor.llt.solve(kxz.transpose());
  const Vector alpha = kzz.factor.llt.solve(u);
  const double M = static_cast<double>(s.num_inducing());

  ConditionalParams c;
  c.dof = s.prior_nu + M;
  c.mean = at.transpose() * u;
  c.beta = u.dot(alpha);
  c.scale_factor = (s.prior_nu + c.beta - 2.0) / (s.prior_nu + M - 2.0);
  c.base_cov = gram(s.kernel, xb, xb) - kxz * at;
  c.base_cov = 0.5 * (c.base_cov + c.base_cov.transpose()).eval();
  return c;
}

McEstimate expected_log_lik(const SVTPState& s, const Matrix& xb, const Vector& yb,
                            std::size_t n_mc, std::uint64_t seed) {
  s.validate();
  check_batch(s, xb);
  if (yb.size() != xb.rows()) throw ShapeError("expected_log_lik: y length differs from X rows");
  if (n_mc < 1) throw DomainError("expected_log_lik: n_mc must be >= 1");

  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const auto cross = cross_terms(s, kzz, xb);
  const auto samples = sample_diag(s.q, n_mc, seed);
  const Matrix ut = samples.u.transpose();
  const Matrix alpha = kzz.factor.llt.solve(ut);
  const Matrix mu = cross.at.transpose() * ut;
  const double M = static_cast<double>(s.num_inducing());
  const double B = static_cast<double>(xb.rows());
  const double noise_var = s.noise_variance();
  const double trace = cross.sigma_diag.sum();

  Vector ell(static_cast<Eigen::Index>(n_mc));
  for (Eigen::Index k = 0; k < ell.size(); ++k) {
    const double beta = ut.col(k).dot(alpha.col(k));
    const double c = (s.prior_nu + beta - 2.0) / (s.prior_nu + M - 2.0);
    const double sq = (yb - mu.col(k)).squaredNorm();
    ell(k) = -B * (kHalfLog2Pi + s.log_noise_sd) - (sq + c * trace) / (2.0 * noise_var);
  }
  return mean_and_stderr(ell);
}

McEstimate kl_q_p(const SVTPState& s, std::size_t n_mc, std::uint64_t seed) {
  s.validate();
  if (n_mc < 1) throw DomainError("kl_q_p: n_mc must be >= 1");
  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const DenseStudentT prior(s.prior_nu, Vector::Zero(s.num_inducing()), kzz.k);
  const auto samples = sample_diag(s.q, n_mc, seed);
  Vector diff(static_cast<Eigen::Index>(n_mc));
  for (Eigen::Index k = 0; k < diff.size(); ++k) {
    const Vector u = samples.u.row(k).transpose();
    diff(k) = log_density_diag(s.q, u) - log_density_dense(prior, u);
  }
  return mean_and_stderr(diff);
}

Vector ElboGradient::theta() const {
  Vector out(2 * m.size() + 1);
  out << m, nu_tilde, sigma;
  return out;
}

Vector ElboGradient::hyper() const {
  Vector out(Z.size() + 3);
  out.head(Z.size()) = Z.reshaped();
  out.tail(3) << log_lengthscale, log_signal_sd, log_noise_sd;
  return out;
}

ElboResult elbo_minibatch(const SVTPState& s, const Matrix& xb, const Vector& yb,
                          std::size_t n_total, std::size_t n_mc, std::uint64_t seed,
                          bool with_gradient) {
  s.validate();
  check_batch(s, xb);
  if (yb.size() != xb.rows()) throw ShapeError("elbo_minibatch: y length differs from X rows");
  if (n_mc < 1) throw DomainError("elbo_minibatch: n_mc must be >= 1");
  if (static_cast<std::size_t>(xb.rows()) > n_total)
    throw DomainError("elbo_minibatch: batch larger than N_total");

  const Eigen::Index M = s.num_inducing();
  const Eigen::Index S = static_cast<Eigen::Index>(n_mc);
  const double dM = static_cast<double>(M);
  const double B = static_cast<double>(xb.rows());
  const double N = static_cast<double>(n_total);
  const double nu = s.prior_nu;
  const double nut = s.q.nu_tilde;
  const double noise_var = s.noise_variance();

  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const auto cross = cross_terms(s, kzz, xb);
  const auto samples = sample_diag(s.q, n_mc, seed);
  const Matrix ut = samples.u.transpose();            // M x S
  const Matrix alpha = kzz.factor.llt.solve(ut);     // M x S
  const Matrix resid = (-(cross.at.transpose() * ut)).colwise() + yb;  // B x S
  const double trace = cross.sigma_diag.sum();

  const double log_norm_q = log_normalizer(nut, dM) - s.q.sigma.array().log().sum();
  const double log_norm_p = log_normalizer(nu, dM) - 0.5 * kzz.factor.log_det;

  Vector beta(S), c(S), ell(S), kl(S), per_sample(S);
  for (Eigen::Index k = 0; k < S; ++k) {
    beta(k) = ut.col(k).dot(alpha.col(k));
    c(k) = (nu + beta(k) - 2.0) / (nu + dM - 2.0);
    ell(k) = -B * (kHalfLog2Pi + s.log_noise_sd) -
             (resid.col(k).squaredNorm() + c(k) * trace) / (2.0 * noise_var);
    const double zz = samples.z.row(k).squaredNorm();
    const double log_q = log_norm_q - 0.5 * (nut + dM) * std::log1p(zz / samples.w(k));
    const double log_p = log_norm_p - 0.5 * (nu + dM) * std::log1p(beta(k) / (nu - 2.0));
    kl(k) = log_q - log_p;
    per_sample(k) = (N / B) * ell(k) - kl(k);
  }

  ElboResult out;
  const auto est = mean_and_stderr(per_sample);
  out.value = est.value;
  out.stderr = est.stderr;
  out.expected_log_lik = ell.mean();
  out.kl = kl.mean();
  if (!std::isfinite(out.value)) {
    std::ostringstream msg;
    msg << "elbo_minibatch: non-finite value (expected_log_lik = " << out.expected_log_lik
        << ", kl = " << out.kl << ")";
    throw NumericalError(msg.str());
  }
  if (!with_gradient) return out;

  const double rho = N / (B * static_cast<double>(S));
  const double inv_s = 1.0 / static_cast<double>(S);
  const double c_sum = c.sum();

  // dV/du for each sample through the likelihood and the prior (M x S).
  const Matrix proj = cross.at * resid;  // A^T r_s
  Matrix grad_u = (rho / noise_var) * proj - (rho * trace / (noise_var * (nu + dM - 2.0))) * alpha;
  for (Eigen::Index k = 0; k < S; ++k)
    grad_u.col(k) -= inv_s * (nu + dM) / (nu - 2.0 + beta(k)) * alpha.col(k);

  ElboGradient& g = out.grad;
  g.m = grad_u.rowwise().sum();
  g.sigma = s.q.sigma.cwiseInverse();
  g.nu_tilde = 0.0;
  const double alpha_q = -0.5 * special::digamma(0.5 * nut) +
                         0.5 * special::digamma(0.5 * (nut + dM)) - 0.5 * dM / (nut - 2.0);
  for (Eigen::Index k = 0; k < S; ++k) {
    const double radius = std::sqrt((nut - 2.0) / samples.w(k));
    const Vector dz = samples.z.row(k).transpose() * radius;  // du/dsigma
    g.sigma.array() += grad_u.col(k).array() * dz.array();
    g.nu_tilde += grad_u.col(k).dot((s.q.sigma.array() * dz.array()).matrix()) / (2.0 * (nut - 2.0));
    const double zz = samples.z.row(k).squaredNorm();
    g.nu_tilde -= inv_s * (alpha_q - 0.5 * std::log1p(zz / samples.w(k)));
  }

  // dV/dK_XZ (B x M) and dV/dK_ZZ (M x M), treating both as unconstrained matrices.
  const Matrix a = cross.at.transpose();
  const Matrix g_xz = (rho / noise_var) * (resid * alpha.transpose()) + (rho * c_sum / noise_var) * a;
  Matrix weighted_alpha = alpha;
  for (Eigen::Index k = 0; k < S; ++k)
    weighted_alpha.col(k) *= inv_s * (nu + dM) / (2.0 * (nu - 2.0 + beta(k)));
  const Matrix kinv = kzz.factor.llt.solve(Matrix::Identity(M, M));
  const Matrix g_zz = -(rho / noise_var) * (proj * alpha.transpose()) +
                      (rho * trace / (2.0 * noise_var * (nu + dM - 2.0))) * (alpha * alpha.transpose()) -
                      (rho * c_sum / (2.0 * noise_var)) * (cross.at * a) - 0.5 * kinv +
                      weighted_alpha * alpha.transpose();

  // The jitter is relative to the signal variance, so all of K_ZZ scales with s^2;
  // the lengthscale and Z derivatives only involve off-diagonal entries.
  const Matrix& kzz_k = kzz.k;
  const double ell2 = s.kernel.lengthscale() * s.kernel.lengthscale();
  const double s2 = s.kernel.signal_variance();

  g.log_signal_sd = 2.0 * (g_xz.array() * cross.kxz.array()).sum() +
                    2.0 * (g_zz.array() * kzz.k.array()).sum() -
                    rho * c_sum * B * s2 / noise_var;
  g.log_lengthscale = 0.0;
  g.Z = Matrix::Zero(M, s.input_dim());
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    for (Eigen::Index k = 0; k < M; ++k) {
      const Eigen::RowVectorXd diff = xb.row(i) - s.Z.row(k);
      const double w = g_xz(i, k) * cross.kxz(i, k);
      g.log_lengthscale += w * diff.squaredNorm() / ell2;
      g.Z.row(k) += (w / ell2) * diff;
    }
  }
  for (Eigen::Index j = 0; j < M; ++j) {
    for (Eigen::Index k = 0; k < M; ++k) {
      if (j == k) continue;
      const Eigen::RowVectorXd diff = s.Z.row(k) - s.Z.row(j);
      const double w = g_zz(j, k) * kzz_k(j, k);
      g.log_lengthscale += w * diff.squaredNorm() / ell2;
      g.Z.row(j) += ((g_zz(j, k) + g_zz(k, j)) * kzz_k(j, k) / ell2) * diff;
    }
  }

  g.log_noise_sd = 0.0;
  for (Eigen::Index k = 0; k < S; ++k)
    g.log_noise_sd += rho * (-B + (resid.col(k).squaredNorm() + c(k) * trace) / noise_var);
  return out;
}

Prediction predict(const SVTPState& s, const Matrix& xstar, std::size_t n_mc,
                   std::uint64_t seed) {
  s.validate();
  check_batch(s, xstar);
  if (n_mc < 1) throw DomainError("predict: n_mc must be >= 1");
  const auto kzz = gram_with_jitter(s.kernel, s.Z, s.kzz_min_jitter);
  const auto cross = cross_terms(s, kzz, xstar);
  const auto samples = sample_diag(s.q, n_mc, seed);
  const Matrix ut = samples.u.transpose();
  const Matrix alpha = kzz.factor.llt.solve(ut);
  const Matrix mu = cross.at.transpose() * ut;  // n* x S
  const double M = static_cast<double>(s.num_inducing());
  const double S = static_cast<double>(n_mc);

  double mean_scale = 0.0;
  for (Eigen::Index k = 0; k < ut.cols(); ++k)
    mean_scale += (s.prior_nu + ut.col(k).dot(alpha.col(k)) - 2.0) / (s.prior_nu + M - 2.0);
  mean_scale /= S;

  Prediction out;
  out.mean = mu.rowwise().mean();
  const Vector spread = (mu.colwise() - out.mean).array().square().rowwise().sum() / S;
  out.variance = spread + mean_scale * cross.sigma_diag +
                 Vector::Constant(xstar.rows(), s.noise_variance());
  return out;
}

Vector pack_theta(const DiagStudentT& q) {
  Vector out(2 * q.dim() + 1);
  out << q.m, q.nu_tilde, q.sigma;
  return out;
}

void unpack_theta(const Vector& theta, DiagStudentT& q) {
  const Eigen::Index M = q.dim();
  if (theta.size() != 2 * M + 1) throw ShapeError("unpack_theta: wrong length");
  q.m = theta.head(M);
  q.nu_tilde = theta(M);
  q.sigma = theta.tail(M);
}

Vector pack_hyper(const SVTPState& s) {
  Vector out(s.Z.size() + 3);
  out.head(s.Z.size()) = s.Z.reshaped();
  out.tail(3) << s.kernel.log_lengthscale, s.kernel.log_signal_sd, s.log_noise_sd;
  return out;
}

void unpack_hyper(const Vector& hyper, SVTPState& s) {
  if (hyper.size() != s.Z.size() + 3) throw ShapeError("unpack_hyper: wrong length");
  s.Z = hyper.head(s.Z.size()).reshaped(s.Z.rows(), s.Z.cols());
  s.kernel.log_lengthscale = hyper(s.Z.size());
  s.kernel.log_signal_sd = hyper(s.Z.size() + 1);
  s.log_noise_sd = hyper(s.Z.size() + 2);
}

}  // namespace svtp
