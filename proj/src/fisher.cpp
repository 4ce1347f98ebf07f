#include "svtp/fisher.hpp"

#include <cmath>
#include <vector>

#include "svtp/errors.hpp"
#include "svtp/special.hpp"

namespace svtp::fisher {

namespace {

constexpr std::uint64_t kOracleStream = 0xf15;
constexpr std::size_t kMinOracleSamples = 10000;

void require_valid(double nu_tilde, int M) {
  if (!(nu_tilde > 2.0) || !std::isfinite(nu_tilde))
    throw DomainError("fisher: nu_tilde must be finite and exceed 2");
  if (M < 1) throw DomainError("fisher: M must be >= 1");
}

void require_sigma(const Vector& sigma, int M) {
  if (sigma.size() != M) throw ShapeError("fisher: sigma must have length M");
  if (!(sigma.array() > 0.0).all()) throw DomainError("fisher: sigma must be positive");
}

// B(a + da, c + dc) / B(a, c) evaluated in log space.
double beta_ratio(double a, double c, double da, double dc, double log_b0) {
  return std::exp(special::log_beta(a + da, c + dc) - log_b0);
}

BetaLinkConstants reconciled(double nu, int M) {
  const double dm = static_cast<double>(M);
  const double a = 0.5 * dm;
  const double c = 0.5 * nu;
  const double total = nu + dm;
  const double half_slope = total / (2.0 * (nu - 2.0));
  const double log_b0 = special::log_beta(a, c);

  // Moments of b ~ Beta(M/2, nu/2).
  const double e_b = beta_ratio(a, c, 1.0, 0.0, log_b0);
  const double e_b_1mb = beta_ratio(a, c, 1.0, 1.0, log_b0);
  const double e_b2 = beta_ratio(a, c, 2.0, 0.0, log_b0);
  const double var_b = a * c / ((a + c) * (a + c) * (a + c + 1.0));
  // log(1 - b) ~ log Beta(nu/2, M/2)
  const double e_log = special::digamma(c) - special::digamma(a + c);
  const double var_log = special::trigamma(c) - special::trigamma(a + c);
  const double cov_log_b = -e_b / (a + c);
  const double e_log_b = e_b * (e_log - 1.0 / (a + c));

  BetaLinkConstants k;
  k.alpha_nu = alpha_nu(nu, M);
  k.c_m = total * total / (dm * (nu - 2.0)) * e_b_1mb;
  k.c_s_diag_1 = total / dm * e_b;
  k.c_s_diag_2 = 3.0 * total * total / (dm * (dm + 2.0)) * e_b2;
  k.c_s_off_1 = k.c_s_diag_1;
  k.c_s_off_2 = total * total / (dm * (dm + 2.0)) * e_b2;

  // nu score = alpha + X, X = log(1 - b) / 2 + half_slope * b, E[X] = -alpha.
  const double var_x = 0.25 * var_log + half_slope * cov_log_b + half_slope * half_slope * var_b;
  k.c_nu_1 = -2.0 * k.alpha_nu;
  k.c_nu_2 = k.alpha_nu * k.alpha_nu + var_x;

  const double e_x_b = 0.5 * e_log_b + half_slope * e_b2;
  k.c_nus_1 = -k.alpha_nu;
  k.c_nus_2 = k.alpha_nu * total / dm * e_b;
  k.c_nus_3 = k.alpha_nu + total / dm * e_x_b;
  return k;
}

BetaLinkConstants paper_literal(double nu, int M) {
  const double dm = static_cast<double>(M);
  const double a = 0.5 * dm;
  const double c = 0.5 * nu;
  const double total = nu + dm;
  const double log_b0 = special::log_beta(a, c);
  const double beta_m = std::exp(special::log_beta(0.5 * (dm + 3.0), 0.5 * (nu + 1.0)) - log_b0);
  const double beta_1 = std::exp(special::log_beta(0.5 * (dm + 3.0), 0.5 * (nu - 1.0)) - log_b0);
  const double beta_2 = std::exp(special::log_beta(0.5 * (dm + 5.0), 0.5 * (nu - 1.0)) - log_b0);

  BetaLinkConstants k;
  k.alpha_nu = alpha_nu(nu, M);
  k.c_m = total * total * beta_m / (dm * (nu - 2.0));
  k.c_nu_1 = total / (nu - 2.0) * beta_1;
  k.c_nu_2 = total * total / (4.0 * (nu - 2.0) * (nu - 2.0)) * beta_2;
  k.c_s_diag_1 = total / (2.0 + dm) * beta_1;
  k.c_s_diag_2 = 5.0 * total * total / ((4.0 + dm) * (2.0 + dm)) * beta_2;
  k.c_s_off_1 = k.c_s_diag_1;
  k.c_s_off_2 = total * total / ((4.0 + dm) * (2.0 + dm)) * beta_2;
  k.c_nus_1 = -k.alpha_nu;
  k.c_nus_2 = (k.alpha_nu * total / (2.0 + dm) - total / (4.0 * (nu - 2.0))) * beta_1;
  k.c_nus_3 = total * total / (2.0 * (nu - 2.0) * (2.0 + dm)) * beta_2;
  return k;
}

struct BlockValues {
  double fm_coef;
  double fnu;
  double fs_diag_coef;
  double fs_off_coef;
  double fnus_coef;
};

BlockValues evaluate(const BetaLinkConstants& k) {
  BlockValues v;
  v.fm_coef = k.c_m;
  v.fnu = k.alpha_nu * k.alpha_nu + k.c_nu_1 * k.alpha_nu + k.c_nu_2;
  v.fs_diag_coef = 1.0 - 2.0 * k.c_s_diag_1 + k.c_s_diag_2;
  v.fs_off_coef = 1.0 - 2.0 * k.c_s_off_1 + k.c_s_off_2;
  v.fnus_coef = k.c_nus_1 + k.c_nus_2 + k.c_nus_3;
  return v;
}

Matrix fs_from(const BlockValues& v, const Vector& sigma) {
  const Vector inv = sigma.cwiseInverse();
  const Eigen::Index M = sigma.size();
  Matrix fs(M, M);
  for (Eigen::Index j = 0; j < M; ++j) {
    fs(j, j) = v.fs_diag_coef * (inv(j) * inv(j));
    for (Eigen::Index i = j + 1; i < M; ++i) fs(i, j) = fs(j, i) = v.fs_off_coef * (inv(i) * inv(j));
  }
  return fs;
}

bool try_damping(const FisherBlocks& b, double tau) {
  if (!((b.fm_diag.array() + tau) > 0.0).all()) return false;
  const Eigen::Index M = b.dim();
  Matrix lambda(M + 1, M + 1);
  lambda(0, 0) = b.f_nu;
  lambda.block(1, 0, M, 1) = b.f_nu_s;
  lambda.block(0, 1, 1, M) = b.f_nu_s.transpose();
  lambda.block(1, 1, M, M) = b.f_s;
  lambda.diagonal().array() += tau;
  Eigen::LLT<Matrix> llt(lambda);
  return llt.info() == Eigen::Success;
}

bool apply_damping(FisherBlocks& b, const DampingPolicy& policy) {
  const double trace = b.fm_diag.sum() + b.f_nu + b.f_s.trace();
  const double denom = static_cast<double>(2 * b.dim() + 1);
  double tau = policy.relative * std::max(std::abs(trace), 1e-300) / denom;
  for (int k = 0; k <= policy.max_doublings; ++k, tau *= 2.0) {
    if (std::isfinite(tau) && try_damping(b, tau)) {
      b.damping = tau;
      return true;
    }
  }
  return false;
}

}  // namespace

double alpha_nu(double nu_tilde, int M) {
  if (!(nu_tilde > 2.0)) throw DomainError("alpha_nu: nu_tilde must exceed 2");
  if (M < 0) throw DomainError("alpha_nu: M must be nonnegative");
  if (M == 0) return 0.0;
  const double dm = static_cast<double>(M);
  return -0.5 * special::digamma(0.5 * nu_tilde) + 0.5 * special::digamma(0.5 * (nu_tilde + dm)) -
         dm / (2.0 * (nu_tilde - 2.0));
}

BetaLinkConstants beta_link_constants(double nu_tilde, int M, Mode mode) {
  require_valid(nu_tilde, M);
  return mode == Mode::Reconciled ? reconciled(nu_tilde, M) : paper_literal(nu_tilde, M);
}

Vector fm_closed_form(double nu_tilde, int M, const Vector& sigma, Mode mode) {
  require_valid(nu_tilde, M);
  require_sigma(sigma, M);
  const auto v = evaluate(beta_link_constants(nu_tilde, M, mode));
  return v.fm_coef * sigma.cwiseAbs2().cwiseInverse();
}

double fnu_closed_form(double nu_tilde, int M, Mode mode) {
  return evaluate(beta_link_constants(nu_tilde, M, mode)).fnu;
}

Matrix fs_closed_form(double nu_tilde, int M, const Vector& sigma, Mode mode) {
  require_valid(nu_tilde, M);
  require_sigma(sigma, M);
  return fs_from(evaluate(beta_link_constants(nu_tilde, M, mode)), sigma);
}

Vector fnus_closed_form(double nu_tilde, int M, const Vector& sigma, Mode mode) {
  require_valid(nu_tilde, M);
  require_sigma(sigma, M);
  return evaluate(beta_link_constants(nu_tilde, M, mode)).fnus_coef * sigma.cwiseInverse();
}

const BetaLinkConstants& BetaLinkCache::get(double nu_tilde, int M, Mode mode) {
  if (!cached_ || M != M_ || mode != mode_ || std::abs(nu_tilde - nu_) > 1e-12) {
    cached_ = beta_link_constants(nu_tilde, M, mode);
    nu_ = nu_tilde;
    M_ = M;
    mode_ = mode;
    ++recomputations_;
  }
  return *cached_;
}

Matrix FisherBlocks::dense() const {
  const Eigen::Index M = dim();
  Matrix f = Matrix::Zero(2 * M + 1, 2 * M + 1);
  f.block(0, 0, M, M).diagonal() = fm_diag;
  f(M, M) = f_nu;
  f.block(M + 1, M, M, 1) = f_nu_s;
  f.block(M, M + 1, 1, M) = f_nu_s.transpose();
  f.block(M + 1, M + 1, M, M) = f_s;
  f.diagonal().array() += damping;
  return f;
}

FisherBlocks blocks_from_dense(const Matrix& f) {
  const Eigen::Index P = f.rows();
  if (P != f.cols() || P % 2 == 0) throw ShapeError("blocks_from_dense: expected (2M+1) square");
  const Eigen::Index M = (P - 1) / 2;
  FisherBlocks b;
  b.fm_diag = f.block(0, 0, M, M).diagonal();
  b.f_nu = f(M, M);
  b.f_nu_s = 0.5 * (f.block(M + 1, M, M, 1) + f.block(M, M + 1, 1, M).transpose());
  b.f_s = 0.5 * (f.block(M + 1, M + 1, M, M) + f.block(M + 1, M + 1, M, M).transpose());
  return b;
}

FisherBlocks assemble(double nu_tilde, int M, const Vector& sigma, const DampingPolicy& policy,
                      Mode mode, BetaLinkCache* cache) {
  require_valid(nu_tilde, M);
  require_sigma(sigma, M);
  const BetaLinkConstants k =
      cache ? cache->get(nu_tilde, M, mode) : beta_link_constants(nu_tilde, M, mode);
  const auto v = evaluate(k);
  FisherBlocks b;
  b.fm_diag = v.fm_coef * sigma.cwiseAbs2().cwiseInverse();
  b.f_nu = v.fnu;
  b.f_nu_s = v.fnus_coef * sigma.cwiseInverse();
  b.f_s = fs_from(v, sigma);
  if (apply_damping(b, policy)) return b;

  DiagStudentT q{nu_tilde, Vector::Zero(M), sigma};
  const auto mc = mc_fisher_oracle(q, policy.fallback_samples, policy.fallback_seed);
  FisherBlocks fallback = blocks_from_dense(mc.mean);
  fallback.used_mc_fallback = true;
  if (!apply_damping(fallback, policy))
    throw NumericalError("assemble: Monte-Carlo Fisher fallback is not positive definite");
  return fallback;
}

Vector natural_direction(const FisherBlocks& b, const Vector& grad) {
  const Eigen::Index M = b.dim();
  if (grad.size() != 2 * M + 1) throw ShapeError("natural_direction: gradient has wrong length");
  Vector d(2 * M + 1);
  d.head(M) = grad.head(M).array() / (b.fm_diag.array() + b.damping);

  Matrix lambda(M + 1, M + 1);
  lambda(0, 0) = b.f_nu;
  lambda.block(1, 0, M, 1) = b.f_nu_s;
  lambda.block(0, 1, 1, M) = b.f_nu_s.transpose();
  lambda.block(1, 1, M, M) = b.f_s;
  lambda.diagonal().array() += b.damping;
  Eigen::LLT<Matrix> llt(lambda);
  if (llt.info() != Eigen::Success)
    throw NumericalError("natural_direction: damped (nu, sigma) block is not positive definite");
  d.tail(M + 1) = llt.solve(grad.tail(M + 1));
  return d;
}

MonteCarloFisher mc_fisher_oracle(const DiagStudentT& q, std::size_t n_samples,
                                  std::uint64_t seed, parallel::Exec exec) {
  q.validate();
  if (n_samples < kMinOracleSamples)
    throw DomainError("mc_fisher_oracle: n_samples must be >= 10^4");
  const Eigen::Index M = q.dim();
  const Eigen::Index P = 2 * M + 1;
  const double nu = q.nu_tilde;
  const double alpha = alpha_nu(nu, static_cast<int>(M));
  const std::size_t chunk = parallel::kDefaultChunk;
  const std::size_t chunks = parallel::num_chunks(n_samples, chunk);

  // Per-chunk sums of s s^T and (s s^T)^2, reduced afterwards in chunk order.
  std::vector<Matrix> sum(chunks, Matrix::Zero(P, P));
  std::vector<Matrix> sum_sq(chunks, Matrix::Zero(P, P));

  parallel::for_chunks(n_samples, chunk, exec, [&](std::size_t c, std::size_t begin, std::size_t end) {
    auto rng = parallel::chunk_rng(seed, kOracleStream, c);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::gamma_distribution<double> chi2(0.5 * nu, 2.0);
    Vector xi(M), s(P);
    Matrix& acc = sum[c];
    Matrix& acc_sq = sum_sq[c];
    for (std::size_t n = begin; n < end; ++n) {
      const double inv_root_w = 1.0 / std::sqrt(chi2(rng));
      for (Eigen::Index i = 0; i < M; ++i) xi(i) = normal(rng) * inv_root_w;
      score_from_xi(nu, alpha, xi.data(), q.sigma, s.data());
      for (Eigen::Index j = 0; j < P; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          const double prod = s(i) * s(j);
          acc(i, j) += prod;
          acc_sq(i, j) += prod * prod;
        }
      }
    }
  });

  Matrix total = Matrix::Zero(P, P);
  Matrix total_sq = Matrix::Zero(P, P);
  for (std::size_t c = 0; c < chunks; ++c) {
    total += sum[c];
    total_sq += sum_sq[c];
  }
  const double n = static_cast<double>(n_samples);
  MonteCarloFisher out;
  out.n_samples = n_samples;
  out.mean = Matrix::Zero(P, P);
  out.stderr = Matrix::Zero(P, P);
  for (Eigen::Index j = 0; j < P; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double mean = total(i, j) / n;
      const double var = std::max(total_sq(i, j) / n - mean * mean, 0.0) * n / (n - 1.0);
      out.mean(i, j) = out.mean(j, i) = mean;
      out.stderr(i, j) = out.stderr(j, i) = std::sqrt(var / n);
    }
  }
  return out;
}

}  // namespace svtp::fisher
