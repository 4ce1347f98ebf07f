#include "svtp/fisher_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace svtp::fisher {

namespace {

constexpr std::uint64_t kSigmaStream = 0x51a;

EntryCheck shipped(std::string block, int i, int j, double closed, double oracle, double se,
                   const GridSpec& spec) {
  EntryCheck e;
  e.block = std::move(block);
  e.i = i;
  e.j = j;
  e.kind = EntryKind::Shipped;
  e.closed_form = closed;
  e.oracle = oracle;
  e.stderr = se;
  e.tolerance = std::max(spec.stderr_multiple * se, spec.relative_tolerance * std::abs(oracle));
  e.pass = std::abs(closed - oracle) <= e.tolerance;
  return e;
}

EntryCheck zero(std::string block, int i, int j, double oracle, double se, const GridSpec& spec) {
  EntryCheck e;
  e.block = std::move(block);
  e.i = i;
  e.j = j;
  e.kind = EntryKind::Zero;
  e.oracle = oracle;
  e.stderr = se;
  e.tolerance = spec.stderr_multiple * se;
  e.pass = std::abs(oracle) <= e.tolerance;
  return e;
}

}  // namespace

std::string to_string(EntryKind kind) { return kind == EntryKind::Shipped ? "shipped" : "zero"; }

std::size_t PointCheck::failures(EntryKind kind) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const auto& e) {
    return e.kind == kind && !e.pass;
  }));
}

std::size_t GridReport::failures(EntryKind kind) const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.failures(kind);
  return n;
}

std::size_t GridReport::entries(EntryKind kind) const {
  std::size_t n = 0;
  for (const auto& p : points)
    n += static_cast<std::size_t>(std::count_if(p.entries.begin(), p.entries.end(),
                                                [&](const auto& e) { return e.kind == kind; }));
  return n;
}

PointCheck check_point(const DiagStudentT& q, const GridSpec& spec, std::uint64_t seed,
                       parallel::Exec exec) {
  q.validate();
  const int M = static_cast<int>(q.dim());
  const auto mc = mc_fisher_oracle(q, spec.n_samples, seed, exec);
  const Vector fm = fm_closed_form(q.nu_tilde, M, q.sigma, spec.mode);
  const double fnu = fnu_closed_form(q.nu_tilde, M, spec.mode);
  const Matrix fs = fs_closed_form(q.nu_tilde, M, q.sigma, spec.mode);
  const Vector fnus = fnus_closed_form(q.nu_tilde, M, q.sigma, spec.mode);

  PointCheck p;
  p.M = M;
  p.nu_tilde = q.nu_tilde;
  p.sigma = q.sigma;
  const int inu = M;
  auto is = [M](int i) { return M + 1 + i; };

  for (int i = 0; i < M; ++i) p.entries.push_back(shipped("m", i, i, fm(i), mc.mean(i, i), mc.stderr(i, i), spec));
  p.entries.push_back(shipped("nu", 0, 0, fnu, mc.mean(inu, inu), mc.stderr(inu, inu), spec));
  for (int i = 0; i < M; ++i)
    for (int j = i; j < M; ++j)
      p.entries.push_back(
          shipped("S", i, j, fs(i, j), mc.mean(is(i), is(j)), mc.stderr(is(i), is(j)), spec));
  for (int i = 0; i < M; ++i)
    p.entries.push_back(shipped("nuS", i, 0, fnus(i), mc.mean(inu, is(i)), mc.stderr(inu, is(i)), spec));

  for (int i = 0; i < M; ++i)
    for (int j = i + 1; j < M; ++j)
      p.entries.push_back(zero("m_offdiag", i, j, mc.mean(i, j), mc.stderr(i, j), spec));
  for (int i = 0; i < M; ++i)
    p.entries.push_back(zero("m_nu", i, 0, mc.mean(i, inu), mc.stderr(i, inu), spec));
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      p.entries.push_back(zero("m_S", i, j, mc.mean(i, is(j)), mc.stderr(i, is(j)), spec));
  return p;
}

GridReport verify_grid(const GridSpec& spec, parallel::Exec exec) {
  const auto start = std::chrono::steady_clock::now();
  GridReport report;
  report.spec = spec;
  std::uint64_t point_index = 0;
  for (int M : spec.Ms) {
    for (double nu : spec.nus) {
      for (int k = 0; k < spec.sigmas_per_point; ++k, ++point_index) {
        auto rng = parallel::chunk_rng(spec.seed, kSigmaStream, point_index);
        std::uniform_real_distribution<double> unif(spec.sigma_lo, spec.sigma_hi);
        DiagStudentT q;
        q.nu_tilde = nu;
        q.m = Vector::Zero(M);
        q.sigma.resize(M);
        for (int i = 0; i < M; ++i) q.sigma(i) = unif(rng);
        report.points.push_back(check_point(q, spec, spec.seed + point_index, exec));
      }
    }
  }
  if (spec.include_reference_point) {
    DiagStudentT q;
    q.nu_tilde = 4.0;
    q.m = Vector::Zero(1);
    q.sigma = Vector::Ones(1);
    auto p = check_point(q, spec, spec.seed + point_index, exec);
    p.reference_point = true;
    report.points.push_back(std::move(p));
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace svtp::fisher
