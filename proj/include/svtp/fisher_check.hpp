#pragma once

// Entry-by-entry comparison of closed-form Fisher blocks with the Monte-Carlo
// Fisher over a grid of (M, nu, sigma) states.

#include <cstdint>
#include <string>
#include <vector>

#include "svtp/fisher.hpp"

namespace svtp::fisher {

enum class EntryKind {
  Shipped,  // closed-form value compared against the oracle
  Zero,     // entry that vanishes structurally; oracle compared against 0
};

struct EntryCheck {
  std::string block;  // "m", "nu", "S", "nuS", "m_offdiag", "m_nu", "m_S"
  int i = 0;
  int j = 0;
  EntryKind kind = EntryKind::Shipped;
  double closed_form = 0.0;
  double oracle = 0.0;
  double stderr = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct PointCheck {
  int M = 0;
  double nu_tilde = 0.0;
  Vector sigma;
  bool reference_point = false;  // the (M=1, nu=4, sigma=1) discrepancy probe
  std::vector<EntryCheck> entries;

  std::size_t failures(EntryKind kind) const;
};

struct GridSpec {
  std::vector<int> Ms{1, 2, 5};
  std::vector<double> nus{3.0, 5.0, 10.0, 100.0};
  int sigmas_per_point = 3;
  double sigma_lo = 0.1;
  double sigma_hi = 10.0;
  std::size_t n_samples = 1000000;
  std::uint64_t seed = 20240905;
  Mode mode = Mode::Reconciled;
  double relative_tolerance = 0.02;
  double stderr_multiple = 4.0;
  bool include_reference_point = true;
};

struct GridReport {
  GridSpec spec;
  std::vector<PointCheck> points;
  double seconds = 0.0;

  std::size_t failures(EntryKind kind) const;
  std::size_t entries(EntryKind kind) const;
};

/// Closed form vs oracle for one state. Shipped entries pass when
/// |closed - oracle| <= max(k * stderr, rel * |oracle|); zero entries pass when
/// |oracle| <= k * stderr.
PointCheck check_point(const DiagStudentT& q, const GridSpec& spec, std::uint64_t seed,
                       parallel::Exec exec = parallel::Exec::Parallel);

GridReport verify_grid(const GridSpec& spec, parallel::Exec exec = parallel::Exec::Parallel);

std::string to_string(EntryKind kind);

}  // namespace svtp::fisher
