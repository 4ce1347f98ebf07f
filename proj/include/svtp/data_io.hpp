#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svtp/stdist.hpp"

namespace svtp {

struct Standardization {
  Vector x_mean;
  Vector x_sd;
  double y_mean = 0.0;
  double y_sd = 1.0;
};

struct Dataset {
  Matrix X;  // N x D
  Vector y;  // N
  std::vector<std::string> feature_names;
  Standardization standardization;  // identity until split_standardize
  std::vector<std::string> warnings;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

/// Reads a comma-separated numeric table. target_column is a header name or a
/// zero-based column index; empty selects the last column. Rows with non-numeric
/// or missing cells are dropped and reported in Dataset::warnings.
Dataset load_csv(const std::string& path, const std::string& target_column, bool has_header);

/// Feature matrix for prediction. With a header the named columns are selected
/// (other columns are ignored); without one the file must hold exactly those columns.
Matrix load_features(const std::string& path, const std::vector<std::string>& feature_names,
                     bool has_header, std::vector<std::string>* warnings = nullptr);

/// Shuffled split; every feature and the target are standardized with
/// statistics from the training rows only. Zero-variance training columns are
/// dropped from both splits.
std::pair<Dataset, Dataset> split_standardize(const Dataset& d, double train_frac,
                                              std::uint64_t seed);

Matrix standardize_x(const Matrix& x, const Standardization& st);
Vector standardize_y(const Vector& y, const Standardization& st);
Vector unstandardize_y(const Vector& y, const Standardization& st);

/// X ~ U[-2, 2]^D, y = sin(3 x_1) + 0.5 x_2 + noise_scale * t_{noise_df}.
Dataset synthetic_t_regression(std::size_t n, std::size_t d, double noise_df, double noise_scale,
                               std::uint64_t seed);

/// B distinct indices drawn uniformly from [0, N), sorted, as a function of (seed, t).
/// If B > N every index is returned and *warning (when given) is set.
std::vector<Eigen::Index> minibatch_indices(std::size_t n, std::size_t b, std::uint64_t seed,
                                            std::uint64_t t, std::string* warning = nullptr);

/// Rows of X and y selected by the given indices.
std::pair<Matrix, Vector> gather_rows(const Dataset& d, const std::vector<Eigen::Index>& idx);

}  // namespace svtp
