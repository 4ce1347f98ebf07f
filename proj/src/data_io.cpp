#include "svtp/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "svtp/errors.hpp"
#include "svtp/parallel.hpp"

namespace svtp {

namespace {

constexpr std::uint64_t kSplitStream = 0x5e11;
constexpr std::uint64_t kBatchStream = 0xba7c;
constexpr std::uint64_t kSyntheticStream = 0x5717;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(',');
    cells.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_row(const std::vector<std::string>& cells, std::vector<double>& values) {
  values.resize(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!parse_double(cells[i], values[i])) return false;
  return true;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> warnings;
  std::size_t width = 0;
};

Table read_table(const std::string& path, bool has_header, const char* who) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string(who) + ": cannot open '" + path + "'");

  Table t;
  std::string line;
  std::size_t row = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (t.width == 0) {
      t.width = cells.size();
      if (has_header) {
        t.header = std::move(cells);
        continue;
      }
      if (!parse_row(cells, values)) {
        throw InputError(std::string(who) + ": row 1 is not numeric; the file appears to have a header (" +
                         path + ")");
      }
    }
    if (cells.size() != t.width || !parse_row(cells, values)) {
      t.warnings.push_back("row " + std::to_string(row) + ": malformed, skipped");
      continue;
    }
    t.rows.push_back(values);
  }
  if (t.width == 0) throw InputError(std::string(who) + ": '" + path + "' is empty");
  return t;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column, bool has_header) {
  Table table = read_table(path, has_header, "load_csv");
  const std::size_t width = table.width;
  const auto& header = table.header;
  auto& rows = table.rows;

  std::size_t target = width;
  if (target_column.empty()) target = width - 1;
  if (has_header && target == width) {
    const auto it = std::find(header.begin(), header.end(), target_column);
    if (it != header.end()) target = static_cast<std::size_t>(it - header.begin());
  }
  if (target == width) {
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(target_column.data(),
                                           target_column.data() + target_column.size(), idx);
    if (ec != std::errc() || ptr != target_column.data() + target_column.size() || idx >= width)
      throw InputError("load_csv: target column '" + target_column + "' not found");
    target = idx;
  }
  if (rows.empty()) throw InputError("load_csv: no usable rows in '" + path + "'");

  Dataset d;
  d.warnings = std::move(table.warnings);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto dim = static_cast<Eigen::Index>(width - 1);
  d.X.resize(n, dim);
  d.y.resize(n);
  for (std::size_t c = 0; c < width; ++c) {
    if (c == target) continue;
    d.feature_names.push_back(has_header ? header[c] : "x" + std::to_string(c));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == target) d.y(i) = rows[static_cast<std::size_t>(i)][c];
      else d.X(i, col++) = rows[static_cast<std::size_t>(i)][c];
    }
  }
  d.standardization.x_mean = Vector::Zero(dim);
  d.standardization.x_sd = Vector::Ones(dim);
  return d;
}

Matrix load_features(const std::string& path, const std::vector<std::string>& feature_names,
                     bool has_header, std::vector<std::string>* warnings) {
  const Table table = read_table(path, has_header, "load_features");
  std::vector<std::size_t> cols;
  if (has_header) {
    for (const auto& name : feature_names) {
      const auto it = std::find(table.header.begin(), table.header.end(), name);
      if (it == table.header.end()) throw InputError("load_features: column '" + name + "' not found");
      cols.push_back(static_cast<std::size_t>(it - table.header.begin()));
    }
  } else {
    if (table.width != feature_names.size())
      throw InputError("load_features: expected " + std::to_string(feature_names.size()) +
                       " columns, found " + std::to_string(table.width));
    cols.resize(table.width);
    std::iota(cols.begin(), cols.end(), std::size_t{0});
  }
  if (table.rows.empty()) throw InputError("load_features: no usable rows in '" + path + "'");
  Matrix x(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t c = 0; c < cols.size(); ++c)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table.rows[i][cols[c]];
  if (warnings) *warnings = table.warnings;
  return x;
}

Matrix standardize_x(const Matrix& x, const Standardization& st) {
  return ((x.rowwise() - st.x_mean.transpose()).array().rowwise() / st.x_sd.transpose().array())
      .matrix();
}

Vector standardize_y(const Vector& y, const Standardization& st) {
  return ((y.array() - st.y_mean) / st.y_sd).matrix();
}

Vector unstandardize_y(const Vector& y, const Standardization& st) {
  return (y.array() * st.y_sd + st.y_mean).matrix();
}

std::pair<Dataset, Dataset> split_standardize(const Dataset& d, double train_frac,
                                              std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw DomainError("split_standardize: train_frac must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(d.size());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto rng = parallel::chunk_rng(seed, kSplitStream, 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n))), 1,
      n > 1 ? n - 1 : 1);

  std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<Eigen::Index> test_idx(order.begin() + static_cast<long>(n_train), order.end());
  auto [x_train, y_train] = gather_rows(d, train_idx);
  auto [x_test, y_test] = gather_rows(d, test_idx);

  std::vector<std::string> warnings = d.warnings;
  const Vector mean = x_train.colwise().mean();
  const Vector sd = ((x_train.rowwise() - mean.transpose()).array().square().colwise().sum() /
                     static_cast<double>(n_train))
                        .sqrt()
                        .matrix()
                        .transpose();
  std::vector<Eigen::Index> keep;
  std::vector<std::string> names;
  for (Eigen::Index c = 0; c < d.dim(); ++c) {
    const std::string& name =
        c < static_cast<Eigen::Index>(d.feature_names.size()) ? d.feature_names[static_cast<std::size_t>(c)] : std::to_string(c);
    if (sd(c) > 1e-12 * std::max(1.0, std::abs(mean(c)))) {
      keep.push_back(c);
      names.push_back(name);
    } else {
      warnings.push_back("column '" + name + "' has zero variance on the training split, dropped");
    }
  }

  Standardization st;
  st.x_mean = mean(keep);
  st.x_sd = sd(keep);
  st.y_mean = y_train.mean();
  st.y_sd = std::sqrt((y_train.array() - st.y_mean).square().sum() / static_cast<double>(n_train));
  if (!(st.y_sd > 0.0)) {
    warnings.push_back("target has zero variance on the training split; not scaled");
    st.y_sd = 1.0;
  }

  auto build = [&](const Matrix& x, const Vector& y) {
    Dataset out;
    out.X = standardize_x(x(Eigen::all, keep), st);
    out.y = standardize_y(y, st);
    out.feature_names = names;
    out.standardization = st;
    out.warnings = warnings;
    return out;
  };
  return {build(x_train, y_train), build(x_test, y_test)};
}

Dataset synthetic_t_regression(std::size_t n, std::size_t d, double noise_df, double noise_scale,
                               std::uint64_t seed) {
  if (!(noise_df > 2.0)) throw DomainError("synthetic_t_regression: noise_df must exceed 2");
  if (n == 0 || d == 0) throw DomainError("synthetic_t_regression: N and D must be positive");
  auto rng = parallel::chunk_rng(seed, kSyntheticStream, 0);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::student_t_distribution<double> noise(noise_df);
  Dataset out;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(d);
  out.X.resize(rows, cols);
  out.y.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) out.X(i, c) = unif(rng);
    double f = std::sin(3.0 * out.X(i, 0));
    if (cols > 1) f += 0.5 * out.X(i, 1);
    const double e = noise(rng);
    out.y(i) = noise_scale == 0.0 ? f : f + noise_scale * e;
  }
  for (std::size_t c = 0; c < d; ++c) out.feature_names.push_back("x" + std::to_string(c));
  out.standardization.x_mean = Vector::Zero(cols);
  out.standardization.x_sd = Vector::Ones(cols);
  return out;
}

std::vector<Eigen::Index> minibatch_indices(std::size_t n, std::size_t b, std::uint64_t seed,
                                            std::uint64_t t, std::string* warning) {
  if (n == 0) throw DomainError("minibatch_indices: N must be positive");
  if (b == 0) throw DomainError("minibatch_indices: B must be positive");
  std::vector<Eigen::Index> out;
  if (b >= n) {
    if (b > n && warning) *warning = "batch size exceeds N; using the full set";
    out.resize(n);
    std::iota(out.begin(), out.end(), Eigen::Index{0});
    return out;
  }
  // Floyd's algorithm: O(B) draws, uniform over B-subsets.
  auto rng = parallel::chunk_rng(seed, kBatchStream, t);
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(2 * b);
  out.reserve(b);
  for (std::size_t j = n - b; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t candidate = pick(rng);
    const std::size_t value = chosen.insert(candidate).second ? candidate : j;
    if (value == j) chosen.insert(j);
    out.push_back(static_cast<Eigen::Index>(value));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<Matrix, Vector> gather_rows(const Dataset& d, const std::vector<Eigen::Index>& idx) {
  return {d.X(idx, Eigen::all), d.y(idx)};
}

}  // namespace svtp
