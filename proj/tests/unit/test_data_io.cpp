#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "support.hpp"
#include "svtp/data_io.hpp"
#include "svtp/errors.hpp"

namespace {

using namespace svtp;
using svtp::testing::TempDir;

std::string write(const TempDir& dir, const std::string& name, const std::string& body) {
  const std::string path = dir / name;
  std::ofstream(path) << body;
  return path;
}

TEST(LoadCsv, ExtractsColumnsFromSmallFixture) {
  TempDir dir("csv");
  const auto path = write(dir, "a.csv", "x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset d = load_csv(path, "y", true);
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.dim(), 2);
  EXPECT_EQ(d.y(1), 6.0);
  EXPECT_EQ(d.X(2, 0), 7.0);
  EXPECT_EQ(d.X(0, 1), 2.0);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_TRUE(d.warnings.empty());
}

TEST(LoadCsv, TargetByIndexAndDefault) {
  TempDir dir("csv");
  const auto path = write(dir, "a.csv", "1,2,3\n4,5,6\n");
  const Dataset first = load_csv(path, "0", false);
  EXPECT_EQ(first.y(1), 4.0);
  EXPECT_EQ(first.X(1, 0), 5.0);
  const Dataset last = load_csv(path, "", false);
  EXPECT_EQ(last.y(0), 3.0);
}

TEST(LoadCsv, MalformedRowIsSkippedAndReported) {
  TempDir dir("csv");
  const auto path = write(dir, "a.csv", "a,b\n1,2\n3,oops\n5,6\n");
  const Dataset d = load_csv(path, "b", true);
  EXPECT_EQ(d.size(), 2);
  ASSERT_EQ(d.warnings.size(), 1u);
  EXPECT_NE(d.warnings[0].find("row 3"), std::string::npos);
}

TEST(LoadCsv, HeaderMismatchNamesRowOne) {
  TempDir dir("csv");
  const auto path = write(dir, "a.csv", "a,b\n1,2\n");
  try {
    load_csv(path, "1", false);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(LoadCsv, Errors) {
  TempDir dir("csv");
  EXPECT_THROW(load_csv(dir / "missing.csv", "y", true), InputError);
  const auto path = write(dir, "a.csv", "a,b\n1,2\n");
  EXPECT_THROW(load_csv(path, "c", true), InputError);
  const auto bad = write(dir, "b.csv", "a,b\nx,y\n");
  EXPECT_THROW(load_csv(bad, "b", true), InputError);
}

TEST(LoadFeatures, SelectsNamedColumns) {
  TempDir dir("csv");
  const auto path = write(dir, "f.csv", "b,junk,a\n1,9,2\n3,9,4\n");
  const Matrix x = load_features(path, {"a", "b"}, true);
  ASSERT_EQ(x.rows(), 2);
  EXPECT_EQ(x(0, 0), 2.0);
  EXPECT_EQ(x(1, 1), 3.0);
  EXPECT_THROW(load_features(path, {"zz"}, true), InputError);
  const auto plain = write(dir, "p.csv", "1,2\n3,4\n");
  EXPECT_EQ(load_features(plain, {"a", "b"}, false)(1, 0), 3.0);
  EXPECT_THROW(load_features(plain, {"a", "b", "c"}, false), InputError);
}

Dataset from_columns(const Matrix& x, const Vector& y) {
  Dataset d;
  d.X = x;
  d.y = y;
  for (Eigen::Index c = 0; c < x.cols(); ++c) d.feature_names.push_back("x" + std::to_string(c));
  return d;
}

TEST(Standardize, TrainingTargetArithmetic) {
  Standardization st;
  const Vector y = (Vector(3) << 1.0, 2.0, 3.0).finished();
  st.y_mean = 2.0;
  st.y_sd = std::sqrt(2.0 / 3.0);
  const Vector z = standardize_y(y, st);
  EXPECT_NEAR(z(0), -1.22474, 1e-5);
  EXPECT_EQ(z(1), 0.0);
  EXPECT_NEAR(z(2), 1.22474, 1e-5);
}

TEST(Standardize, TrainingSplitHasZeroMeanUnitSd) {
  const Dataset d = synthetic_t_regression(500, 3, 4.0, 0.5, 2);
  const auto [tr, te] = split_standardize(d, 0.8, 7);
  ASSERT_EQ(tr.size(), 400);
  ASSERT_EQ(te.size(), 100);
  for (Eigen::Index c = 0; c < tr.dim(); ++c) {
    const double mean = tr.X.col(c).mean();
    const double sd = std::sqrt((tr.X.col(c).array() - mean).square().mean());
    EXPECT_LE(std::abs(mean), 1e-9);
    EXPECT_LE(std::abs(sd - 1.0), 1e-9);
  }
  const double ym = tr.y.mean();
  EXPECT_LE(std::abs(ym), 1e-9);
  EXPECT_LE(std::abs(std::sqrt((tr.y.array() - ym).square().mean()) - 1.0), 1e-9);
}

TEST(Standardize, RoundTrip) {
  const Dataset d = synthetic_t_regression(200, 2, 3.0, 1.0, 3);
  const auto [tr, te] = split_standardize(d, 0.5, 1);
  const Vector y = d.y;
  const Vector back = unstandardize_y(standardize_y(y, tr.standardization), tr.standardization);
  EXPECT_LE((back - y).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Split, DeterministicDisjointAndCovering) {
  const Eigen::Index n = 50;
  Matrix x(n, 1);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i);
    y(i) = static_cast<double>(i % 7);
  }
  const Dataset d = from_columns(x, y);
  const auto [a1, b1] = split_standardize(d, 0.8, 4);
  const auto [a2, b2] = split_standardize(d, 0.8, 4);
  EXPECT_TRUE((a1.X.array() == a2.X.array()).all());
  EXPECT_TRUE((b1.y.array() == b2.y.array()).all());
  std::multiset<long> rows;
  auto collect = [&](const Dataset& s) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double raw = s.X(i, 0) * s.standardization.x_sd(0) + s.standardization.x_mean(0);
      rows.insert(std::lround(raw));
    }
  };
  collect(a1);
  collect(b1);
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(n));
  long expect = 0;
  for (long r : rows) EXPECT_EQ(r, expect++);
  const auto [a3, b3] = split_standardize(d, 0.8, 5);
  EXPECT_FALSE((a1.X.array() == a3.X.array()).all());
}

TEST(Split, TestUsesTrainingStatistics) {
  const Eigen::Index n = 200;
  Matrix x(n, 1);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i % 10);
    y(i) = static_cast<double>(i % 10);
  }
  const Dataset d = from_columns(x, y);
  const auto [tr, te] = split_standardize(d, 0.5, 9);
  // Shift the test set by a constant before applying the training standardization.
  const Vector shifted = standardize_y((te.y.array() * tr.standardization.y_sd +
                                        tr.standardization.y_mean + 10.0).matrix(),
                                       tr.standardization);
  EXPECT_GT(std::abs(shifted.mean()), 1.0);
  EXPECT_EQ(te.standardization.y_mean, tr.standardization.y_mean);
  EXPECT_EQ(te.standardization.y_sd, tr.standardization.y_sd);
}

TEST(Split, DropsConstantColumn) {
  Matrix x(20, 2);
  Vector y(20);
  for (Eigen::Index i = 0; i < 20; ++i) {
    x(i, 0) = 3.0;
    x(i, 1) = static_cast<double>(i);
    y(i) = static_cast<double>(i * i);
  }
  const auto [tr, te] = split_standardize(from_columns(x, y), 0.75, 1);
  EXPECT_EQ(tr.dim(), 1);
  EXPECT_EQ(te.dim(), 1);
  EXPECT_EQ(tr.feature_names, (std::vector<std::string>{"x1"}));
  ASSERT_FALSE(tr.warnings.empty());
  EXPECT_NE(tr.warnings.back().find("x0"), std::string::npos);
  EXPECT_THROW(split_standardize(from_columns(x, y), 1.0, 1), DomainError);
}

TEST(Synthetic, NoiselessIsDeterministicFunction) {
  const Dataset d = synthetic_t_regression(300, 3, 3.0, 0.0, 5);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    EXPECT_EQ(d.y(i), std::sin(3.0 * d.X(i, 0)) + 0.5 * d.X(i, 1));
    for (Eigen::Index c = 0; c < 3; ++c) {
      EXPECT_GE(d.X(i, c), -2.0);
      EXPECT_LE(d.X(i, c), 2.0);
    }
  }
  const Dataset one = synthetic_t_regression(10, 1, 3.0, 0.0, 5);
  for (Eigen::Index i = 0; i < one.size(); ++i) EXPECT_EQ(one.y(i), std::sin(3.0 * one.X(i, 0)));
}

TEST(Synthetic, HeavyTailedNoise) {
  const Dataset d = synthetic_t_regression(100000, 2, 3.0, 1.0, 6);
  Vector r(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) r(i) = d.y(i) - std::sin(3.0 * d.X(i, 0)) - 0.5 * d.X(i, 1);
  const double mean = r.mean();
  const double m2 = (r.array() - mean).square().mean();
  const double m4 = (r.array() - mean).pow(4).mean();
  EXPECT_GT(m4 / (m2 * m2), 3.0);
}

TEST(Synthetic, Reproducible) {
  const Dataset a = synthetic_t_regression(100, 2, 3.0, 0.3, 8);
  const Dataset b = synthetic_t_regression(100, 2, 3.0, 0.3, 8);
  const Dataset c = synthetic_t_regression(100, 2, 3.0, 0.3, 9);
  EXPECT_TRUE((a.X.array() == b.X.array()).all());
  EXPECT_TRUE((a.y.array() == b.y.array()).all());
  EXPECT_FALSE((a.y.array() == c.y.array()).all());
  EXPECT_THROW(synthetic_t_regression(10, 1, 2.0, 0.3, 1), DomainError);
}

TEST(MiniBatch, FullSetDistinctDeterministic) {
  const auto all = minibatch_indices(20, 20, 1, 0);
  ASSERT_EQ(all.size(), 20u);
  for (Eigen::Index i = 0; i < 20; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
  for (std::uint64_t t = 0; t < 50; ++t) {
    const auto idx = minibatch_indices(100, 17, 3, t);
    ASSERT_EQ(idx.size(), 17u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::set<Eigen::Index>(idx.begin(), idx.end()).size(), 17u);
    EXPECT_TRUE(idx.front() >= 0 && idx.back() < 100);
    EXPECT_EQ(idx, minibatch_indices(100, 17, 3, t));
  }
  EXPECT_NE(minibatch_indices(100, 17, 3, 0), minibatch_indices(100, 17, 3, 1));
  EXPECT_NE(minibatch_indices(100, 17, 3, 0), minibatch_indices(100, 17, 4, 0));
}

TEST(MiniBatch, OversizedBatchFallsBackWithWarning) {
  std::string warning;
  const auto idx = minibatch_indices(5, 9, 1, 0, &warning);
  EXPECT_EQ(idx.size(), 5u);
  EXPECT_FALSE(warning.empty());
}

TEST(MiniBatch, RoughlyUniformInclusion) {
  std::vector<int> hits(10, 0);
  const int draws = 20000;
  for (int t = 0; t < draws; ++t)
    for (auto i : minibatch_indices(10, 3, 11, static_cast<std::uint64_t>(t))) ++hits[static_cast<std::size_t>(i)];
  // Each index appears with probability 3/10; binomial sd is about 65.
  for (int h : hits) EXPECT_NEAR(h, 0.3 * draws, 5.0 * std::sqrt(draws * 0.3 * 0.7));
}

TEST(GatherRows, SelectsRows) {
  const Dataset d = synthetic_t_regression(10, 2, 3.0, 0.1, 1);
  const auto [x, y] = gather_rows(d, {2, 7});
  EXPECT_TRUE((x.row(1).array() == d.X.row(7).array()).all());
  EXPECT_EQ(y(0), d.y(2));
}

}  // namespace
