#include <gtest/gtest.h>

#include <cmath>

#include "vpb/knn.hpp"
#include "vpb/rng.hpp"

#include "oracles.hpp"

using namespace vpb;

namespace {

using oracle::random_matrix;
using oracle::set_from;

}  // namespace

TEST(Nearest, ExactCopyFound) {
  Rng rng(1);
  const Matrix train = random_matrix(10, 4, rng);
  Matrix q = Matrix::zeros(1, 4);
  std::copy(train.row(5).begin(), train.row(5).end(), q.row(0).begin());
  EXPECT_EQ(nearest(q, train, 1, Metric::Euclidean)[0], std::vector<std::size_t>{5});
}

TEST(Nearest, HandComputedOrder) {
  const Matrix train{3, 2, {0, 0, 3, 4, 6, 8}};
  const Matrix q{1, 2, {3, 3}};
  EXPECT_EQ(nearest(q, train, 2, Metric::Euclidean)[0], (std::vector<std::size_t>{1, 0}));
}

TEST(Nearest, CosineTieGoesToSmallerIndex) {
  const Matrix train{2, 2, {1, 0, 2, 0}};
  const Matrix q{1, 2, {3, 0}};
  EXPECT_EQ(nearest(q, train, 1, Metric::Cosine)[0], std::vector<std::size_t>{0});
  EXPECT_EQ(nearest(q, train, 2, Metric::Cosine)[0], (std::vector<std::size_t>{0, 1}));
}

TEST(Nearest, Errors) {
  const Matrix train{2, 2, {1, 0, 2, 0}};
  try {
    nearest(Matrix{1, 2, {0, 0}}, train, 3, Metric::Cosine);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
  try {
    nearest(Matrix{1, 3, {0, 0, 0}}, train, 1, Metric::Cosine);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(Nearest, AgreesWithNaiveScan) {
  Rng rng(7);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t d = 1 + rng.below(8);
    Matrix train = random_matrix(n, d, rng);
    // plant duplicates so ties occur
    if (n > 3) std::copy(train.row(0).begin(), train.row(0).end(), train.row(n - 1).begin());
    const Matrix q = random_matrix(5, d, rng);
    const std::size_t k = 1 + rng.below(n);
    for (Metric m : {Metric::Euclidean, Metric::Cosine}) {
      EXPECT_EQ(nearest(q, train, k, m), oracle::nearest(q, train, k, m)) << "instance " << t;
    }
  }
}

TEST(Nearest, NormalizedEuclideanEqualsCosine) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng.below(6);
    Matrix train = random_matrix(30, d, rng);
    Matrix q = random_matrix(8, d, rng);
    // a scaled copy ties with its original under both metrics once normalised
    for (std::size_t c = 0; c < d; ++c) train(29, c) = 4.0 * train(3, c);
    l2_normalize_rows(train);
    l2_normalize_rows(q);
    EXPECT_EQ(nearest(q, train, 3, Metric::Euclidean), nearest(q, train, 3, Metric::Cosine)) << t;
  }
}

TEST(Nearest, NormalizedIdentityHoldsForNearTies) {
  // 1-D rows normalize to +-1 up to rounding, so every rank is a near tie
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.below(2);
    Matrix train = random_matrix(20, d, rng);
    Matrix q = random_matrix(4, d, rng);
    l2_normalize_rows(train);
    l2_normalize_rows(q);
    EXPECT_EQ(nearest(q, train, 20, Metric::Euclidean), nearest(q, train, 20, Metric::Cosine)) << t;
  }
}

TEST(Normalize, Idempotent) {
  Rng rng(15);
  Matrix m = random_matrix(50, 7, rng);
  l2_normalize_rows(m);
  const Matrix once = m;
  l2_normalize_rows(m);
  EXPECT_EQ(m.data, once.data);
}

TEST(Nearest, CosineIgnoresPositiveScaling) {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    Matrix train = random_matrix(25, 6, rng);
    const Matrix q = random_matrix(10, 6, rng);
    const auto before = nearest(q, train, 4, Metric::Cosine);
    for (auto& v : train.data) v *= 8.0;  // power of two keeps every quotient exact
    EXPECT_EQ(nearest(q, train, 4, Metric::Cosine), before);
  }
}

TEST(Nearest, ParallelMatchesSequential) {
  Rng rng(10);
  const Matrix train = random_matrix(200, 16, rng);
  const Matrix q = random_matrix(64, 16, rng);
  EXPECT_EQ(nearest(q, train, 5, Metric::Cosine, 1), nearest(q, train, 5, Metric::Cosine, 4));
}

TEST(NnAccuracy, SubsetOfTrainIsPerfect) {
  Rng rng(11);
  const Matrix train = random_matrix(20, 5, rng);
  std::vector<std::uint32_t> labels;
  for (std::uint32_t i = 0; i < 20; ++i) labels.push_back(i % 4);
  const auto tr = set_from(train, labels, 4);
  Matrix sub = Matrix::zeros(5, 5);
  std::vector<std::uint32_t> sub_labels;
  for (std::size_t i = 0; i < 5; ++i) {
    std::copy(train.row(3 * i).begin(), train.row(3 * i).end(), sub.row(i).begin());
    sub_labels.push_back(labels[3 * i]);
  }
  EXPECT_DOUBLE_EQ(nn_accuracy(set_from(sub, sub_labels, 4), tr), 1.0);
  EXPECT_DOUBLE_EQ(nn_accuracy(set_from(sub, sub_labels, 4), tr, Metric::Euclidean, false), 1.0);
}

TEST(NnAccuracy, RandomEmbeddingsAtChance) {
  EXPECT_NEAR(oracle::chance_accuracy(2000, 10, 16, 12), 0.1, 0.02);
}

TEST(NnAccuracy, NormalizedMetricsAgree) {
  Rng rng(13);
  const Matrix a = random_matrix(100, 8, rng), b = random_matrix(50, 8, rng);
  std::vector<std::uint32_t> la, lb;
  for (std::size_t i = 0; i < 100; ++i) la.push_back(static_cast<std::uint32_t>(rng.below(3)));
  for (std::size_t i = 0; i < 50; ++i) lb.push_back(static_cast<std::uint32_t>(rng.below(3)));
  const auto tr = set_from(a, la, 3), te = set_from(b, lb, 3);
  EXPECT_EQ(nn_accuracy(te, tr, Metric::Euclidean, true), nn_accuracy(te, tr, Metric::Cosine, true));
}
