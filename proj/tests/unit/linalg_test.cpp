#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "modgrok/errors.hpp"
#include "modgrok/linalg.hpp"
#include "modgrok/rng.hpp"

namespace modgrok {
namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  SeededRng rng(seed);
  return Matrix(rows, cols, rng_uniform(rng, -1.0, 1.0, rows * cols));
}

double orthonormality_error(const Matrix& q) {
  const Matrix gram = matmul_tn(q, q);
  return max_abs_diff(gram, Matrix::identity(q.cols()));
}

TEST(Matmul, IdentityAndHandArithmetic) {
  const Matrix a = random_matrix(3, 3, 1);
  EXPECT_EQ(matmul(Matrix::identity(3), a), a);

  const Matrix b{{1, 2}, {3, 4}};
  const Matrix c{{5}, {6}};
  EXPECT_EQ(matmul(b, c), (Matrix{{17}, {39}}));
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos);
  }
}

TEST(Matmul, TransposedVariantsAgreeWithExplicitTranspose) {
  const Matrix a = random_matrix(150, 70, 2);
  const Matrix b = random_matrix(150, 40, 3);
  const Matrix c = random_matrix(90, 70, 4);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), matmul(a.transposed(), b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), matmul(a, c.transposed())), 1e-12);
}

TEST(Matmul, IsAssociativeOnRandomTriples) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix a = random_matrix(17, 23, 10 * seed + 1);
    const Matrix b = random_matrix(23, 31, 10 * seed + 2);
    const Matrix c = random_matrix(31, 9, 10 * seed + 3);
    EXPECT_LE(relative_error(matmul(matmul(a, b), c), matmul(a, matmul(b, c))), 1e-10);
  }
}

TEST(Svd, IdentityAndDiagonal) {
  const SvdResult id = svd(Matrix::identity(4));
  for (double s : id.S) EXPECT_NEAR(s, 1.0, 1e-14);

  const SvdResult d = svd(Matrix{{3, 0}, {0, 1}});
  ASSERT_EQ(d.S.size(), 2u);
  EXPECT_NEAR(d.S[0], 3.0, 1e-14);
  EXPECT_NEAR(d.S[1], 1.0, 1e-14);
}

TEST(Svd, RandomSquareReconstructs) {
  const Matrix a = random_matrix(20, 20, 7);
  const SvdResult s = svd(a);
  EXPECT_LE(relative_error(truncate(s, s.S.size()), a), 1e-10);
  EXPECT_LE(orthonormality_error(s.U), 1e-10);
  EXPECT_LE(orthonormality_error(s.V), 1e-10);
  EXPECT_TRUE(std::is_sorted(s.S.rbegin(), s.S.rend()));
  EXPECT_GE(s.S.back(), 0.0);
}

TEST(Svd, RectangularShapesAndSignConvention) {
  for (auto [m, n] : {std::pair{30, 12}, std::pair{12, 30}, std::pair{114, 64}}) {
    const Matrix a = random_matrix(m, n, static_cast<std::uint64_t>(m * 100 + n));
    const SvdResult s = svd(a);
    const std::size_t k = std::min<std::size_t>(m, n);
    ASSERT_EQ(s.S.size(), k);
    EXPECT_EQ(s.U.rows(), static_cast<std::size_t>(m));
    EXPECT_EQ(s.V.rows(), static_cast<std::size_t>(n));
    EXPECT_LE(relative_error(truncate(s, k), a), 1e-10);
    for (std::size_t j = 0; j < k; ++j) EXPECT_GT(s.V(0, j), 0.0);
  }
}

TEST(Svd, NonFiniteInputIsDomainError) {
  Matrix a = Matrix::identity(3);
  a(1, 2) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(svd(a), DomainError);
  a(1, 2) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(svd(a), DomainError);
}

TEST(Svd, SingularValuesInvariantUnderPermutation) {
  const Matrix a = random_matrix(15, 11, 8);
  Matrix perm(15, 11);
  const std::vector<std::size_t> rows = {3, 14, 0, 7, 1, 9, 12, 2, 5, 11, 4, 6, 13, 8, 10};
  const std::vector<std::size_t> cols = {10, 2, 5, 0, 8, 1, 9, 3, 7, 4, 6};
  for (std::size_t i = 0; i < 15; ++i)
    for (std::size_t j = 0; j < 11; ++j) perm(i, j) = a(rows[i], cols[j]);
  const SvdResult s1 = svd(a);
  const SvdResult s2 = svd(perm);
  for (std::size_t i = 0; i < s1.S.size(); ++i) EXPECT_NEAR(s1.S[i], s2.S[i], 1e-10);
}

TEST(Truncate, EdgeRanks) {
  const Matrix a = random_matrix(9, 6, 12);
  const SvdResult s = svd(a);
  EXPECT_EQ(truncate(s, 0), Matrix(9, 6));
  EXPECT_LE(relative_error(truncate(s, 6), a), 1e-10);
  EXPECT_THROW(truncate(s, 7), RangeError);

  const SvdResult d = svd(Matrix{{3, 0}, {0, 1}});
  EXPECT_LE(max_abs_diff(truncate(d, 1), Matrix{{3, 0}, {0, 0}}), 1e-14);
}

TEST(Complement, EdgeRanks) {
  const Matrix a = random_matrix(9, 6, 13);
  const SvdResult s = svd(a);
  EXPECT_LE(relative_error(complement(s, 0), a), 1e-10);
  EXPECT_EQ(complement(s, 6), Matrix(9, 6));
  EXPECT_THROW(complement(s, 7), RangeError);

  const SvdResult d = svd(Matrix{{3, 0}, {0, 1}});
  EXPECT_LE(max_abs_diff(complement(d, 1), Matrix{{0, 0}, {0, 1}}), 1e-14);
}

TEST(Truncate, PlusComplementReconstructsForEveryRank) {
  for (std::uint64_t seed = 20; seed < 24; ++seed) {
    const Matrix a = random_matrix(12 + seed % 3, 10, seed);
    const SvdResult s = svd(a);
    for (std::size_t r = 0; r <= s.S.size(); ++r) {
      EXPECT_LE(relative_error(add(truncate(s, r), complement(s, r)), a), 1e-10) << "r=" << r;
    }
  }
}

TEST(Rng, IdenticalSeedsGiveIdenticalStreams) {
  SeededRng a(99);
  SeededRng b(99);
  EXPECT_EQ(rng_uniform(a, -2.0, 3.0, 1000), rng_uniform(b, -2.0, 3.0, 1000));
  SeededRng c(100);
  SeededRng d(99);
  EXPECT_NE(rng_uniform(c, 0.0, 1.0, 10), rng_uniform(d, 0.0, 1.0, 10));
}

TEST(Rng, UniformMeanAndRange) {
  SeededRng rng(2024);
  const auto draws = rng_uniform(rng, 0.0, 1.0, 100000);
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / 1e5;
  EXPECT_NEAR(mean, 0.5, 0.01);
  for (double v : draws) {
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Rng, InvertedRangeIsError) {
  SeededRng rng(1);
  EXPECT_THROW(rng_uniform(rng, 1.0, 0.0, 3), RangeError);
  EXPECT_THROW(rng_uniform(rng, 1.0, 1.0, 3), RangeError);
}

TEST(ParallelTiles, ResultIndependentOfWorkerCount) {
  // matmul tiles rows in fixed blocks, so splitting the same product into
  // separately computed row blocks must reproduce it bit for bit.
  const Matrix a = random_matrix(300, 64, 31);
  const Matrix b = random_matrix(64, 50, 32);
  const Matrix full = matmul(a, b);
  Matrix top(128, 64);
  std::copy_n(a.data(), 128 * 64, top.data());
  const Matrix part = matmul(top, b);
  for (std::size_t i = 0; i < 128; ++i)
    for (std::size_t j = 0; j < 50; ++j) EXPECT_EQ(part(i, j), full(i, j));
}

}  // namespace
}  // namespace modgrok
