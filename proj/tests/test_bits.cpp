#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"

using namespace treemat;

TEST(Bitvector, SetTestAndCount) {
  Bitvector v(130);
  EXPECT_TRUE(v.none());
  v.set(0);
  v.set(64);
  v.set(129);
  EXPECT_EQ(v.count(), 3u);
  EXPECT_TRUE(v[64]);
  EXPECT_FALSE(v[63]);
  EXPECT_EQ(v.find_first(), 0u);
  EXPECT_EQ(v.find_last(), 129u);
  v.reset(0);
  EXPECT_EQ(v.find_first(), 64u);
}

TEST(Bitvector, FindOnEmptyReturnsSize) {
  Bitvector v(70);
  EXPECT_EQ(v.find_first(), 70u);
  EXPECT_EQ(v.find_last(), 70u);
}

TEST(Bitvector, ComplementKeepsPaddingClear) {
  Bitvector v(67);
  v.set(3);
  const Bitvector c = ~v;
  EXPECT_EQ(c.count(), 66u);
  EXPECT_FALSE(c[3]);
  EXPECT_TRUE((~c) == v);
  EXPECT_TRUE(Bitvector(67, true).all());
}

TEST(Bitvector, AndOr) {
  Bitvector a(10), b(10);
  a.set(1);
  a.set(2);
  b.set(2);
  b.set(3);
  EXPECT_EQ((a & b).count(), 1u);
  EXPECT_EQ((a | b).count(), 3u);
  EXPECT_EQ(and_count(a.words(), b.words()), 1u);
}

TEST(BitMatrix, RowsColumnsAndDot) {
  BitMatrix m(3, 70);
  m.set(0, 0);
  m.set(0, 69);
  m.set(2, 5);
  EXPECT_TRUE(m(0, 69));
  EXPECT_FALSE(m(1, 69));
  EXPECT_EQ(m.row_count(0), 2u);
  EXPECT_EQ(m.column(5).count(), 1u);
  EXPECT_TRUE(m.column(5)[2]);
  Bitvector v(70);
  v.set(69);
  v.set(5);
  EXPECT_EQ(m.row_dot(0, v), 1u);
  EXPECT_EQ(m.row_dot(2, v), 1u);
  m.fill_row(1, true);
  EXPECT_EQ(m.row_count(1), 70u);
  EXPECT_EQ(m.columns().size(), 70u);
}

TEST(MatrixRank, ZeroMatrix) {
  EXPECT_EQ(matrix_rank(Matrix<int>(4, 3)), 0u);
  EXPECT_EQ(matrix_rank(BitMatrix(5, 5)), 0u);
}

TEST(MatrixRank, Identity) {
  Matrix<int> m(4, 4);
  for (std::size_t i = 0; i < 4; ++i) m(i, i) = 1;
  EXPECT_EQ(matrix_rank(m), 4u);
}

TEST(MatrixRank, AgreesWithRationalEliminationOnRandomMatrices) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> entry(-3, 3);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = dim(rng), c = dim(rng);
    Matrix<int> m(r, c);
    fixtures::IntRows rows(r, std::vector<int>(c));
    // Some low-rank cases: rows copied from earlier rows.
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const int v = (i > 0 && trial % 3 == 0) ? rows[i - 1][j] * 2 : entry(rng);
        m(i, j) = v;
        rows[i][j] = v;
      }
    EXPECT_EQ(matrix_rank(m), fixtures::rational_rank(rows)) << "trial " << trial;
  }
}

TEST(MatrixRank, LargeEntriesFallBackToBigIntegers) {
  // Bareiss intermediates overflow 64 bits here.
  Matrix<long long> m(3, 3);
  const long long big = 3'000'000'000'000LL;
  m(0, 0) = big;
  m(0, 1) = big - 1;
  m(0, 2) = 7;
  m(1, 0) = big - 5;
  m(1, 1) = big;
  m(1, 2) = 11;
  m(2, 0) = 2 * big - 5;
  m(2, 1) = 2 * big - 1;
  m(2, 2) = 18;
  EXPECT_EQ(matrix_rank(m), 2u);
  m(2, 2) = 19;
  EXPECT_EQ(matrix_rank(m), 3u);
}

TEST(MatrixRank, DeficientModuloSmallPrimes) {
  Matrix<int> m(2, 2);
  m(0, 0) = m(0, 1) = m(1, 0) = 1;
  m(1, 1) = -1;
  EXPECT_EQ(matrix_rank(m), 2u);
  Matrix<long long> big(1, 1);
  big(0, 0) = 2 * 2147483647LL;
  EXPECT_EQ(matrix_rank(big), 1u);
}

TEST(MatrixRank, AugmentAppendsColumn) {
  const Matrix<int> m(2, 2);
  const auto a = augment(m, 1);
  EXPECT_EQ(a.cols(), 3u);
  EXPECT_EQ(a(1, 2), 1);
  EXPECT_EQ(matrix_rank(a), 1u);
}
