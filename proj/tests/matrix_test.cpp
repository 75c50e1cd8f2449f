#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tsnmf/matrix.hpp"
#include "tsnmf/matrix_io.hpp"

namespace tsnmf {
namespace {

using testing::naive_matmul;
using testing::random_matrix;

TEST(Hadamard, BinaryMaskZeroesEntries) {
  EXPECT_EQ(hadamard({{1, 2}, {3, 4}}, {{0, 1}, {1, 0}}), (DenseMatrix{{0, 2}, {3, 0}}));
}

TEST(Hadamard, OnesIsIdentity) {
  Rng rng(1);
  const auto a = random_matrix(rng, 4, 5);
  EXPECT_EQ(hadamard(a, DenseMatrix::ones(4, 5)), a);
}

TEST(Hadamard, EntrywiseProduct) {
  EXPECT_EQ(hadamard({{2, 3}}, {{5, 7}}), (DenseMatrix{{10, 21}}));
}

TEST(Hadamard, ShapeMismatchNamesBothShapes) {
  try {
    hadamard(DenseMatrix(2, 3), DenseMatrix(3, 2));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos);
    EXPECT_NE(msg.find("3x2"), std::string::npos);
  }
}

TEST(Hadamard, CommutativeAndAssociative) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_matrix(rng, 3, 4), b = random_matrix(rng, 3, 4),
               c = random_matrix(rng, 3, 4);
    EXPECT_EQ(hadamard(a, b), hadamard(b, a));
    // Associativity holds exactly for {0,1}-valued factors; with real values
    // only up to rounding.
    EXPECT_LT(testing::max_rel_diff(hadamard(hadamard(a, b), c), hadamard(a, hadamard(b, c))),
              1e-15);
  }
}

TEST(Matmul, Examples) {
  const DenseMatrix b{{1, 2}, {3, 4}};
  EXPECT_EQ(matmul(DenseMatrix::identity(2), b), b);
  EXPECT_EQ(matmul(DenseMatrix{{1, 2}}, DenseMatrix{{3}, {4}}), (DenseMatrix{{11}}));
  EXPECT_EQ(matmul(DenseMatrix::zeros(3, 2), b), DenseMatrix::zeros(3, 2));
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
  EXPECT_THROW(matmul_tn(DenseMatrix(2, 3), DenseMatrix(3, 3)), DimensionError);
  EXPECT_THROW(matmul_nt(DenseMatrix(2, 3), DenseMatrix(2, 2)), DimensionError);
}

TEST(Matmul, AgreesWithTripleLoopOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_matrix(rng, 10, 10), b = random_matrix(rng, 10, 10);
    const auto expect = naive_matmul(a, b);
    EXPECT_LT(testing::max_rel_diff(matmul(a, b), expect), 1e-12);
    EXPECT_LT(testing::max_rel_diff(matmul_tn(testing::naive_transpose(a), b), expect), 1e-12);
    EXPECT_LT(testing::max_rel_diff(matmul_nt(a, testing::naive_transpose(b)), expect), 1e-12);
  }
}

TEST(Matmul, RectangularTransposedForms) {
  Rng rng(4);
  const auto a = random_matrix(rng, 7, 3), b = random_matrix(rng, 7, 5), c = random_matrix(rng, 4, 3);
  EXPECT_LT(testing::max_rel_diff(matmul_tn(a, b), naive_matmul(transpose(a), b)), 1e-12);
  EXPECT_LT(testing::max_rel_diff(matmul_nt(a, c), naive_matmul(a, transpose(c))), 1e-12);
}

TEST(FrobeniusSq, Examples) {
  EXPECT_EQ(frobenius_sq(DenseMatrix::zeros(3, 3)), 0.0);
  EXPECT_EQ(frobenius_sq({{1, 2}, {3, 4}}), 30.0);
  Rng rng(5);
  const auto a = random_matrix(rng, 4, 6);
  EXPECT_DOUBLE_EQ(frobenius_sq(a), frobenius_sq(transpose(a)));
}

TEST(FrobeniusSq, EqualsTraceOfGram) {
  Rng rng(6);
  const auto a = random_matrix(rng, 5, 4);
  const auto g = naive_matmul(transpose(a), a);
  double trace = 0.0;
  for (std::size_t i = 0; i < g.rows(); ++i) trace += g(i, i);
  EXPECT_NEAR(frobenius_sq(a), trace, 1e-12 * trace);
}

TEST(FrobeniusSq, DifferenceZeroIffEqual) {
  Rng rng(7);
  const auto a = random_matrix(rng, 3, 3);
  EXPECT_EQ(frobenius_sq(subtract(a, a)), 0.0);
  auto b = a;
  b(1, 2) = std::nextafter(b(1, 2), 2.0);
  EXPECT_GT(frobenius_sq(subtract(a, b)), 0.0);
}

TEST(L2NormalizeRows, Examples) {
  const auto r = l2_normalize_rows({{3, 4}});
  EXPECT_NEAR(r(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.8, 1e-15);
  EXPECT_EQ(l2_normalize_rows({{0, 0}}), (DenseMatrix{{0, 0}}));
  const DenseMatrix unit{{1, 0, 0}};
  EXPECT_EQ(l2_normalize_rows(unit), unit);
}

TEST(L2NormalizeRows, UnitNormAndIdempotent) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_matrix(rng, 6, 9);
    for (double& x : a.row(2)) x = 0.0;
    const auto once = l2_normalize_rows(a);
    for (std::size_t i = 0; i < once.rows(); ++i) {
      double ss = 0.0;
      for (double x : once.row(i)) ss += x * x;
      if (i == 2) EXPECT_EQ(ss, 0.0);
      else EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-12);
    }
    EXPECT_LT(testing::max_abs_diff(l2_normalize_rows(once), once), 1e-12);
  }
}

TEST(SparseMatrix, RejectsInvalidEntries) {
  EXPECT_THROW(SparseMatrix(2, 2, {{2, 0, 1.0}}), DimensionError);
  EXPECT_THROW(SparseMatrix(2, 2, {{0, 0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix(2, 2, {{0, 0, -1.0}}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix(2, 2, {{0, 1, 1.0}, {0, 1, 2.0}}), std::invalid_argument);
}

TEST(SparseMatrix, TextFormat) {
  const SparseMatrix m(2, 3, {{1, 2, 0.5}, {0, 0, 3.0}});
  std::ostringstream os;
  write_sparse(os, m);
  EXPECT_EQ(os.str(), "2 3 2\n0 0 3\n1 2 0.5\n");
}

TEST(MatrixIo, RoundTripIsExact) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_matrix(rng, 5, 7);
    for (double& x : a.values())
      if (x < 0.4) x = 0.0;
    std::stringstream sparse, dense;
    write_sparse(sparse, SparseMatrix::from_dense(a));
    write_csv(dense, a);
    EXPECT_EQ(read_sparse(sparse).to_dense(), a);
    EXPECT_EQ(read_csv(dense), a);
  }
}

TEST(MatrixIo, MalformedInputs) {
  std::istringstream bad_header("2 x\n");
  EXPECT_THROW(read_sparse(bad_header), ParseError);
  std::istringstream wrong_count("2 2 2\n0 0 1\n");
  EXPECT_THROW(read_sparse(wrong_count), ParseError);
  std::istringstream out_of_range("2 2 1\n5 0 1\n");
  EXPECT_THROW(read_sparse(out_of_range), ParseError);
  std::istringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv(ragged), ParseError);
  std::istringstream junk("1,abc\n");
  EXPECT_THROW(read_csv(junk), ParseError);
}

}  // namespace
}  // namespace tsnmf
