#include "qobs/model.h"

#include <gtest/gtest.h>

#include "qobs/errors.h"
#include "test_util.h"

namespace qobs {
namespace {

using testing::Eye;
using testing::Mat;

TEST(CommutationSpecTest, CanonicalTwoIsJ) {
  const CommutationSpec spec = CommutationSpec::Canonical(2);
  EXPECT_EQ(spec.theta(), Mat(2, 2, {0, 1, -1, 0}));
  EXPECT_TRUE(spec.canonical());
  EXPECT_EQ(spec.n_prime(), 0);
}

TEST(CommutationSpecTest, CanonicalFourIsBlockDiagonal) {
  Matrix expected = Matrix::Zero(4, 4);
  expected.topLeftCorner(2, 2) = SymplecticBlock();
  expected.bottomRightCorner(2, 2) = SymplecticBlock();
  EXPECT_EQ(CommutationSpec::Canonical(4).theta(), expected);
}

TEST(CommutationSpecTest, RejectsOddOrNonpositiveDimension) {
  EXPECT_THROW(CommutationSpec::Canonical(3), DimensionError);
  EXPECT_THROW(CommutationSpec::Canonical(0), DimensionError);
  EXPECT_THROW(CommutationSpec::Canonical(-2), DimensionError);
}

TEST(CommutationSpecTest, DegenerateThreeOne) {
  const CommutationSpec spec = CommutationSpec::DegenerateCanonical(3, 1);
  EXPECT_EQ(spec.theta(), Mat(3, 3, {0, 0, 0, 0, 0, 1, 0, -1, 0}));
  EXPECT_EQ(spec.kind(), CommutationKind::kDegenerateCanonical);
  EXPECT_EQ(spec.n_prime(), 1);
}

TEST(CommutationSpecTest, FullyClassicalIsZero) {
  EXPECT_EQ(CommutationSpec::DegenerateCanonical(2, 2).theta(),
            Matrix::Zero(2, 2));
}

TEST(CommutationSpecTest, DegenerateRejectsParityAndRange) {
  EXPECT_THROW(CommutationSpec::DegenerateCanonical(4, 1), DimensionError);
  EXPECT_THROW(CommutationSpec::DegenerateCanonical(4, 0), DimensionError);
  EXPECT_THROW(CommutationSpec::DegenerateCanonical(4, 5), DimensionError);
}

TEST(CommutationSpecTest, ExactAntisymmetry) {
  for (int n = 2; n <= 10; n += 2) {
    const Matrix t = CommutationSpec::Canonical(n).theta();
    EXPECT_EQ(t + t.transpose(), Matrix::Zero(n, n));
    for (int np = n % 2 == 0 ? 2 : 1; np <= n; np += 2) {
      const Matrix d = CommutationSpec::DegenerateCanonical(n, np).theta();
      EXPECT_EQ(d + d.transpose(), Matrix::Zero(n, n));
    }
  }
}

TEST(CommutationSpecTest, ProjectorIsMinusThetaSquared) {
  const CommutationSpec spec = CommutationSpec::DegenerateCanonical(5, 1);
  const Matrix t = spec.theta();
  EXPECT_EQ(spec.QuantumProjector(), Matrix(-t * t));
}

TEST(BlockDiagJTest, SquaresToMinusIdentity) {
  for (int m = 1; m <= 5; ++m) {
    const Matrix j = BlockDiagJ(m);
    EXPECT_EQ(j * j, Matrix(-Eye(2 * m)));
  }
}

TEST(NoiseSpecTest, CanonicalItoTable) {
  const NoiseSpec noise = NoiseSpec::Canonical(4);
  const SplitComplexMatrix f = noise.Ito();
  EXPECT_EQ(f.real, Eye(4));
  EXPECT_EQ(f.imag, BlockDiagJ(2));
  const SplitComplexMatrix t = noise.Skew();
  EXPECT_EQ(t.real, Matrix::Zero(4, 4));
  EXPECT_EQ(t.imag, BlockDiagJ(2));
  EXPECT_EQ(t.imag + t.imag.transpose(), Matrix::Zero(4, 4));
}

TEST(NoiseSpecTest, SymmetricPartIsIdentity) {
  for (const NoiseSpec& noise :
       {NoiseSpec::Canonical(2), NoiseSpec::Canonical(6),
        NoiseSpec::Degenerate(4, 2), NoiseSpec::Classical(3)}) {
    const SplitComplexMatrix f = noise.Ito();
    const SplitComplexMatrix ft = f.Transpose();
    EXPECT_EQ(0.5 * (f.real + ft.real), Eye(noise.dim()));
    EXPECT_EQ(0.5 * (f.imag + ft.imag), Matrix::Zero(noise.dim(), noise.dim()));
  }
}

TEST(NoiseSpecTest, ItoTableIsHermitianPsd) {
  const Eigen::MatrixXcd f = NoiseSpec::Canonical(4).Ito().ToComplex();
  EXPECT_NEAR((f - f.adjoint()).norm(), 0.0, 1e-15);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(f);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(NoiseSpecTest, RejectsOddQuantumDimension) {
  EXPECT_THROW(NoiseSpec::Canonical(3), DimensionError);
}

TEST(QuantumLinearSystemTest, DimensionChecks) {
  const auto comm = CommutationSpec::Canonical(2);
  const auto noise = NoiseSpec::Canonical(4);
  EXPECT_NO_THROW(QuantumLinearSystem(Eye(2), Matrix::Zero(2, 4), Eye(2),
                                      ConventionD(2, 4), comm, noise));
  EXPECT_THROW(QuantumLinearSystem(Eye(2), Matrix::Zero(2, 3), Eye(2),
                                   Matrix::Zero(2, 3), comm, noise),
               DimensionError);
  EXPECT_THROW(QuantumLinearSystem(Matrix::Zero(3, 3), Matrix::Zero(3, 4),
                                   Matrix::Zero(2, 3), ConventionD(2, 4), comm,
                                   noise),
               DimensionError);
  // n_w < n_y
  EXPECT_THROW(QuantumLinearSystem(Eye(2), Matrix::Zero(2, 2),
                                   Matrix::Zero(4, 2), Matrix::Zero(4, 2), comm,
                                   NoiseSpec::Canonical(2)),
               DimensionError);
}

TEST(QuantumLinearSystemTest, PartitionsB) {
  const QuantumLinearSystem sys = testing::AtomCavity(0.1, 0.1, 0.01);
  EXPECT_EQ(sys.BPrime(), sys.B().leftCols(2));
  EXPECT_EQ(sys.BDoublePrime(), sys.B().rightCols(2));
  EXPECT_TRUE(sys.HasConventionD());
}

TEST(QuantumLinearSystemTest, ConventionFormIsBitExact) {
  Matrix d = ConventionD(2, 4);
  d(0, 0) = 1.0 + 1e-16 * 4;
  const QuantumLinearSystem sys(Eye(2), Matrix::Zero(2, 4), Eye(2), d,
                                CommutationSpec::Canonical(2),
                                NoiseSpec::Canonical(4));
  EXPECT_FALSE(sys.HasConventionD());
}

TEST(OutputNoiseAlgebraTest, ProjectionOfLeadingBlock) {
  const QuantumLinearSystem sys = testing::Squeezer(0.1, 0.2, 0.01);
  const OutputNoiseAlgebra alg = ComputeOutputNoiseAlgebra(sys);
  EXPECT_EQ(alg.F_y.real, Eye(2));
  EXPECT_EQ(alg.F_y.imag, SymplecticBlock());
  EXPECT_EQ(alg.T_y.imag, SymplecticBlock());
  EXPECT_EQ(alg.T_y.real, Matrix::Zero(2, 2));
}

TEST(OutputNoiseAlgebraTest, IdentityDKeepsSkewPart) {
  const OutputNoiseAlgebra alg = ComputeOutputNoiseAlgebra(testing::Cavity(0.1));
  EXPECT_EQ(alg.T_y.imag, SymplecticBlock());
}

TEST(OutputNoiseAlgebraTest, ClassicalNoiseHasNoSkewPart) {
  const QuantumLinearSystem sys(
      -Eye(2), Eye(2), Eye(2), Eye(2), CommutationSpec::DegenerateCanonical(2, 2),
      NoiseSpec::Classical(2));
  const OutputNoiseAlgebra alg = ComputeOutputNoiseAlgebra(sys);
  EXPECT_EQ(alg.T_y.imag, Matrix::Zero(2, 2));
  EXPECT_EQ(alg.F_y.real, Eye(2));
}

TEST(OutputNoiseAlgebraTest, MatchesComplexProducts) {
  std::mt19937_64 rng(7);
  const Matrix d = testing::Gaussian(rng, 2, 4);
  const QuantumLinearSystem sys(Eye(2), Matrix::Zero(2, 4), Matrix::Zero(2, 2),
                                d, CommutationSpec::Canonical(2),
                                NoiseSpec::Canonical(4));
  const Eigen::MatrixXcd fw = sys.noise().Ito().ToComplex();
  const Eigen::MatrixXcd dc = d.cast<std::complex<double>>();
  const Eigen::MatrixXcd fy = dc * fw * dc.transpose();
  const OutputNoiseAlgebra alg = ComputeOutputNoiseAlgebra(sys);
  EXPECT_LT((alg.F_y.ToComplex() - fy).norm(), 1e-14);
}

TEST(OutputCommutationGrowthTest, ZeroAtOrigin) {
  EXPECT_EQ(OutputCommutationGrowth(testing::Squeezer(0.1, 0.2, 0.01), 0.0),
            Matrix::Zero(2, 2));
}

TEST(OutputCommutationGrowthTest, TwoJPerUnitTime) {
  EXPECT_EQ(OutputCommutationGrowth(testing::Squeezer(0.1, 0.2, 0.01), 1.0),
            Matrix(2.0 * SymplecticBlock()));
}

TEST(OutputCommutationGrowthTest, ClassicalOutputSelfCommutes) {
  const QuantumLinearSystem sys(
      -Eye(2), Eye(2), Eye(2), Eye(2), CommutationSpec::DegenerateCanonical(2, 2),
      NoiseSpec::Classical(2));
  for (double s : {0.0, 1.0, 17.5}) {
    EXPECT_EQ(OutputCommutationGrowth(sys, s), Matrix::Zero(2, 2));
  }
}

TEST(OutputCommutationGrowthTest, NegativeTimeIsDomainError) {
  EXPECT_THROW(OutputCommutationGrowth(testing::Cavity(0.1), -1.0),
               DomainError);
}

}  // namespace
}  // namespace qobs
