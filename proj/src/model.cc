#include "qobs/model.h"

#include <string>
#include <utility>

#include "qobs/errors.h"

namespace qobs {

namespace {

std::string Shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void RequireShape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                  const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(name) + " must be " +
                         std::to_string(rows) + "x" + std::to_string(cols) +
                         ", got " + Shape(m));
  }
}

}  // namespace

SplitComplexMatrix::SplitComplexMatrix(Matrix re, Matrix im)
    : real(std::move(re)), imag(std::move(im)) {
  if (real.rows() != imag.rows() || real.cols() != imag.cols()) {
    throw DimensionError("real and imaginary parts differ in shape: " +
                         Shape(real) + " vs " + Shape(imag));
  }
}

SplitComplexMatrix SplitComplexMatrix::FromReal(const Matrix& re) {
  return {re, Matrix::Zero(re.rows(), re.cols())};
}

SplitComplexMatrix SplitComplexMatrix::FromComplex(const Eigen::MatrixXcd& z) {
  return {z.real(), z.imag()};
}

Eigen::MatrixXcd SplitComplexMatrix::ToComplex() const {
  Eigen::MatrixXcd z(real.rows(), real.cols());
  z.real() = real;
  z.imag() = imag;
  return z;
}

SplitComplexMatrix SplitComplexMatrix::Transpose() const {
  return {real.transpose(), imag.transpose()};
}

SplitComplexMatrix operator*(const Matrix& lhs, const SplitComplexMatrix& rhs) {
  return {lhs * rhs.real, lhs * rhs.imag};
}

SplitComplexMatrix operator*(const SplitComplexMatrix& lhs, const Matrix& rhs) {
  return {lhs.real * rhs, lhs.imag * rhs};
}

Matrix SymplecticBlock() {
  Matrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  return j;
}

Matrix BlockDiagJ(int blocks) {
  if (blocks < 0) throw DimensionError("negative block count");
  Matrix out = Matrix::Zero(2 * blocks, 2 * blocks);
  for (int k = 0; k < blocks; ++k) {
    out(2 * k, 2 * k + 1) = 1.0;
    out(2 * k + 1, 2 * k) = -1.0;
  }
  return out;
}

Matrix DegenerateBlockDiagJ(int dim, int zeros) {
  if (zeros < 0 || zeros > dim || (dim - zeros) % 2 != 0) {
    throw DimensionError("cannot place diag(J) blocks after " +
                         std::to_string(zeros) + " zeros in dimension " +
                         std::to_string(dim));
  }
  Matrix out = Matrix::Zero(dim, dim);
  out.bottomRightCorner(dim - zeros, dim - zeros) =
      BlockDiagJ((dim - zeros) / 2);
  return out;
}

CommutationSpec::CommutationSpec(CommutationKind kind, int n_prime,
                                 Matrix theta)
    : kind_(kind), n_prime_(n_prime), theta_(std::move(theta)) {}

CommutationSpec CommutationSpec::Canonical(int n) {
  if (n < 2 || n % 2 != 0) {
    throw DimensionError("canonical commutation needs an even n >= 2, got " +
                         std::to_string(n));
  }
  return {CommutationKind::kCanonical, 0, BlockDiagJ(n / 2)};
}

CommutationSpec CommutationSpec::DegenerateCanonical(int n, int n_prime) {
  if (n_prime <= 0 || n_prime > n || (n - n_prime) % 2 != 0) {
    throw DimensionError("degenerate commutation needs 0 < n' <= n with n - n' "
                         "even, got n=" + std::to_string(n) +
                         " n'=" + std::to_string(n_prime));
  }
  return {CommutationKind::kDegenerateCanonical, n_prime,
          DegenerateBlockDiagJ(n, n_prime)};
}

Matrix CommutationSpec::QuantumProjector() const {
  Matrix proj = Matrix::Identity(dim(), dim());
  proj.topLeftCorner(n_prime_, n_prime_).setZero();
  return proj;
}

NoiseSpec::NoiseSpec(int n_classical, Matrix imag_part)
    : n_classical_(n_classical), imag_part_(std::move(imag_part)) {}

NoiseSpec NoiseSpec::Canonical(int n_w) {
  if (n_w < 2 || n_w % 2 != 0) {
    throw DimensionError("quantum noise needs an even n_w >= 2, got " +
                         std::to_string(n_w));
  }
  return {0, BlockDiagJ(n_w / 2)};
}

NoiseSpec NoiseSpec::Degenerate(int n_w, int n_classical) {
  if (n_w < 1) throw DimensionError("noise dimension must be positive");
  return {n_classical, DegenerateBlockDiagJ(n_w, n_classical)};
}

NoiseSpec NoiseSpec::Classical(int n_w) { return Degenerate(n_w, n_w); }

SplitComplexMatrix NoiseSpec::Ito() const {
  return {Matrix::Identity(dim(), dim()), imag_part_};
}

SplitComplexMatrix NoiseSpec::Skew() const {
  return {Matrix::Zero(dim(), dim()), imag_part_};
}

QuantumLinearSystem::QuantumLinearSystem(Matrix a, Matrix b, Matrix c,
                                         Matrix d, CommutationSpec comm,
                                         NoiseSpec noise)
    : a_(std::move(a)),
      b_(std::move(b)),
      c_(std::move(c)),
      d_(std::move(d)),
      comm_(std::move(comm)),
      noise_(std::move(noise)) {
  const Eigen::Index n = a_.rows();
  if (n < 1) throw DimensionError("state dimension must be positive");
  RequireShape(a_, n, n, "A");
  const Eigen::Index n_w = b_.cols();
  RequireShape(b_, n, n_w, "B");
  const Eigen::Index n_y = c_.rows();
  if (n_y < 1) throw DimensionError("output dimension must be positive");
  RequireShape(c_, n_y, n, "C");
  RequireShape(d_, n_y, n_w, "D");
  if (n_w < n_y) {
    throw DimensionError("need n_w >= n_y, got n_w=" + std::to_string(n_w) +
                         " n_y=" + std::to_string(n_y));
  }
  if (comm_.dim() != n) {
    throw DimensionError("commutation matrix is " +
                         std::to_string(comm_.dim()) + "-dimensional, state is " +
                         std::to_string(n));
  }
  if (noise_.dim() != n_w) {
    throw DimensionError("noise Itô matrix is " + std::to_string(noise_.dim()) +
                         "-dimensional, B has " + std::to_string(n_w) +
                         " columns");
  }
  if (!noise_.classical() && (n_w % 2 != 0 || n_y % 2 != 0)) {
    throw DimensionError("quantum noise requires even n_w and n_y, got n_w=" +
                         std::to_string(n_w) + " n_y=" + std::to_string(n_y));
  }
}

bool QuantumLinearSystem::HasConventionD() const {
  return d_ == ConventionD(n_y(), n_w());
}

Matrix ConventionD(int n_y, int n_w) {
  Matrix d = Matrix::Zero(n_y, n_w);
  d.leftCols(n_y).setIdentity();
  return d;
}

OutputNoiseAlgebra ComputeOutputNoiseAlgebra(const QuantumLinearSystem& sys) {
  const Matrix& d = sys.D();
  const Matrix dt = d.transpose();
  return {d * sys.noise().Ito() * dt, d * sys.noise().Skew() * dt};
}

Matrix OutputCommutationGrowth(const QuantumLinearSystem& sys, double s) {
  if (!(s >= 0.0)) {
    throw DomainError("commutator time must be nonnegative, got " +
                      std::to_string(s));
  }
  return 2.0 * s * sys.D() * sys.noise().SkewCoefficients() *
         sys.D().transpose();
}

double MaxAbs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace qobs
