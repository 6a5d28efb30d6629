#pragma once

#include <Eigen/Dense>

namespace qobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A complex matrix held as its real and imaginary parts. Every realizability
/// condition reduces to real identities, so residuals stay in this form.
struct SplitComplexMatrix {
  Matrix real;
  Matrix imag;

  SplitComplexMatrix() = default;
  SplitComplexMatrix(Matrix re, Matrix im);
  static SplitComplexMatrix FromReal(const Matrix& re);
  static SplitComplexMatrix FromComplex(const Eigen::MatrixXcd& z);

  Eigen::Index rows() const { return real.rows(); }
  Eigen::Index cols() const { return real.cols(); }
  Eigen::MatrixXcd ToComplex() const;
  SplitComplexMatrix Transpose() const;
};

/// Product of a real matrix on the left and a complex matrix on the right.
SplitComplexMatrix operator*(const Matrix& lhs, const SplitComplexMatrix& rhs);
/// Product of a complex matrix on the left and a real matrix on the right.
SplitComplexMatrix operator*(const SplitComplexMatrix& lhs, const Matrix& rhs);

/// The 2×2 symplectic block [[0, 1], [-1, 0]].
Matrix SymplecticBlock();

/// diag_m(J): block diagonal with `blocks` copies of J (size 2·blocks).
Matrix BlockDiagJ(int blocks);

/// diag(0_{zeros×zeros}, diag_m(J)) of total size `dim`; dim - zeros must be even.
Matrix DegenerateBlockDiagJ(int dim, int zeros);

enum class CommutationKind { kCanonical, kDegenerateCanonical };

/// Commutation structure Θ of the system variables, [x_j, x_k] = 2iΘ_jk.
class CommutationSpec {
 public:
  /// Θ = diag_{n/2}(J). Throws DimensionError for odd or nonpositive n.
  static CommutationSpec Canonical(int n);
  /// Θ = diag(0_{n'×n'}, diag_{(n-n')/2}(J)), 0 < n' ≤ n, n - n' even.
  /// n' = n gives the fully classical Θ = 0.
  static CommutationSpec DegenerateCanonical(int n, int n_prime);

  int dim() const { return static_cast<int>(theta_.rows()); }
  CommutationKind kind() const { return kind_; }
  bool canonical() const { return kind_ == CommutationKind::kCanonical; }
  /// Number of leading classical (commuting) variables; 0 when canonical.
  int n_prime() const { return n_prime_; }
  const Matrix& theta() const { return theta_; }
  /// diag(0_{n'×n'}, I): projector onto the non-commuting block. Equals -Θ².
  Matrix QuantumProjector() const;

 private:
  CommutationSpec(CommutationKind kind, int n_prime, Matrix theta);

  CommutationKind kind_;
  int n_prime_;
  Matrix theta_;
};

/// Itô table of the driving noise, dw dwᵀ = F_w dt with
/// F_w = I + i·diag(0_{n_c×n_c}, diag(J)) where n_c counts classical channels.
class NoiseSpec {
 public:
  /// Quantum vacuum noise F_w = I + i·diag_{n_w/2}(J); n_w must be even.
  static NoiseSpec Canonical(int n_w);
  /// Mixed noise with `n_classical` leading classical channels.
  static NoiseSpec Degenerate(int n_w, int n_classical);
  /// Purely classical Wiener noise F_w = I.
  static NoiseSpec Classical(int n_w);

  int dim() const { return static_cast<int>(imag_part_.rows()); }
  int n_classical() const { return n_classical_; }
  bool canonical() const { return n_classical_ == 0; }
  bool classical() const { return n_classical_ == dim(); }

  /// F_w as a split complex matrix.
  SplitComplexMatrix Ito() const;
  /// T_w = (F_w - F_wᵀ)/2, purely imaginary.
  SplitComplexMatrix Skew() const;
  /// Im(T_w), the real antisymmetric matrix with T_w = i·Im(T_w).
  const Matrix& SkewCoefficients() const { return imag_part_; }

 private:
  NoiseSpec(int n_classical, Matrix imag_part);

  int n_classical_;
  Matrix imag_part_;
};

/// dx = A x dt + B dw,  dy = C x dt + D dw, with commutation Θ and noise F_w.
class QuantumLinearSystem {
 public:
  /// Validates dimensions: A n×n, B n×n_w, C n_y×n, D n_y×n_w, n_w ≥ n_y,
  /// Θ n×n, F_w n_w×n_w. Quantum noise additionally requires n_w and n_y even.
  QuantumLinearSystem(Matrix a, Matrix b, Matrix c, Matrix d,
                      CommutationSpec comm, NoiseSpec noise);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  const Matrix& D() const { return d_; }
  const CommutationSpec& comm() const { return comm_; }
  const NoiseSpec& noise() const { return noise_; }
  const Matrix& theta() const { return comm_.theta(); }

  int n() const { return static_cast<int>(a_.rows()); }
  int n_w() const { return static_cast<int>(b_.cols()); }
  int n_y() const { return static_cast<int>(c_.rows()); }

  /// B′: the first n_y columns of B.
  Matrix BPrime() const { return b_.leftCols(n_y()); }
  /// B″: the remaining n_w - n_y columns of B.
  Matrix BDoublePrime() const { return b_.rightCols(n_w() - n_y()); }

  /// True iff D = [I_{n_y} 0] bit-exactly.
  bool HasConventionD() const;

 private:
  Matrix a_, b_, c_, d_;
  CommutationSpec comm_;
  NoiseSpec noise_;
};

/// D = [I_{n_y} 0_{n_y×(n_w-n_y)}].
Matrix ConventionD(int n_y, int n_w);

struct OutputNoiseAlgebra {
  SplitComplexMatrix F_y;  // D F_w Dᵀ
  SplitComplexMatrix T_y;  // D T_w Dᵀ
};

OutputNoiseAlgebra ComputeOutputNoiseAlgebra(const QuantumLinearSystem& sys);

/// Coefficient matrix of [y(t), y(s)ᵀ] = i·(2 D Im(T_w) Dᵀ s) for t ≥ s.
/// Throws DomainError for negative s.
Matrix OutputCommutationGrowth(const QuantumLinearSystem& sys, double s);

/// Entrywise max-abs norm; 0 for empty matrices.
double MaxAbs(const Matrix& m);

}  // namespace qobs
