#include "qobs/realizability.h"

#include <complex>
#include <string>

#include "qobs/errors.h"

namespace qobs {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI(0.0, 1.0);

}  // namespace

Matrix NonDemolitionResidual(const QuantumLinearSystem& sys) {
  return sys.theta() * sys.C().transpose() +
         sys.B() * sys.noise().SkewCoefficients() * sys.D().transpose();
}

RealizabilityReport CheckPlantRealizability(const QuantumLinearSystem& sys,
                                            double tol) {
  if (!sys.HasConventionD()) {
    throw PreconditionError(
        "realizability test requires D = [I 0] (convention form)");
  }
  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  const Matrix& theta = sys.theta();

  RealizabilityReport report;
  report.tolerance = tol;
  report.pr_residual_dyn = a * theta + theta * a.transpose() +
                           b * sys.noise().SkewCoefficients() * b.transpose();
  report.pr_residual_out = b * sys.D().transpose() -
                           theta * sys.C().transpose() * BlockDiagJ(sys.n_y() / 2);
  report.nondemolition_residual = NonDemolitionResidual(sys);
  report.max_residual_dyn = MaxAbs(report.pr_residual_dyn);
  report.max_residual_out = MaxAbs(report.pr_residual_out);
  report.max_residual_nondemolition = MaxAbs(report.nondemolition_residual);
  report.is_realizable =
      report.max_residual_dyn <= tol && report.max_residual_out <= tol;

  if (report.is_realizable && sys.comm().canonical() &&
      sys.noise().canonical()) {
    report.hamiltonian_coupling = ExtractHamiltonianCoupling(sys, tol);
  }
  return report;
}

Matrix InterleavePermutation(int size) {
  if (size < 0 || size % 2 != 0) {
    throw DimensionError("interleave permutation needs an even size, got " +
                         std::to_string(size));
  }
  const int half = size / 2;
  Matrix p = Matrix::Zero(size, size);
  for (int k = 0; k < half; ++k) {
    p(k, 2 * k) = 1.0;
    p(half + k, 2 * k + 1) = 1.0;
  }
  return p;
}

Eigen::MatrixXcd GammaMatrix(int n_w) {
  Eigen::Matrix2cd m;
  m << 0.5, 0.5 * kI, 0.5, -0.5 * kI;
  Eigen::MatrixXcd blocks = Eigen::MatrixXcd::Zero(n_w, n_w);
  for (int k = 0; k < n_w / 2; ++k) blocks.block<2, 2>(2 * k, 2 * k) = m;
  return InterleavePermutation(n_w).cast<Complex>() * blocks;
}

HamiltonianCoupling ExtractHamiltonianCoupling(const QuantumLinearSystem& sys,
                                               double tol) {
  if (!sys.comm().canonical()) {
    throw UnsupportedError(
        "Hamiltonian/coupling extraction needs canonical commutation; the "
        "degenerate case requires an augmented system");
  }
  if (!sys.noise().canonical()) {
    throw UnsupportedError(
        "Hamiltonian/coupling extraction needs quantum vacuum noise");
  }
  const Matrix& a = sys.A();
  const Matrix& theta = sys.theta();
  const Matrix dyn = a * theta + theta * a.transpose() +
                     sys.B() * sys.noise().SkewCoefficients() *
                         sys.B().transpose();
  const Matrix out = sys.B() * sys.D().transpose() -
                     theta * sys.C().transpose() * BlockDiagJ(sys.n_y() / 2);
  if (MaxAbs(dyn) > tol || MaxAbs(out) > tol) {
    throw PreconditionError("plant is not physically realizable");
  }

  HamiltonianCoupling hc;
  hc.R = 0.25 * (-theta * a + a.transpose() * theta);

  const int half = sys.n_w() / 2;
  Eigen::MatrixXcd selector = Eigen::MatrixXcd::Zero(half, sys.n_w());
  selector.rightCols(half).setIdentity();
  const Eigen::MatrixXcd gamma_inv_t = GammaMatrix(sys.n_w()).inverse().transpose();
  const Eigen::MatrixXcd lambda =
      -0.5 * kI * selector * gamma_inv_t *
      (sys.B().transpose() * theta).cast<Complex>();
  hc.Lambda = SplitComplexMatrix::FromComplex(lambda);
  return hc;
}

QuantumLinearSystem OpenOscillator(const Matrix& R,
                                   const SplitComplexMatrix& Lambda, int n_y) {
  const int n = static_cast<int>(R.rows());
  if (R.cols() != n) throw DimensionError("R must be square");
  if (Lambda.cols() != n) {
    throw DimensionError("coupling matrix must have n columns");
  }
  const int n_w = 2 * static_cast<int>(Lambda.rows());
  if (n_y < 2 || n_y % 2 != 0 || n_y > n_w) {
    throw DimensionError("need an even output dimension 2 <= n_y <= n_w");
  }
  const CommutationSpec comm = CommutationSpec::Canonical(n);
  const Matrix& theta = comm.theta();
  const Eigen::MatrixXcd lam = Lambda.ToComplex();
  const Eigen::MatrixXcd lam_conj = lam.conjugate();

  const Matrix a = 2.0 * theta * (R + (lam.adjoint() * lam).imag());

  Eigen::MatrixXcd coupling_row(n, n_w);
  coupling_row << -lam.adjoint(), lam.transpose();
  const Matrix b =
      (2.0 * kI * theta.cast<Complex>() * coupling_row * GammaMatrix(n_w)).real();

  const int half_y = n_y / 2;
  const int half_w = n_w / 2;
  Matrix sigma = Matrix::Zero(half_y, half_w);
  sigma.leftCols(half_y).setIdentity();
  Eigen::MatrixXcd sigma2 = Eigen::MatrixXcd::Zero(n_y, n_w);
  sigma2.topLeftCorner(half_y, half_w) = sigma.cast<Complex>();
  sigma2.bottomRightCorner(half_y, half_w) = sigma.cast<Complex>();
  Eigen::MatrixXcd stacked(n_w, n);
  stacked << lam + lam_conj, -kI * lam + kI * lam_conj;
  const Matrix c = (InterleavePermutation(n_y).transpose().cast<Complex>() *
                    sigma2 * stacked)
                       .real();

  return QuantumLinearSystem(a, b, c, ConventionD(n_y, n_w), comm,
                             NoiseSpec::Canonical(n_w));
}

}  // namespace qobs
