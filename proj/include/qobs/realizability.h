#pragma once

#include <optional>

#include "qobs/model.h"

namespace qobs {

struct HamiltonianCoupling {
  Matrix R;                   // n×n symmetric Hamiltonian matrix
  SplitComplexMatrix Lambda;  // (n_w/2)×n coupling matrix
};

struct RealizabilityReport {
  // AΘ + ΘAᵀ + B·Im(T_w)·Bᵀ  (the first identity divided by i)
  Matrix pr_residual_dyn;
  // BDᵀ − ΘCᵀ·diag_{n_y/2}(J)
  Matrix pr_residual_out;
  // ΘCᵀ + B·Im(T_w)·Dᵀ, see NonDemolitionResidual
  Matrix nondemolition_residual;
  double max_residual_dyn = 0.0;
  double max_residual_out = 0.0;
  double max_residual_nondemolition = 0.0;
  double tolerance = 0.0;
  bool is_realizable = false;
  // Present only for canonical Θ on realizable plants.
  std::optional<HamiltonianCoupling> hamiltonian_coupling;
};

/// Plant physical-realizability test. Requires D in convention form
/// [I 0] (PreconditionError otherwise). For canonical realizable plants the
/// Hamiltonian and coupling matrices are extracted into the report.
RealizabilityReport CheckPlantRealizability(const QuantumLinearSystem& sys,
                                            double tol = 1e-8);

/// Coefficient of the non-demolition condition iΘCᵀ + B·T_w·Dᵀ = 0 after
/// dividing by i. A zero residual certifies [x(t), y(s)ᵀ] = 0 for t ≥ s.
Matrix NonDemolitionResidual(const QuantumLinearSystem& sys);

/// Interleave-to-blocks permutation P with P·(a1..a2m) = (a1,a3,..,a2,a4,..).
Matrix InterleavePermutation(int size);

/// Γ = P·diag(M, .., M) with M = ½[[1, i], [1, −i]], size n_w×n_w.
Eigen::MatrixXcd GammaMatrix(int n_w);

/// R = ¼(−ΘA + AᵀΘ), Λ = −(i/2)[0 I](Γ⁻¹)ᵀBᵀΘ. Throws UnsupportedError for
/// degenerate Θ and PreconditionError for plants that fail the PR test.
HamiltonianCoupling ExtractHamiltonianCoupling(const QuantumLinearSystem& sys,
                                               double tol = 1e-8);

/// Builds the open quantum harmonic oscillator with Hamiltonian R and
/// coupling Λ (canonical Θ, quantum noise, n_y ≤ n_w output channels).
QuantumLinearSystem OpenOscillator(const Matrix& R,
                                   const SplitComplexMatrix& Lambda, int n_y);

}  // namespace qobs
