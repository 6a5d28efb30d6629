#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qobs/filter.h"
#include "qobs/model.h"

namespace qobs {

enum class SpecialCase {
  kGeneral,
  kBprimeJZero,           // B′·diag(J)·B′ᵀ = 0
  kNyEqualsNw,            // n_y = n_w, D = I
  kBprimeZeroCanonical,   // B′ = 0, canonical Θ
  kBprimeZeroDegenerate,  // B′ = 0, degenerate Θ
};

std::string_view ToString(SpecialCase c);

/// Estimator realizability residual for a realizable plant and covariance P:
///   −B·diag(J)·Bᵀ + 3B′·diag(J)·B′ᵀ + 2PCᵀ·diag(J)·B′ᵀ
///   + 2B′·diag(J)·CP + PCᵀ·diag(J)·CP.
Matrix EstimatorPRResidual(const QuantumLinearSystem& sys, const Matrix& P);

/// The same condition before substituting plant realizability:
///   (A−KC)Θ + Θ(A−KC)ᵀ + K·D·Im(T_w)·Dᵀ·Kᵀ.
Matrix EstimatorSkewResidual(const QuantumLinearSystem& sys, const Matrix& K);

struct NamedResidual {
  std::string name;
  Matrix value;
};

struct SpecialCaseClassification {
  SpecialCase tag = SpecialCase::kGeneral;
  // Sub-branch label, e.g. "canonical", "degenerate_projected",
  // "degenerate_unprojected", "degenerate_isotropic".
  std::string branch;
  // Whether the special case's hypothesis holds; for kNyEqualsNw this is
  // B·diag(J)·Bᵀ = 0, without which the specialized form does not apply.
  bool hypothesis_holds = false;
  // Specialized residual; equals sign_to_general × general residual when the
  // hypothesis holds.
  std::optional<Matrix> residual;
  double sign_to_general = 1.0;
  // Gain prescribed by the special case (B′ + PCᵀ, PCᵀ or 0).
  std::optional<Matrix> prescribed_gain;
  std::vector<NamedResidual> extra;
};

/// Detects which special case applies and evaluates its residual at P. Order:
/// B′ = 0, then n_y = n_w, then B′·diag(J)·B′ᵀ = 0, else general.
SpecialCaseClassification ClassifySpecialCase(const QuantumLinearSystem& sys,
                                              const Matrix& P,
                                              double tol = 1e-9);

struct EstimatorPRReport {
  Matrix general_residual;       // EstimatorPRResidual at the steady P
  Matrix intermediate_residual;  // EstimatorSkewResidual at the steady K
  double general_max = 0.0;
  double intermediate_max = 0.0;
  double tolerance = 0.0;
  bool is_realizable = false;  // decided by the general residual only
  bool verdicts_agree = false;
  SpecialCaseClassification special_case;
};

/// Precondition: the plant is realizable and the synthesis reached a steady
/// state (converged or P0-dependent); otherwise PreconditionError.
EstimatorPRReport CheckEstimatorRealizability(
    const QuantumLinearSystem& sys, const EstimatorSynthesis& synthesis,
    double tol = 1e-8);

/// n = n_y = 2, n_w = 4, Θ = J, B′JB′ᵀ = 0 only; with B′ = [[b1,b2],[b3,b4]]
/// and P = [[p1,p2],[p2,p4]] returns
///   2p1(−b4²−b3²) + 2p2(2b1b3+2b2b4) + 2p4(−b1²−b2²) − det(B″).
double N2SpecializedResidual(const QuantumLinearSystem& sys, const Matrix& P);

/// Real skew canonical form S = Q·(⊕ μ_k J)·Qᵀ with Q orthogonal and μ_k ≥ 0.
/// Odd dimensions and zero blocks appear as μ_k = 0.
struct SkewCanonicalForm {
  Matrix Q;
  std::vector<double> mu;  // one value per 2×2 block, ordered as in Q
};

SkewCanonicalForm DecomposeSkew(const Matrix& S);

/// b with b·diag(J)·bᵀ = target for a real antisymmetric target. Zero blocks
/// are trimmed; a J-aligned block diagonal target gives b = ⊕ √s_k I₂.
/// Throws InfeasibleAugmentation when more than max_columns are needed.
Matrix FactorVacuumCoupling(const Matrix& target, int max_columns,
                            double tol = 1e-12);

struct CoherentObserver {
  Matrix A_obs;  // A − KC
  Matrix K;
  Matrix b;      // n×n_v vacuum coupling
  int n_v = 0;
  // Steady covariance of the augmented Riccati flow (with bbᵀ) and its trace.
  Matrix P_tilde;
  double J_tilde = 0.0;
  SynthesisStatus p_tilde_status = SynthesisStatus::kNonConvergent;
  // Gain consistent with P_tilde, B′ + P̃Cᵀ.
  Matrix K_tilde;
  // Steady error covariance of the observer with the original gain K.
  Matrix P_fixed_gain;
  double residual_norm = 0.0;  // augmented realizability identity, max-abs
  bool hurwitz = false;
  double J = 0.0;  // trace of the unaugmented estimator covariance
  bool trace_not_decreased = false;
};

/// Adds vacuum noise inputs b·dv to a non-realizable estimator so that
/// (A−KC)Θ + Θ(A−KC)ᵀ + K·diag(J)·Kᵀ + b·diag(J)·bᵀ = 0.
/// n_v defaults to n rounded up to even. Preconditions: estimator not already
/// realizable and A − KC Hurwitz (PreconditionError).
CoherentObserver MakeCoherentObserver(const QuantumLinearSystem& sys,
                                      const EstimatorSynthesis& synthesis,
                                      std::optional<int> n_v = std::nullopt,
                                      const SolverConfig& config = {},
                                      double tol = 1e-8);

}  // namespace qobs
