#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "qobs/model.h"

namespace qobs {

/// How the estimator gain is formed while integrating the error covariance.
struct GainPolicy {
  enum class Mode { kOptimal, kFixed };

  Mode mode = Mode::kOptimal;
  // kOptimal: added to the optimal gain (zero-sized means no offset).
  // kFixed: the constant gain itself.
  Matrix matrix;

  static GainPolicy Optimal() { return {}; }
  static GainPolicy OptimalPlus(Matrix offset) {
    return {Mode::kOptimal, std::move(offset)};
  }
  static GainPolicy Fixed(Matrix gain) { return {Mode::kFixed, std::move(gain)}; }
};

/// Right-hand side used for the covariance flow.
enum class RiccatiForm {
  // Ṗ = (A−KC)P + P(A−KC)ᵀ + (B−KD)(B−KD)ᵀ with K from the gain policy.
  kGainFeedback,
  // Ṗ = (A−B′C)P + P(A−B′C)ᵀ − PCᵀCP + B″B″ᵀ; only valid for D = [I 0]
  // and the optimal gain.
  kSubstituted,
};

enum class SynthesisStatus {
  kConverged,
  kNonConvergent,  // horizon reached before the steady-state test passed
  kNonUnique,      // steady state depends on the initial covariance
  kDiverged,       // covariance became non-finite or unbounded
  kInaccurate,     // dt and dt/2 trajectories disagree beyond tolerance
};

std::string_view ToString(SynthesisStatus status);

struct SolverConfig {
  double dt = 1e-3;
  double horizon = 2000.0;
  // Steady state: ‖Ṗ‖∞ < tol for `steady_window` consecutive steps.
  double tol = 1e-10;
  int steady_window = 100;
  // Re-run from I, 2I, diag(1,2,..) and flag spread above uniqueness_tol.
  bool check_uniqueness = true;
  double uniqueness_tol = 1e-6;
  // Max deviation between dt and dt/2 trajectories over
  // [0, min(horizon, step_check_window)].
  double step_check_window = 10.0;
  double step_check_tol = 1e-7;
  // Keep every n-th step in the trajectory (the final step is always kept).
  int record_stride = 1;
};

struct TrajectorySample {
  double t = 0.0;
  Matrix P;
  Matrix K;
};

struct EstimatorSynthesis {
  SynthesisStatus status = SynthesisStatus::kNonConvergent;
  std::vector<TrajectorySample> trajectory;
  double dt = 0.0;
  Matrix P0;
  // Last covariance and gain; the steady state when converged.
  Matrix P;
  Matrix K;
  double J = 0.0;  // Tr(P)
  Matrix A_cl;     // A − K C
  bool hurwitz = false;
  double residual = 0.0;  // ‖Ṗ‖∞ at the final P
  double t_final = 0.0;
  double step_halving_deviation = 0.0;
  double uniqueness_spread = 0.0;

  bool has_steady_state() const {
    return status == SynthesisStatus::kConverged ||
           status == SynthesisStatus::kNonUnique;
  }
};

/// K = (BDᵀ + PCᵀ)(DDᵀ)⁻¹. Throws SynthesisError when DDᵀ is singular.
Matrix OptimalGain(const QuantumLinearSystem& sys, const Matrix& P);

/// (A−KC)P + P(A−KC)ᵀ + (B−KD)(B−KD)ᵀ + extra.
Matrix RiccatiRhs(const QuantumLinearSystem& sys, const Matrix& P,
                  const Matrix& K, const Matrix& extra_noise = Matrix());

/// (A−B′C)P + P(A−B′C)ᵀ − PCᵀCP + B″B″ᵀ + extra.
Matrix SubstitutedRiccatiRhs(const QuantumLinearSystem& sys, const Matrix& P,
                             const Matrix& extra_noise = Matrix());

/// One RK4 step of the covariance flow with a fixed gain K; the result is
/// re-symmetrized. Throws PreconditionError for non-symmetric P.
Matrix RiccatiStep(const QuantumLinearSystem& sys, const Matrix& P,
                   const Matrix& K, double dt);

struct RiccatiRun {
  std::vector<TrajectorySample> trajectory;
  Matrix P;
  Matrix K;
  double residual = 0.0;
  double t_final = 0.0;
  bool steady = false;
  bool diverged = false;
};

struct FlowOptions {
  GainPolicy gain = GainPolicy::Optimal();
  RiccatiForm form = RiccatiForm::kGainFeedback;
  Matrix extra_noise;  // constant term added to the vector field
  int record_stride = 1;
  bool record = true;
  // When positive, stop once ‖Ṗ‖∞ < steady_tol for steady_window steps.
  double steady_tol = 0.0;
  int steady_window = 100;
};

/// Covariance vector field of the estimation error for a gain policy. Copies
/// the system and caches the gain-independent terms.
class RiccatiFlow {
 public:
  RiccatiFlow(const QuantumLinearSystem& sys, FlowOptions options);

  Matrix Gain(const Matrix& P) const;
  Matrix operator()(double t, const Matrix& P) const;
  /// One RK4 step followed by re-symmetrization; `pdot` may carry f(P).
  Matrix Step(const Matrix& P, double dt, const Matrix* pdot = nullptr) const;

 private:
  QuantumLinearSystem sys_;
  FlowOptions options_;
  Matrix bdt_;
  bool unit_ddt_ = true;
  Eigen::FullPivLU<Matrix> ddt_lu_;
  Matrix a_sub_;
  Matrix ctc_;
  Matrix constant_;
};

/// Integrates the covariance flow from P0 over [0, horizon] with step dt.
RiccatiRun IntegrateRiccati(const QuantumLinearSystem& sys, const Matrix& P0,
                            double horizon, double dt,
                            const FlowOptions& options = {});

/// Steady-state least-mean-squares estimator for a physically realizable
/// plant (PreconditionError otherwise). `extra_noise` adds a constant
/// covariance term to the flow (vacuum channels of a coherent observer).
EstimatorSynthesis SolveSteadyRiccati(const QuantumLinearSystem& sys,
                                      const Matrix& P0,
                                      const SolverConfig& config = {},
                                      const Matrix& extra_noise = Matrix());

/// Same engine without the realizability precondition; used by the classical
/// reduction and the coherent-observer covariance.
EstimatorSynthesis SynthesizeEstimator(const QuantumLinearSystem& sys,
                                       const Matrix& P0,
                                       const SolverConfig& config,
                                       const Matrix& extra_noise = Matrix());

/// Textbook Kalman–Bucy filter through the same engine: Θ = 0, F_w = I.
EstimatorSynthesis ClassicalKalmanReduce(const Matrix& A, const Matrix& B,
                                         const Matrix& C, const Matrix& D,
                                         const Matrix& Sigma0,
                                         const SolverConfig& config = {});

struct InnovationsAudit {
  std::vector<double> t;
  std::vector<Matrix> Gamma11;
  std::vector<Matrix> Gamma12;
  std::vector<Matrix> Gamma22;
  double max_offdiag_drift = 0.0;       // max ‖Γ₁₂(t)‖∞
  double max_gamma11_deviation = 0.0;   // max ‖Γ₁₁(t) − t·DDᵀ‖∞
  double max_gamma22_deviation = 0.0;   // max ‖Γ₂₂(t) − P(t)‖∞ (when comparable)
};

/// Integrates the covariance of (r, e) with r the innovations process from
/// Γ₁₁ = 0, Γ₁₂ = 0, Γ₂₂ = P(0). The gain is the optimal gain evaluated at
/// Γ₂₂ plus `gain_offset` (empty for none). Γ₂₂ is compared with the
/// synthesis trajectory where its samples share the audit's time grid.
InnovationsAudit AuditInnovations(const QuantumLinearSystem& sys,
                                  const EstimatorSynthesis& synthesis,
                                  double horizon,
                                  const Matrix& gain_offset = Matrix());

/// All eigenvalues strictly in the open left half plane.
bool IsHurwitz(const Matrix& m);

/// Symmetry and PSD check with the given tolerance (eigenvalue floor −tol).
bool IsSymmetricPsd(const Matrix& m, double tol = 1e-9);

}  // namespace qobs
