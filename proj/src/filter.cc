#include "qobs/filter.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "qobs/errors.h"
#include "qobs/ode.h"
#include "qobs/realizability.h"

namespace qobs {

namespace {

constexpr double kDivergenceBound = 1e12;
constexpr double kSymmetryTol = 1e-9;

long StepCount(double horizon, double dt) {
  if (!(dt > 0.0)) throw DomainError("step size must be positive");
  if (!(horizon >= 0.0)) throw DomainError("horizon must be nonnegative");
  return static_cast<long>(std::ceil(horizon / dt - 1e-9));
}

void Symmetrize(Matrix& p) { p = 0.5 * (p + p.transpose()).eval(); }

void RequireCovariance(const QuantumLinearSystem& sys, const Matrix& p) {
  if (p.rows() != sys.n() || p.cols() != sys.n()) {
    throw DimensionError("covariance must be " + std::to_string(sys.n()) +
                         "x" + std::to_string(sys.n()));
  }
  if (MaxAbs(p - p.transpose()) > kSymmetryTol) {
    throw PreconditionError("covariance is not symmetric");
  }
}

// I, 2I and diag(1, 2, 1, 2, ..).
std::vector<Matrix> UniquenessSeeds(int n) {
  Matrix alternating = Matrix::Identity(n, n);
  for (int i = 1; i < n; i += 2) alternating(i, i) = 2.0;
  return {Matrix::Identity(n, n), 2.0 * Matrix::Identity(n, n), alternating};
}

}  // namespace

RiccatiFlow::RiccatiFlow(const QuantumLinearSystem& sys, FlowOptions options)
    : sys_(sys), options_(std::move(options)) {
  const Matrix& d = sys.D();
  bdt_ = sys.B() * d.transpose();
  const Matrix ddt = d * d.transpose();
  unit_ddt_ = ddt.isIdentity(0.0);
  if (!unit_ddt_) {
    ddt_lu_ = ddt.fullPivLu();
    if (!ddt_lu_.isInvertible()) {
      throw SynthesisError("DDᵀ is singular; the optimal gain is undefined");
    }
  }
  const bool has_extra = options_.extra_noise.size() != 0;
  if (has_extra && (options_.extra_noise.rows() != sys.n() ||
                    options_.extra_noise.cols() != sys.n())) {
    throw DimensionError("extra noise term must be n×n");
  }
  if (options_.form == RiccatiForm::kSubstituted) {
    if (!sys.HasConventionD()) {
      throw PreconditionError("substituted Riccati form needs D = [I 0]");
    }
    const Matrix bp = sys.BPrime();
    const Matrix bpp = sys.BDoublePrime();
    a_sub_ = sys.A() - bp * sys.C();
    ctc_ = sys.C().transpose() * sys.C();
    constant_ = bpp * bpp.transpose();
  } else {
    constant_ = Matrix::Zero(sys.n(), sys.n());
  }
  if (has_extra) constant_ += options_.extra_noise;
  const Matrix& gain = options_.gain.matrix;
  if (options_.gain.mode == GainPolicy::Mode::kFixed) {
    if (gain.rows() != sys.n() || gain.cols() != sys.n_y()) {
      throw DimensionError("fixed gain must be n×n_y");
    }
  } else if (gain.size() != 0 &&
             (gain.rows() != sys.n() || gain.cols() != sys.n_y())) {
    throw DimensionError("gain offset must be n×n_y");
  }
}

Matrix RiccatiFlow::Gain(const Matrix& p) const {
  if (options_.gain.mode == GainPolicy::Mode::kFixed) {
    return options_.gain.matrix;
  }
  Matrix k = bdt_ + p * sys_.C().transpose();
  if (!unit_ddt_) k = ddt_lu_.solve(k.transpose()).transpose();
  if (options_.gain.matrix.size() != 0) k += options_.gain.matrix;
  return k;
}

Matrix RiccatiFlow::operator()(double /*t*/, const Matrix& p) const {
  if (options_.form == RiccatiForm::kSubstituted) {
    return a_sub_ * p + p * a_sub_.transpose() - p * ctc_ * p + constant_;
  }
  const Matrix k = Gain(p);
  const Matrix a_cl = sys_.A() - k * sys_.C();
  const Matrix b_cl = sys_.B() - k * sys_.D();
  return a_cl * p + p * a_cl.transpose() + b_cl * b_cl.transpose() + constant_;
}

Matrix RiccatiFlow::Step(const Matrix& p, double dt, const Matrix* pdot) const {
  Matrix next = Rk4Step(*this, 0.0, p, dt, pdot);
  Symmetrize(next);
  return next;
}

std::string_view ToString(SynthesisStatus status) {
  switch (status) {
    case SynthesisStatus::kConverged:
      return "converged";
    case SynthesisStatus::kNonConvergent:
      return "non_convergent";
    case SynthesisStatus::kNonUnique:
      return "non_unique";
    case SynthesisStatus::kDiverged:
      return "diverged";
    case SynthesisStatus::kInaccurate:
      return "inaccurate";
  }
  return "unknown";
}

Matrix OptimalGain(const QuantumLinearSystem& sys, const Matrix& P) {
  RequireCovariance(sys, P);
  const FlowOptions options;
  return RiccatiFlow(sys, options).Gain(P);
}

Matrix RiccatiRhs(const QuantumLinearSystem& sys, const Matrix& P,
                  const Matrix& K, const Matrix& extra_noise) {
  FlowOptions options;
  options.gain = GainPolicy::Fixed(K);
  options.extra_noise = extra_noise;
  return RiccatiFlow(sys, options)(0.0, P);
}

Matrix SubstitutedRiccatiRhs(const QuantumLinearSystem& sys, const Matrix& P,
                             const Matrix& extra_noise) {
  FlowOptions options;
  options.form = RiccatiForm::kSubstituted;
  options.extra_noise = extra_noise;
  return RiccatiFlow(sys, options)(0.0, P);
}

Matrix RiccatiStep(const QuantumLinearSystem& sys, const Matrix& P,
                   const Matrix& K, double dt) {
  if (!(dt > 0.0)) throw DomainError("step size must be positive");
  RequireCovariance(sys, P);
  FlowOptions options;
  options.gain = GainPolicy::Fixed(K);
  const RiccatiFlow field(sys, options);
  Matrix next = Rk4Step(field, 0.0, P, dt);
  Symmetrize(next);
  return next;
}

RiccatiRun IntegrateRiccati(const QuantumLinearSystem& sys, const Matrix& P0,
                            double horizon, double dt,
                            const FlowOptions& options) {
  RequireCovariance(sys, P0);
  const long steps = StepCount(horizon, dt);
  const int stride = std::max(1, options.record_stride);
  const RiccatiFlow field(sys, options);

  RiccatiRun run;
  Matrix p = P0;
  Symmetrize(p);
  int calm_steps = 0;
  long i = 0;
  for (;; ++i) {
    const double t = static_cast<double>(i) * dt;
    const Matrix pdot = field(t, p);
    run.residual = MaxAbs(pdot);
    if (options.record && (i % stride == 0)) {
      run.trajectory.push_back({t, p, field.Gain(p)});
    }
    if (!p.allFinite() || MaxAbs(p) > kDivergenceBound) {
      run.diverged = true;
      break;
    }
    if (options.steady_tol > 0.0) {
      calm_steps = run.residual < options.steady_tol ? calm_steps + 1 : 0;
      if (calm_steps >= options.steady_window) {
        run.steady = true;
        break;
      }
    }
    if (i == steps) break;
    p = Rk4Step(field, t, p, dt, &pdot);
    Symmetrize(p);
  }
  run.t_final = static_cast<double>(i) * dt;
  run.P = p;
  run.K = field.Gain(p);
  if (options.record &&
      (run.trajectory.empty() || run.trajectory.back().t != run.t_final)) {
    run.trajectory.push_back({run.t_final, p, run.K});
  }
  return run;
}

EstimatorSynthesis SynthesizeEstimator(const QuantumLinearSystem& sys,
                                       const Matrix& P0,
                                       const SolverConfig& config,
                                       const Matrix& extra_noise) {
  FlowOptions options;
  options.extra_noise = extra_noise;
  options.record_stride = config.record_stride;
  options.steady_tol = config.tol;
  options.steady_window = config.steady_window;
  RiccatiRun main = IntegrateRiccati(sys, P0, config.horizon, config.dt, options);

  EstimatorSynthesis out;
  out.dt = config.dt;
  out.P0 = P0;
  out.trajectory = std::move(main.trajectory);
  out.P = main.P;
  out.K = main.K;
  out.J = main.P.trace();
  out.residual = main.residual;
  out.t_final = main.t_final;
  out.A_cl = sys.A() - main.K * sys.C();
  out.hurwitz = main.P.allFinite() && IsHurwitz(out.A_cl);

  if (main.diverged) {
    out.status = SynthesisStatus::kDiverged;
    return out;
  }
  if (!main.steady) {
    out.status = SynthesisStatus::kNonConvergent;
    return out;
  }
  out.status = SynthesisStatus::kConverged;

  FlowOptions quiet = options;
  quiet.record = false;

  // Step-halving check: max deviation over a short window, on the coarse grid.
  {
    const RiccatiFlow field(sys, quiet);
    const double span = std::min(config.horizon, config.step_check_window);
    const long coarse_steps = StepCount(span, config.dt);
    const double half = 0.5 * config.dt;
    Matrix coarse = P0;
    Matrix fine = P0;
    for (long i = 0; i < coarse_steps; ++i) {
      coarse = field.Step(coarse, config.dt);
      fine = field.Step(field.Step(fine, half), half);
      const double deviation = MaxAbs(coarse - fine);
      if (!std::isfinite(deviation)) {
        out.step_halving_deviation = std::numeric_limits<double>::infinity();
        break;
      }
      out.step_halving_deviation =
          std::max(out.step_halving_deviation, deviation);
    }
    if (!(out.step_halving_deviation <= config.step_check_tol)) {
      out.status = SynthesisStatus::kInaccurate;
      return out;
    }
  }

  if (config.check_uniqueness) {
    for (const Matrix& seed : UniquenessSeeds(sys.n())) {
      if (seed == P0) continue;
      const RiccatiRun probe =
          IntegrateRiccati(sys, seed, config.horizon, config.dt, quiet);
      if (!probe.steady) continue;
      out.uniqueness_spread =
          std::max(out.uniqueness_spread, MaxAbs(probe.P - main.P));
    }
    if (out.uniqueness_spread > config.uniqueness_tol) {
      out.status = SynthesisStatus::kNonUnique;
    }
  }
  return out;
}

EstimatorSynthesis SolveSteadyRiccati(const QuantumLinearSystem& sys,
                                      const Matrix& P0,
                                      const SolverConfig& config,
                                      const Matrix& extra_noise) {
  if (!CheckPlantRealizability(sys).is_realizable) {
    throw PreconditionError(
        "estimator synthesis requires a physically realizable plant");
  }
  return SynthesizeEstimator(sys, P0, config, extra_noise);
}

EstimatorSynthesis ClassicalKalmanReduce(const Matrix& A, const Matrix& B,
                                         const Matrix& C, const Matrix& D,
                                         const Matrix& Sigma0,
                                         const SolverConfig& config) {
  const int n = static_cast<int>(A.rows());
  const QuantumLinearSystem sys(
      A, B, C, D, CommutationSpec::DegenerateCanonical(n, n),
      NoiseSpec::Classical(static_cast<int>(B.cols())));
  return SynthesizeEstimator(sys, Sigma0, config);
}

InnovationsAudit AuditInnovations(const QuantumLinearSystem& sys,
                                  const EstimatorSynthesis& synthesis,
                                  double horizon, const Matrix& gain_offset) {
  const int n = sys.n();
  const int ny = sys.n_y();
  const double dt = synthesis.dt;
  const long steps = StepCount(horizon, dt);
  FlowOptions options;
  options.gain = GainPolicy::OptimalPlus(gain_offset);
  const RiccatiFlow covariance(sys, options);
  const Matrix& a = sys.A();
  const Matrix& b = sys.B();
  const Matrix& c = sys.C();
  const Matrix& d = sys.D();
  const Matrix ddt = d * d.transpose();

  // Γ = [[Γ₁₁, Γ₁₂], [Γ₁₂ᵀ, Γ₂₂]] integrated as one symmetric matrix.
  auto field = [&](double /*t*/, const Matrix& g) -> Matrix {
    const Matrix g12 = g.topRightCorner(ny, n);
    const Matrix g22 = g.bottomRightCorner(n, n);
    const Matrix k = covariance.Gain(g22);
    const Matrix a_cl = a - k * c;
    const Matrix b_cl = b - k * d;
    Matrix out(ny + n, ny + n);
    out.topLeftCorner(ny, ny) =
        c * g12.transpose() + g12 * c.transpose() + ddt;
    out.topRightCorner(ny, n) =
        c * g22 + g12 * a_cl.transpose() + d * b_cl.transpose();
    out.bottomLeftCorner(n, ny) = out.topRightCorner(ny, n).transpose();
    out.bottomRightCorner(n, n) =
        a_cl * g22 + g22 * a_cl.transpose() + b_cl * b_cl.transpose();
    return out;
  };

  InnovationsAudit audit;
  Matrix g = Matrix::Zero(ny + n, ny + n);
  g.bottomRightCorner(n, n) = synthesis.P0;
  const long stride = std::max(1L, steps / 1000);
  std::size_t next_sample = 0;
  const auto& traj = synthesis.trajectory;
  for (long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const Matrix g11 = g.topLeftCorner(ny, ny);
    const Matrix g12 = g.topRightCorner(ny, n);
    const Matrix g22 = g.bottomRightCorner(n, n);
    audit.max_offdiag_drift = std::max(audit.max_offdiag_drift, MaxAbs(g12));
    audit.max_gamma11_deviation =
        std::max(audit.max_gamma11_deviation, MaxAbs(g11 - t * ddt));
    while (next_sample < traj.size() && traj[next_sample].t < t - 0.5 * dt) {
      ++next_sample;
    }
    if (next_sample < traj.size() &&
        std::abs(traj[next_sample].t - t) < 0.5 * dt) {
      audit.max_gamma22_deviation = std::max(
          audit.max_gamma22_deviation, MaxAbs(g22 - traj[next_sample].P));
    }
    if (i % stride == 0 || i == steps) {
      audit.t.push_back(t);
      audit.Gamma11.push_back(g11);
      audit.Gamma12.push_back(g12);
      audit.Gamma22.push_back(g22);
    }
    if (i == steps) break;
    g = Rk4Step(field, t, g, dt);
    Symmetrize(g);
  }
  return audit;
}

bool IsHurwitz(const Matrix& m) {
  if (m.size() == 0) return true;
  const Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) return false;
  return (es.eigenvalues().real().array() < 0.0).all();
}

bool IsSymmetricPsd(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (MaxAbs(m - m.transpose()) > tol) return false;
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()),
                                                 Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace qobs
