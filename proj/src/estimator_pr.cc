#include "qobs/estimator_pr.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Eigenvalues>

#include "qobs/errors.h"
#include "qobs/realizability.h"

namespace qobs {

namespace {

// D·Im(T_w)·Dᵀ, equal to diag_{n_y/2}(J) for convention-form plants.
Matrix OutputSkew(const QuantumLinearSystem& sys) {
  return sys.D() * sys.noise().SkewCoefficients() * sys.D().transpose();
}

// Im(T_w) restricted to the channels that do not reach the output.
Matrix UnobservedSkew(const QuantumLinearSystem& sys) {
  const int rest = sys.n_w() - sys.n_y();
  return sys.noise().SkewCoefficients().bottomRightCorner(rest, rest);
}

Matrix AntisymmetricPart(const Matrix& m) { return 0.5 * (m - m.transpose()); }

}  // namespace

std::string_view ToString(SpecialCase c) {
  switch (c) {
    case SpecialCase::kGeneral:
      return "general";
    case SpecialCase::kBprimeJZero:
      return "bprime_j_zero";
    case SpecialCase::kNyEqualsNw:
      return "ny_equals_nw";
    case SpecialCase::kBprimeZeroCanonical:
      return "bprime_zero_canonical";
    case SpecialCase::kBprimeZeroDegenerate:
      return "bprime_zero_degenerate";
  }
  return "unknown";
}

Matrix EstimatorPRResidual(const QuantumLinearSystem& sys, const Matrix& P) {
  const Matrix& b = sys.B();
  const Matrix& c = sys.C();
  const Matrix jy = OutputSkew(sys);
  const Matrix bp = b * sys.D().transpose();
  const Matrix pct = P * c.transpose();
  return -b * sys.noise().SkewCoefficients() * b.transpose() +
         3.0 * bp * jy * bp.transpose() + 2.0 * pct * jy * bp.transpose() +
         2.0 * bp * jy * pct.transpose() + pct * jy * pct.transpose();
}

Matrix EstimatorSkewResidual(const QuantumLinearSystem& sys, const Matrix& K) {
  const Matrix a_cl = sys.A() - K * sys.C();
  const Matrix& theta = sys.theta();
  return a_cl * theta + theta * a_cl.transpose() +
         K * OutputSkew(sys) * K.transpose();
}

SpecialCaseClassification ClassifySpecialCase(const QuantumLinearSystem& sys,
                                              const Matrix& P, double tol) {
  const Matrix& b = sys.B();
  const Matrix& c = sys.C();
  const Matrix& theta = sys.theta();
  const Matrix bp = sys.BPrime();
  const Matrix bpp = sys.BDoublePrime();
  const Matrix jy = OutputSkew(sys);
  const Matrix pct = P * c.transpose();
  const Matrix bpp_skew = bpp * UnobservedSkew(sys) * bpp.transpose();
  const bool canonical = sys.comm().canonical();
  const bool projected =
      MaxAbs(sys.comm().QuantumProjector() * c.transpose() - c.transpose()) <=
      tol;

  SpecialCaseClassification out;
  if (MaxAbs(bp) <= tol) {
    out.tag = canonical ? SpecialCase::kBprimeZeroCanonical
                        : SpecialCase::kBprimeZeroDegenerate;
    out.hypothesis_holds = true;
    if (canonical || projected) {
      out.branch = canonical ? "canonical" : "degenerate_projected";
      out.residual = bpp_skew;
      out.sign_to_general = -1.0;
      out.prescribed_gain = Matrix::Zero(sys.n(), sys.n_y());
      return out;
    }
    out.prescribed_gain = pct;
    const Matrix c_classical = c.leftCols(sys.comm().n_prime());
    const Matrix unprojected = -bpp_skew + pct * jy * pct.transpose();
    if (MaxAbs(c_classical.transpose() * jy * c_classical) <= tol) {
      out.branch = "degenerate_isotropic";
      out.residual = bpp_skew;
      out.sign_to_general = -1.0;
      out.extra.push_back({"degenerate_unprojected", unprojected});
    } else {
      out.branch = "degenerate_unprojected";
      out.residual = unprojected;
      out.sign_to_general = 1.0;
    }
    return out;
  }

  if (sys.n_y() == sys.n_w()) {
    out.tag = SpecialCase::kNyEqualsNw;
    out.hypothesis_holds =
        MaxAbs(b * sys.noise().SkewCoefficients() * b.transpose()) <= tol;
    out.prescribed_gain = b + pct;
    if (canonical || projected) {
      out.branch = canonical ? "canonical" : "degenerate_projected";
      const Matrix bbt = b * b.transpose();
      out.residual = 2.0 * P * theta * bbt + 2.0 * bbt * theta * P;
      out.sign_to_general = -1.0;
    } else {
      out.branch = "degenerate_unprojected";
      out.residual = 2.0 * pct * jy * b.transpose() +
                     2.0 * b * jy * pct.transpose() + pct * jy * pct.transpose();
      out.sign_to_general = 1.0;
    }
    return out;
  }

  if (MaxAbs(bp * jy * bp.transpose()) <= tol) {
    out.tag = SpecialCase::kBprimeJZero;
    out.hypothesis_holds = true;
    out.prescribed_gain = bp + pct;
    if (canonical || projected) {
      out.branch = canonical ? "canonical" : "degenerate_projected";
      const Matrix bpt = bp * bp.transpose();
      out.residual = bpp_skew + 2.0 * P * theta * bpt + 2.0 * bpt * theta * P;
      out.sign_to_general = -1.0;
    } else {
      out.branch = "degenerate_unprojected";
      out.residual = -bpp_skew + 2.0 * pct * jy * bp.transpose() +
                     2.0 * bp * jy * pct.transpose() +
                     pct * jy * pct.transpose();
      out.sign_to_general = 1.0;
    }
    if (sys.n() == 2 && sys.n_y() == 2 && sys.n_w() == 4 && canonical) {
      Matrix scalar(1, 1);
      scalar(0, 0) = N2SpecializedResidual(sys, P);
      out.extra.push_back({"n2_scalar", scalar});
    }
    return out;
  }

  out.tag = SpecialCase::kGeneral;
  out.branch = "general";
  out.prescribed_gain = OptimalGain(sys, P);
  return out;
}

EstimatorPRReport CheckEstimatorRealizability(
    const QuantumLinearSystem& sys, const EstimatorSynthesis& synthesis,
    double tol) {
  if (!synthesis.has_steady_state()) {
    throw PreconditionError(
        "estimator realizability needs a steady covariance (status " +
        std::string(ToString(synthesis.status)) + ")");
  }
  if (!CheckPlantRealizability(sys).is_realizable) {
    throw PreconditionError("plant is not physically realizable");
  }
  EstimatorPRReport report;
  report.tolerance = tol;
  report.general_residual = EstimatorPRResidual(sys, synthesis.P);
  report.intermediate_residual = EstimatorSkewResidual(sys, synthesis.K);
  report.general_max = MaxAbs(report.general_residual);
  report.intermediate_max = MaxAbs(report.intermediate_residual);
  report.is_realizable = report.general_max <= tol;
  report.verdicts_agree =
      report.is_realizable == (report.intermediate_max <= tol);
  report.special_case = ClassifySpecialCase(sys, synthesis.P);
  return report;
}

double N2SpecializedResidual(const QuantumLinearSystem& sys, const Matrix& P) {
  if (sys.n() != 2 || sys.n_y() != 2 || sys.n_w() != 4 ||
      !sys.comm().canonical()) {
    throw PreconditionError(
        "two-mode specialized check needs n = n_y = 2, n_w = 4 and Θ = J");
  }
  if (P.rows() != 2 || P.cols() != 2) {
    throw DimensionError("P must be 2x2");
  }
  const Matrix bp = sys.BPrime();
  if (MaxAbs(bp * SymplecticBlock() * bp.transpose()) > 1e-9) {
    throw PreconditionError("two-mode specialized check needs B′JB′ᵀ = 0");
  }
  const double b1 = bp(0, 0), b2 = bp(0, 1), b3 = bp(1, 0), b4 = bp(1, 1);
  const double p1 = P(0, 0), p2 = 0.5 * (P(0, 1) + P(1, 0)), p4 = P(1, 1);
  return 2.0 * p1 * (-b4 * b4 - b3 * b3) +
         2.0 * p2 * (2.0 * b1 * b3 + 2.0 * b2 * b4) +
         2.0 * p4 * (-b1 * b1 - b2 * b2) - sys.BDoublePrime().determinant();
}

SkewCanonicalForm DecomposeSkew(const Matrix& S) {
  const int n = static_cast<int>(S.rows());
  if (S.cols() != n) throw DimensionError("skew matrix must be square");
  const double scale = std::max(1.0, MaxAbs(S));
  if (MaxAbs(S + S.transpose()) > 1e-9 * scale) {
    throw DomainError("matrix is not antisymmetric");
  }
  const Matrix skew = AntisymmetricPart(S);
  const Eigen::RealSchur<Matrix> schur(skew);
  if (schur.info() != Eigen::Success) {
    throw SynthesisError("real Schur decomposition failed");
  }
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();

  std::vector<Vector> block_cols;
  std::vector<double> mu;
  std::vector<Vector> zero_cols;
  for (int i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      double m = 0.5 * (t(i, i + 1) - t(i + 1, i));
      Vector q1 = u.col(i);
      Vector q2 = u.col(i + 1);
      if (m < 0.0) {
        std::swap(q1, q2);
        m = -m;
      }
      block_cols.push_back(q1);
      block_cols.push_back(q2);
      mu.push_back(m);
      i += 2;
    } else {
      zero_cols.push_back(u.col(i));
      i += 1;
    }
  }
  SkewCanonicalForm form;
  form.Q.resize(n, n);
  int col = 0;
  for (const Vector& v : block_cols) form.Q.col(col++) = v;
  for (const Vector& v : zero_cols) form.Q.col(col++) = v;
  for (std::size_t k = 0; k + 1 < zero_cols.size(); k += 2) mu.push_back(0.0);
  form.mu = std::move(mu);
  return form;
}

Matrix FactorVacuumCoupling(const Matrix& target, int max_columns,
                            double tol) {
  const int n = static_cast<int>(target.rows());
  if (target.cols() != n) throw DimensionError("target must be square");
  const double scale = std::max(1.0, MaxAbs(target));
  if (MaxAbs(target + target.transpose()) > 1e-9 * scale) {
    throw DomainError("vacuum coupling target is not antisymmetric");
  }
  const Matrix skew = AntisymmetricPart(target);

  std::vector<Vector> columns;
  auto add_block = [&](double m, const Vector& q1, const Vector& q2) {
    if (!std::isfinite(m)) {
      throw InfeasibleAugmentation("non-finite canonical value in defect");
    }
    if (std::abs(m) <= tol * scale) return;
    // A negative value flips orientation by swapping the pair.
    const double root = std::sqrt(std::abs(m));
    columns.push_back(root * (m > 0.0 ? q1 : q2));
    columns.push_back(root * (m > 0.0 ? q2 : q1));
  };

  Matrix aligned = Matrix::Zero(n, n);
  if (n % 2 == 0) {
    for (int k = 0; k < n / 2; ++k) {
      aligned(2 * k, 2 * k + 1) = skew(2 * k, 2 * k + 1);
      aligned(2 * k + 1, 2 * k) = skew(2 * k + 1, 2 * k);
    }
  }
  if (n % 2 == 0 && MaxAbs(skew - aligned) <= tol * scale) {
    const Matrix eye = Matrix::Identity(n, n);
    for (int k = 0; k < n / 2; ++k) {
      add_block(skew(2 * k, 2 * k + 1), eye.col(2 * k), eye.col(2 * k + 1));
    }
  } else {
    const SkewCanonicalForm form = DecomposeSkew(skew);
    for (std::size_t k = 0; k < form.mu.size(); ++k) {
      add_block(form.mu[k], form.Q.col(2 * k), form.Q.col(2 * k + 1));
    }
  }

  const int needed = static_cast<int>(columns.size());
  if (needed > max_columns) {
    throw InfeasibleAugmentation(
        "defect needs " + std::to_string(needed) + " vacuum channels, only " +
        std::to_string(max_columns) + " allowed");
  }
  Matrix b(n, needed);
  for (int j = 0; j < needed; ++j) b.col(j) = columns[j];
  const Matrix recon = b * BlockDiagJ(needed / 2) * b.transpose();
  if (MaxAbs(recon - skew) > 1e-9 * scale) {
    throw InfeasibleAugmentation("vacuum coupling does not reproduce the defect");
  }
  return b;
}

CoherentObserver MakeCoherentObserver(const QuantumLinearSystem& sys,
                                      const EstimatorSynthesis& synthesis,
                                      std::optional<int> n_v,
                                      const SolverConfig& config, double tol) {
  if (!synthesis.has_steady_state()) {
    throw PreconditionError("coherent observer needs a steady estimator");
  }
  CoherentObserver obs;
  obs.K = synthesis.K;
  obs.A_obs = sys.A() - obs.K * sys.C();
  obs.hurwitz = IsHurwitz(obs.A_obs);
  if (!obs.hurwitz) {
    throw PreconditionError("A − KC is not Hurwitz; the observer cannot track");
  }
  const Matrix defect = EstimatorSkewResidual(sys, obs.K);
  if (MaxAbs(defect) <= tol) {
    throw PreconditionError("estimator is already physically realizable");
  }
  const int max_columns = n_v.value_or(sys.n() + sys.n() % 2);
  if (max_columns < 0 || max_columns % 2 != 0) {
    throw DimensionError("vacuum channel count must be even");
  }
  obs.b = FactorVacuumCoupling(-defect, max_columns);
  obs.n_v = static_cast<int>(obs.b.cols());
  obs.residual_norm =
      MaxAbs(defect + obs.b * BlockDiagJ(obs.n_v / 2) * obs.b.transpose());

  const Matrix vacuum = obs.b * obs.b.transpose();
  const EstimatorSynthesis augmented =
      SynthesizeEstimator(sys, synthesis.P0, config, vacuum);
  obs.P_tilde = augmented.P;
  obs.J_tilde = augmented.J;
  obs.p_tilde_status = augmented.status;
  obs.K_tilde = augmented.K;

  FlowOptions fixed;
  fixed.gain = GainPolicy::Fixed(obs.K);
  fixed.extra_noise = vacuum;
  fixed.record = false;
  fixed.steady_tol = config.tol;
  fixed.steady_window = config.steady_window;
  obs.P_fixed_gain =
      IntegrateRiccati(sys, synthesis.P0, config.horizon, config.dt, fixed).P;

  obs.J = synthesis.J;
  obs.trace_not_decreased = obs.J_tilde >= obs.J - 1e-9;
  return obs;
}

}  // namespace qobs
