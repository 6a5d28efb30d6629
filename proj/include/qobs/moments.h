#pragma once

#include <functional>
#include <vector>

#include "qobs/filter.h"
#include "qobs/model.h"

namespace qobs {

/// Symmetrized first and second moments of z = (x, x̂).
struct JointMomentState {
  Vector mean;   // 2n
  Matrix Sigma;  // 2n×2n
};

/// dz = A z dt + B [dw; dv] for the plant driving its estimator.
struct JointSystem {
  Matrix A;  // [[A, 0], [KC, A − KC]]
  Matrix B;  // [[B, 0], [KD, b]]
};

/// Assembles the joint plant/estimator system. An empty `b` adds no vacuum
/// channels.
JointSystem AssembleJoint(const QuantumLinearSystem& sys, const Matrix& K,
                          const Matrix& b = Matrix());

/// Independent initial states: Σ = diag(P0, 0) so that the error covariance
/// starts at P0. Empty means default to zero.
JointMomentState InitialJointState(const Matrix& P0,
                                   const Vector& plant_mean = Vector(),
                                   const Vector& estimate_mean = Vector());

struct MomentSample {
  double t = 0.0;
  Vector mean;
  Matrix Sigma;
};

struct MomentTrajectory {
  std::vector<MomentSample> samples;
};

using JointField = std::function<JointSystem(double t)>;
/// Called after every step (and at t = 0) with the step index.
using MomentObserver =
    std::function<void(long step, double t, const JointMomentState& state)>;

struct PropagationOptions {
  int record_stride = 1;  // the final step is always recorded
  MomentObserver observer;
};

/// RK4 propagation of d⟨z⟩/dt = A⟨z⟩ and Σ̇ = AΣ + ΣAᵀ + BBᵀ.
MomentTrajectory PropagateMoments(const JointSystem& joint,
                                  const JointMomentState& state0,
                                  double horizon, double dt,
                                  const PropagationOptions& options = {});

/// Time-varying variant; the field is evaluated at t, t + dt/2 and t + dt.
MomentTrajectory PropagateMoments(const JointField& joint,
                                  const JointMomentState& state0,
                                  double horizon, double dt,
                                  const PropagationOptions& options = {});

/// E Σ Eᵀ with E = [I −I]: covariance of e = x − x̂.
Matrix ErrorCovariance(const Matrix& Sigma);

/// Error covariance at time t, interpolating linearly between recorded
/// samples. Throws DomainError when t lies outside the trajectory.
Matrix ExtractErrorCovariance(const MomentTrajectory& trajectory, double t);

/// Gain K(t) from a covariance flow advanced lazily on a fixed node grid.
/// Queries must lie on the grid and never step back more than two nodes.
class GainSchedule {
 public:
  GainSchedule(const QuantumLinearSystem& sys, const Matrix& P0,
               double node_dt, FlowOptions options);

  const Matrix& Gain(double t);
  const Matrix& Covariance(double t);
  double node_dt() const { return node_dt_; }

 private:
  struct Node {
    long index;
    Matrix P;
    Matrix K;
  };
  const Node& At(double t);

  RiccatiFlow flow_;
  double node_dt_;
  std::vector<Node> window_;  // the last few nodes, ascending
};

struct OracleOptions {
  GainPolicy gain = GainPolicy::Optimal();
  Matrix vacuum_coupling;  // b; empty for none
  Vector initial_mean;     // plant mean ⟨x(0)⟩; empty for zero
  double horizon = 10.0;
  double dt = 1e-3;
  int record_stride = 1;
};

struct OracleReport {
  MomentTrajectory trajectory;
  std::vector<Matrix> riccati_P;          // aligned with trajectory.samples
  std::vector<double> running_max_deviation;  // aligned with samples
  double max_deviation = 0.0;  // max over every step, not only recorded ones
  Matrix final_error_covariance;
  Matrix final_riccati_P;
};

/// Propagates the joint moments under the gain of a covariance flow that
/// starts at P0 (with bbᵀ added when b is given) and compares E Σ Eᵀ with
/// that flow's P(t) at every step. The flow runs on a grid of dt/2 so that
/// every RK4 stage of the moment propagation sees an exact node.
OracleReport RunMomentOracle(const QuantumLinearSystem& sys, const Matrix& P0,
                             const OracleOptions& options);

}  // namespace qobs
