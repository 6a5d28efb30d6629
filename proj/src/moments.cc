#include "qobs/moments.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "qobs/errors.h"
#include "qobs/ode.h"

namespace qobs {

namespace {

constexpr std::size_t kScheduleWindow = 3;

long StepCount(double horizon, double dt) {
  if (!(dt > 0.0)) throw DomainError("step size must be positive");
  if (!(horizon >= 0.0)) throw DomainError("horizon must be nonnegative");
  return static_cast<long>(std::ceil(horizon / dt - 1e-9));
}

void RequireJoint(const JointSystem& joint, Eigen::Index dim) {
  if (joint.A.rows() != dim || joint.A.cols() != dim || joint.B.rows() != dim) {
    throw DimensionError("joint system does not match the moment state");
  }
}

// Mean and covariance stacked as [⟨z⟩ | Σ] so one RK4 step advances both.
Matrix Stack(const JointMomentState& s) {
  Matrix y(s.Sigma.rows(), s.Sigma.cols() + 1);
  y.col(0) = s.mean;
  y.rightCols(s.Sigma.cols()) = s.Sigma;
  return y;
}

JointMomentState Unstack(const Matrix& y) {
  JointMomentState s;
  s.mean = y.col(0);
  s.Sigma = y.rightCols(y.cols() - 1);
  s.Sigma = 0.5 * (s.Sigma + s.Sigma.transpose()).eval();
  return s;
}

}  // namespace

JointSystem AssembleJoint(const QuantumLinearSystem& sys, const Matrix& K,
                          const Matrix& b) {
  const int n = sys.n();
  const int nw = sys.n_w();
  if (K.rows() != n || K.cols() != sys.n_y()) {
    throw DimensionError("gain must be n×n_y");
  }
  const int nv = static_cast<int>(b.cols());
  if (b.size() != 0 && b.rows() != n) {
    throw DimensionError("vacuum coupling must have n rows");
  }
  JointSystem joint;
  joint.A = Matrix::Zero(2 * n, 2 * n);
  joint.A.topLeftCorner(n, n) = sys.A();
  joint.A.bottomLeftCorner(n, n) = K * sys.C();
  joint.A.bottomRightCorner(n, n) = sys.A() - K * sys.C();
  joint.B = Matrix::Zero(2 * n, nw + nv);
  joint.B.topLeftCorner(n, nw) = sys.B();
  joint.B.bottomLeftCorner(n, nw) = K * sys.D();
  if (nv > 0) joint.B.bottomRightCorner(n, nv) = b;
  return joint;
}

JointMomentState InitialJointState(const Matrix& P0, const Vector& plant_mean,
                                   const Vector& estimate_mean) {
  const Eigen::Index n = P0.rows();
  if (P0.cols() != n) throw DimensionError("P0 must be square");
  if ((plant_mean.size() != 0 && plant_mean.size() != n) ||
      (estimate_mean.size() != 0 && estimate_mean.size() != n)) {
    throw DimensionError("initial means must have n entries");
  }
  JointMomentState s;
  s.mean = Vector::Zero(2 * n);
  if (plant_mean.size() != 0) s.mean.head(n) = plant_mean;
  if (estimate_mean.size() != 0) s.mean.tail(n) = estimate_mean;
  s.Sigma = Matrix::Zero(2 * n, 2 * n);
  s.Sigma.topLeftCorner(n, n) = P0;
  return s;
}

MomentTrajectory PropagateMoments(const JointSystem& joint,
                                  const JointMomentState& state0,
                                  double horizon, double dt,
                                  const PropagationOptions& options) {
  RequireJoint(joint, state0.Sigma.rows());
  return PropagateMoments([&joint](double) { return joint; }, state0, horizon,
                          dt, options);
}

MomentTrajectory PropagateMoments(const JointField& joint,
                                  const JointMomentState& state0,
                                  double horizon, double dt,
                                  const PropagationOptions& options) {
  const Eigen::Index dim = state0.Sigma.rows();
  if (state0.Sigma.cols() != dim || state0.mean.size() != dim) {
    throw DimensionError("moment state must be 2n mean and 2n×2n covariance");
  }
  const long steps = StepCount(horizon, dt);
  const int stride = std::max(1, options.record_stride);

  auto field = [&](double t, const Matrix& y) -> Matrix {
    const JointSystem sys = joint(t);
    RequireJoint(sys, dim);
    const Matrix sigma = y.rightCols(dim);
    Matrix out(dim, dim + 1);
    out.col(0) = sys.A * y.col(0);
    out.rightCols(dim) =
        sys.A * sigma + sigma * sys.A.transpose() + sys.B * sys.B.transpose();
    return out;
  };

  MomentTrajectory traj;
  JointMomentState state = state0;
  Matrix y = Stack(state);
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (options.observer) options.observer(i, t, state);
    if (i % stride == 0 || i == steps) {
      traj.samples.push_back({t, state.mean, state.Sigma});
    }
    if (i == steps) break;
    y = Rk4Step(field, t, y, dt);
    state = Unstack(y);
    y.rightCols(dim) = state.Sigma;
  }
  return traj;
}

Matrix ErrorCovariance(const Matrix& Sigma) {
  const Eigen::Index two_n = Sigma.rows();
  if (Sigma.cols() != two_n || two_n % 2 != 0) {
    throw DimensionError("joint covariance must be 2n×2n");
  }
  const Eigen::Index n = two_n / 2;
  Matrix e(n, two_n);
  e << Matrix::Identity(n, n), -Matrix::Identity(n, n);
  return e * Sigma * e.transpose();
}

Matrix ExtractErrorCovariance(const MomentTrajectory& trajectory, double t) {
  const auto& s = trajectory.samples;
  if (s.empty()) throw DomainError("empty moment trajectory");
  const double span = std::max(1.0, std::abs(s.back().t));
  const double slack = 1e-12 * span;
  if (!(t >= s.front().t - slack && t <= s.back().t + slack)) {
    throw DomainError("time " + std::to_string(t) +
                      " lies outside the trajectory");
  }
  auto upper = std::lower_bound(
      s.begin(), s.end(), t,
      [](const MomentSample& m, double value) { return m.t < value; });
  if (upper == s.end()) return ErrorCovariance(s.back().Sigma);
  if (std::abs(upper->t - t) <= slack || upper == s.begin()) {
    return ErrorCovariance(upper->Sigma);
  }
  const auto lower = std::prev(upper);
  if (std::abs(lower->t - t) <= slack) return ErrorCovariance(lower->Sigma);
  const double w = (t - lower->t) / (upper->t - lower->t);
  return ErrorCovariance((1.0 - w) * lower->Sigma + w * upper->Sigma);
}

GainSchedule::GainSchedule(const QuantumLinearSystem& sys, const Matrix& P0,
                           double node_dt, FlowOptions options)
    : flow_(sys, std::move(options)), node_dt_(node_dt) {
  if (!(node_dt > 0.0)) throw DomainError("node spacing must be positive");
  Matrix p = 0.5 * (P0 + P0.transpose());
  Matrix k = flow_.Gain(p);
  window_.push_back({0, std::move(p), std::move(k)});
}

const GainSchedule::Node& GainSchedule::At(double t) {
  const double scaled = t / node_dt_;
  const long index = std::lround(scaled);
  if (index < 0 || std::abs(scaled - static_cast<double>(index)) > 1e-6) {
    throw PreconditionError("gain queried off the schedule grid");
  }
  if (index < window_.front().index) {
    throw PreconditionError("gain schedule cannot step backwards that far");
  }
  while (window_.back().index < index) {
    const Node& last = window_.back();
    Matrix p = flow_.Step(last.P, node_dt_);
    Matrix k = flow_.Gain(p);
    window_.push_back({last.index + 1, std::move(p), std::move(k)});
    if (window_.size() > kScheduleWindow) window_.erase(window_.begin());
  }
  return window_[window_.size() - 1 -
                 static_cast<std::size_t>(window_.back().index - index)];
}

const Matrix& GainSchedule::Gain(double t) { return At(t).K; }

const Matrix& GainSchedule::Covariance(double t) { return At(t).P; }

OracleReport RunMomentOracle(const QuantumLinearSystem& sys, const Matrix& P0,
                             const OracleOptions& options) {
  const Matrix& b = options.vacuum_coupling;
  FlowOptions flow;
  flow.gain = options.gain;
  flow.record = false;
  if (b.size() != 0) flow.extra_noise = b * b.transpose();
  GainSchedule schedule(sys, P0, 0.5 * options.dt, flow);

  const int stride = std::max(1, options.record_stride);
  const long steps = StepCount(options.horizon, options.dt);
  OracleReport report;
  PropagationOptions prop;
  prop.record_stride = stride;
  prop.observer = [&](long step, double t, const JointMomentState& state) {
    const Matrix& p = schedule.Covariance(t);
    const Matrix err = ErrorCovariance(state.Sigma);
    report.max_deviation = std::max(report.max_deviation, MaxAbs(err - p));
    if (step % stride == 0 || step == steps) {
      report.riccati_P.push_back(p);
      report.running_max_deviation.push_back(report.max_deviation);
    }
    if (step == steps) {
      report.final_error_covariance = err;
      report.final_riccati_P = p;
    }
  };
  JointField field = [&](double t) {
    return AssembleJoint(sys, schedule.Gain(t), b);
  };
  report.trajectory =
      PropagateMoments(field, InitialJointState(P0, options.initial_mean),
                       options.horizon, options.dt, prop);
  return report;
}

}  // namespace qobs
