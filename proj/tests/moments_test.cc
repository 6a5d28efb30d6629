#include "qobs/moments.h"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "qobs/errors.h"
#include "qobs/estimator_pr.h"
#include "test_util.h"

namespace qobs {
namespace {

using testing::Eye;
using testing::Mat;

TEST(PropagateMomentsTest, ZeroFieldIsConstant) {
  const JointSystem joint{Matrix::Zero(4, 4), Matrix::Zero(4, 2)};
  JointMomentState state{Vector::LinSpaced(4, 1.0, 4.0), 2.0 * Eye(4)};
  const MomentTrajectory traj = PropagateMoments(joint, state, 1.0, 0.1);
  ASSERT_EQ(traj.samples.size(), 11u);
  for (const MomentSample& s : traj.samples) {
    EXPECT_EQ(s.mean, state.mean);
    EXPECT_EQ(s.Sigma, state.Sigma);
  }
  EXPECT_NEAR(traj.samples.back().t, 1.0, 1e-12);
}

TEST(PropagateMomentsTest, ScalarOrnsteinUhlenbeck) {
  // Σ̇ = −2Σ + 1: Σ(t) = ½ + (Σ₀ − ½)e^{−2t}.
  const JointSystem joint{-Eye(1), Eye(1)};
  const JointMomentState state{Vector::Constant(1, 3.0), 2.0 * Eye(1)};
  const MomentTrajectory traj = PropagateMoments(joint, state, 10.0, 1e-3);
  for (const MomentSample& s : traj.samples) {
    EXPECT_NEAR(s.Sigma(0, 0), 0.5 + 1.5 * std::exp(-2.0 * s.t), 1e-11);
    EXPECT_NEAR(s.mean(0), 3.0 * std::exp(-s.t), 1e-11);
  }
  EXPECT_NEAR(traj.samples.back().Sigma(0, 0), 0.5, 1e-8);
}

TEST(PropagateMomentsTest, MatchesMatrixExponential) {
  std::mt19937_64 rng(71);
  Matrix a = testing::Gaussian(rng, 4, 4);
  a -= 3.0 * Eye(4);
  const Matrix b = testing::Gaussian(rng, 4, 3);
  const JointMomentState state{testing::Gaussian(rng, 4, 1), testing::RandomSpd(rng, 4)};
  const MomentTrajectory traj = PropagateMoments({a, b}, state, 1.0, 1e-3);
  const MomentSample& last = traj.samples.back();
  const Matrix e = a.exp();
  EXPECT_LT(MaxAbs(last.mean - e * state.mean), 1e-10);
  // Σ(1) via the Van Loan block exponential.
  Matrix h = Matrix::Zero(8, 8);
  h.topLeftCorner(4, 4) = -a;
  h.topRightCorner(4, 4) = b * b.transpose();
  h.bottomRightCorner(4, 4) = a.transpose();
  const Matrix f = h.exp();
  const Matrix phi = f.bottomRightCorner(4, 4).transpose();
  const Matrix q = phi * f.topRightCorner(4, 4);
  EXPECT_LT(MaxAbs(last.Sigma - (e * state.Sigma * e.transpose() + q)), 1e-10);
}

TEST(PropagateMomentsTest, RecordStrideKeepsFinalStep) {
  const JointSystem joint{-Eye(2), Eye(2)};
  const JointMomentState state{Vector::Zero(2), Eye(2)};
  PropagationOptions options;
  options.record_stride = 3;
  long calls = 0;
  options.observer = [&](long, double, const JointMomentState&) { ++calls; };
  const MomentTrajectory traj = PropagateMoments(joint, state, 1.0, 0.1, options);
  EXPECT_EQ(calls, 11);
  std::vector<double> times;
  for (const MomentSample& s : traj.samples) times.push_back(s.t);
  ASSERT_EQ(times.size(), 5u);
  EXPECT_NEAR(times[3], 0.9, 1e-12);
  EXPECT_NEAR(times[4], 1.0, 1e-12);
}

TEST(PropagateMomentsTest, TimeVaryingOverloadAgreesForConstantField) {
  std::mt19937_64 rng(72);
  const JointSystem joint{testing::Gaussian(rng, 4, 4) - 2.0 * Eye(4),
                          testing::Gaussian(rng, 4, 2)};
  const JointMomentState state{testing::Gaussian(rng, 4, 1), Eye(4)};
  const MomentTrajectory a = PropagateMoments(joint, state, 2.0, 1e-2);
  const MomentTrajectory b = PropagateMoments(
      JointField([&](double) { return joint; }), state, 2.0, 1e-2);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  EXPECT_LT(MaxAbs(a.samples.back().Sigma - b.samples.back().Sigma), 1e-14);
  EXPECT_LT(MaxAbs(a.samples.back().mean - b.samples.back().mean), 1e-14);
}

TEST(PropagateMomentsTest, RejectsBadArguments) {
  const JointSystem joint{-Eye(2), Eye(2)};
  const JointMomentState state{Vector::Zero(2), Eye(2)};
  EXPECT_THROW(PropagateMoments(joint, state, 1.0, 0.0), DomainError);
  EXPECT_THROW(PropagateMoments(joint, state, -1.0, 0.1), DomainError);
  EXPECT_THROW(PropagateMoments({-Eye(3), Eye(3)}, state, 1.0, 0.1),
               DimensionError);
}

TEST(JointSystemTest, BlockStructure) {
  const QuantumLinearSystem sys = testing::Squeezer(0.1, 0.2, 0.01);
  const Matrix k = Mat(2, 2, {1, 2, 3, 4});
  const JointSystem joint = AssembleJoint(sys, k);
  ASSERT_EQ(joint.A.rows(), 4);
  ASSERT_EQ(joint.B.cols(), 4);
  EXPECT_EQ(joint.A.topLeftCorner(2, 2), sys.A());
  EXPECT_EQ(joint.A.topRightCorner(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(joint.A.bottomLeftCorner(2, 2), k * sys.C());
  EXPECT_EQ(joint.A.bottomRightCorner(2, 2), sys.A() - k * sys.C());
  EXPECT_EQ(joint.B.topRows(2), sys.B());
  EXPECT_EQ(joint.B.bottomRows(2), k * sys.D());

  const JointSystem augmented = AssembleJoint(sys, k, 0.5 * Eye(2));
  ASSERT_EQ(augmented.B.cols(), 6);
  EXPECT_EQ(augmented.B.topRightCorner(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(augmented.B.bottomRightCorner(2, 2), 0.5 * Eye(2));
}

TEST(JointSystemTest, ErrorCoordinatesFollowGainFlow) {
  // In e = x − x̂ the joint drift and noise reduce to A − KC and B − KD.
  std::mt19937_64 rng(73);
  const QuantumLinearSystem sys = testing::AssemblePlant(
      4, 0, 6, 2, testing::RandomParts(rng, 4, 0, 6, 2));
  const Matrix k = testing::Gaussian(rng, 4, 2);
  const JointSystem joint = AssembleJoint(sys, k);
  Matrix e(4, 8);
  e << Eye(4), -Eye(4);
  EXPECT_LT(MaxAbs(e * joint.A - (sys.A() - k * sys.C()) * e), 1e-12);
  EXPECT_LT(MaxAbs(e * joint.B - (sys.B() - k * sys.D())), 1e-12);
}

TEST(JointSystemTest, InitialStateIsBlockDiagonal) {
  const Matrix p0 = Mat(2, 2, {2, 0.5, 0.5, 1});
  const JointMomentState s = InitialJointState(p0, Eigen::Vector2d(1, 2));
  EXPECT_EQ(s.Sigma.topLeftCorner(2, 2), p0);
  EXPECT_EQ(s.Sigma.bottomRightCorner(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(s.Sigma.topRightCorner(2, 2), Matrix::Zero(2, 2));
  EXPECT_EQ(s.mean, Eigen::Vector4d(1, 2, 0, 0));
  EXPECT_EQ(ErrorCovariance(s.Sigma), p0);
}

TEST(ErrorCovarianceTest, BlockFormula) {
  std::mt19937_64 rng(74);
  const Matrix sigma = testing::RandomSpd(rng, 6);
  const Matrix expected = sigma.topLeftCorner(3, 3) - sigma.topRightCorner(3, 3) -
                          sigma.bottomLeftCorner(3, 3) +
                          sigma.bottomRightCorner(3, 3);
  EXPECT_LT(MaxAbs(ErrorCovariance(sigma) - expected), 1e-14);
  EXPECT_THROW(ErrorCovariance(Matrix::Zero(3, 3)), DimensionError);
}

TEST(ErrorCovarianceTest, InterpolatesAndRejectsOutOfRange) {
  MomentTrajectory traj;
  Matrix s0 = Matrix::Zero(2, 2);
  Matrix s1 = Matrix::Zero(2, 2);
  s0(0, 0) = 1.0;
  s1(0, 0) = 3.0;
  traj.samples.push_back({0.0, Vector::Zero(2), s0});
  traj.samples.push_back({1.0, Vector::Zero(2), s1});
  EXPECT_NEAR(ExtractErrorCovariance(traj, 0.25)(0, 0), 1.5, 1e-15);
  EXPECT_EQ(ExtractErrorCovariance(traj, 1.0)(0, 0), 3.0);
  EXPECT_THROW(ExtractErrorCovariance(traj, 1.5), DomainError);
  EXPECT_THROW(ExtractErrorCovariance(traj, -0.1), DomainError);
  EXPECT_THROW(ExtractErrorCovariance(MomentTrajectory{}, 0.0), DomainError);
}

TEST(GainScheduleTest, MatchesRiccatiRunOnGrid) {
  const QuantumLinearSystem sys = testing::Squeezer(0.1, 0.2, 0.01);
  FlowOptions options;
  GainSchedule schedule(sys, 2.0 * Eye(2), 0.01, options);
  const RiccatiRun run = IntegrateRiccati(sys, 2.0 * Eye(2), 1.0, 0.01, options);
  for (const TrajectorySample& s : run.trajectory) {
    EXPECT_LT(MaxAbs(schedule.Covariance(s.t) - s.P), 1e-14);
    EXPECT_LT(MaxAbs(schedule.Gain(s.t) - s.K), 1e-14);
  }
}

TEST(GainScheduleTest, RejectsOffGridAndBacktracking) {
  GainSchedule schedule(testing::Squeezer(0.1, 0.2, 0.01), Eye(2), 0.01, {});
  EXPECT_THROW(schedule.Gain(0.005), PreconditionError);
  schedule.Gain(1.0);
  EXPECT_NO_THROW(schedule.Gain(0.99));
  EXPECT_THROW(schedule.Gain(0.5), PreconditionError);
}

TEST(MomentOracleTest, SqueezerMatchesRiccati) {
  OracleOptions options;
  options.horizon = 10.0;
  options.record_stride = 100;
  const OracleReport r =
      RunMomentOracle(testing::Squeezer(0.1, 0.2, 0.01), 2.0 * Eye(2), options);
  EXPECT_LT(r.max_deviation, 1e-6);
  ASSERT_EQ(r.trajectory.samples.size(), r.riccati_P.size());
  ASSERT_EQ(r.trajectory.samples.size(), r.running_max_deviation.size());
  EXPECT_EQ(r.running_max_deviation.back(), r.max_deviation);
  for (std::size_t i = 1; i < r.running_max_deviation.size(); ++i) {
    EXPECT_GE(r.running_max_deviation[i], r.running_max_deviation[i - 1]);
  }
  EXPECT_LT(MaxAbs(r.final_error_covariance - r.final_riccati_P), 1e-6);
}

TEST(MomentOracleTest, RandomPlantsMatchRiccati) {
  std::mt19937_64 rng(75);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = trial % 2 == 0 ? 2 : 4;
    const QuantumLinearSystem sys = testing::AssemblePlant(
        n, 0, 2 + n, 2, testing::RandomParts(rng, n, 0, 2 + n, 2));
    OracleOptions options;
    options.horizon = 3.0;
    options.record_stride = 1000;
    const OracleReport r =
        RunMomentOracle(sys, testing::RandomSpd(rng, n), options);
    EXPECT_LT(r.max_deviation, 1e-6 * std::max(1.0, MaxAbs(r.final_riccati_P)));
  }
}

TEST(MomentOracleTest, ErrorMeanDecaysWithClosedLoopDrift) {
  // Cavity at P = I: K = 0 and A − KC = −κ/2·I.
  const double kappa = 0.1;
  OracleOptions options;
  options.initial_mean = Eigen::Vector2d(1.0, -2.0);
  options.horizon = 5.0;
  const OracleReport r = RunMomentOracle(testing::Cavity(kappa), Eye(2), options);
  for (const MomentSample& s : r.trajectory.samples) {
    const Vector error = s.mean.head(2) - s.mean.tail(2);
    EXPECT_LT(MaxAbs(error - std::exp(-0.5 * kappa * s.t) *
                                 Vector(Eigen::Vector2d(1.0, -2.0))),
              1e-12);
    EXPECT_LT(MaxAbs(s.mean.tail(2)), 1e-12);
  }
}

TEST(MomentOracleTest, FixedGainFollowsLyapunovFlow) {
  const QuantumLinearSystem sys = testing::Dpa(0.1, 0.01, 0.01);
  const Matrix k = Mat(2, 2, {0.05, 0.01, -0.02, 0.04});
  OracleOptions options;
  options.gain = GainPolicy::Fixed(k);
  options.horizon = 5.0;
  const OracleReport r = RunMomentOracle(sys, Eye(2), options);
  FlowOptions flow;
  flow.gain = GainPolicy::Fixed(k);
  flow.record = false;
  const RiccatiRun run = IntegrateRiccati(sys, Eye(2), 5.0, 1e-3, flow);
  EXPECT_LT(r.max_deviation, 1e-9);
  EXPECT_LT(MaxAbs(r.final_error_covariance - run.P), 1e-9);
}

TEST(MomentOracleTest, CoherentObserverCovarianceMatchesAugmentedFlow) {
  const QuantumLinearSystem sys = testing::Dpa(0.1, 0.01, 0.01);
  SolverConfig config;
  config.check_uniqueness = false;
  config.record_stride = 100000;
  const EstimatorSynthesis s = SolveSteadyRiccati(sys, Eye(2), config);
  const CoherentObserver obs = MakeCoherentObserver(sys, s, 2, config);

  OracleOptions options;
  options.vacuum_coupling = obs.b;
  options.horizon = 10.0;
  options.record_stride = 1000;
  const OracleReport r = RunMomentOracle(sys, Eye(2), options);
  EXPECT_LT(r.max_deviation, 1e-6);
  FlowOptions flow;
  flow.extra_noise = obs.b * obs.b.transpose();
  flow.record = false;
  const RiccatiRun run = IntegrateRiccati(sys, Eye(2), 10.0, 1e-3, flow);
  EXPECT_LT(MaxAbs(r.final_error_covariance - run.P), 1e-6);
}

}  // namespace
}  // namespace qobs
