#pragma once

namespace qobs {

/// One classical fourth-order Runge–Kutta step for an autonomous or
/// time-dependent vector field f(t, y). `State` must support addition and
/// scalar multiplication (Eigen matrices and vectors do).
///
/// `k1` may be supplied when the caller already evaluated f(t, y).
template <typename State, typename Field>
State Rk4Step(const Field& f, double t, const State& y, double dt,
              const State* k1_hint = nullptr) {
  const State k1 = k1_hint ? *k1_hint : State(f(t, y));
  const State k2 = f(t + 0.5 * dt, State(y + (0.5 * dt) * k1));
  const State k3 = f(t + 0.5 * dt, State(y + (0.5 * dt) * k2));
  const State k4 = f(t + dt, State(y + dt * k3));
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Integrates f from (t0, y0) over `steps` fixed steps of size dt and
/// returns the final state. `post` is applied after each step (e.g. to
/// re-symmetrize a covariance).
template <typename State, typename Field, typename Post>
State Rk4Integrate(const Field& f, double t0, State y, double dt, long steps,
                   const Post& post) {
  for (long i = 0; i < steps; ++i) {
    y = Rk4Step(f, t0 + static_cast<double>(i) * dt, y, dt);
    post(y);
  }
  return y;
}

}  // namespace qobs
