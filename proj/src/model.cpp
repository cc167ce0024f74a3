#include "enda/model.hpp"

#include <stdexcept>
#include <string>

#include "enda/errors.hpp"

namespace enda::model {

Eigen::VectorXd l96_tendency(const Eigen::VectorXd& state, double forcing) {
  const Eigen::Index d = state.size();
  if (d < 4) {
    throw std::invalid_argument(
        "l96_tendency: dimension must be >= 4, got " + std::to_string(d));
  }
  Eigen::VectorXd out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double xp1 = state[(j + 1) % d];
    const double xm1 = state[(j - 1 + d) % d];
    const double xm2 = state[(j - 2 + d) % d];
    out[j] = (xp1 - xm2) * xm1 - state[j] + forcing;
  }
  return out;
}

Eigen::VectorXd rk4_step(const Eigen::VectorXd& state, double dt,
                         double forcing) {
  if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be > 0");
  const Eigen::VectorXd k1 = l96_tendency(state, forcing);
  const Eigen::VectorXd k2 = l96_tendency(state + (0.5 * dt) * k1, forcing);
  const Eigen::VectorXd k3 = l96_tendency(state + (0.5 * dt) * k2, forcing);
  const Eigen::VectorXd k4 = l96_tendency(state + dt * k3, forcing);
  Eigen::VectorXd next = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    throw DivergenceError("rk4_step: state became non-finite", -1);
  }
  return next;
}

Trajectory generate_truth(const Eigen::VectorXd& x0, double dt, int n_steps,
                          double forcing, double t0) {
  if (n_steps < 1) {
    throw std::invalid_argument("generate_truth: n_steps must be >= 1");
  }
  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  for (int k = 1; k <= n_steps; ++k) {
    try {
      traj.states.push_back(rk4_step(traj.states.back(), dt, forcing));
    } catch (const DivergenceError&) {
      throw DivergenceError(
          "generate_truth: trajectory blew up at step " + std::to_string(k),
          k);
    }
    traj.times.push_back(t0 + k * dt);
  }
  return traj;
}

}  // namespace enda::model
