#pragma once

#include <Eigen/Dense>
#include <vector>

namespace enda::model {

/// A model trajectory on a fixed time grid. times are seconds of ODE time,
/// strictly increasing; states[k] is the state at times[k].
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

/// Lorenz-96 tendency with cyclic indexing:
///   dx_j/dt = (x_{j+1} - x_{j-2}) x_{j-1} - x_j + forcing.
/// Requires dimension >= 4 so the three coupled neighbours are distinct.
Eigen::VectorXd l96_tendency(const Eigen::VectorXd& state, double forcing);

/// One classical fourth-order Runge-Kutta step of the Lorenz-96 system.
/// Throws DivergenceError if the result is non-finite.
Eigen::VectorXd rk4_step(const Eigen::VectorXd& state, double dt,
                         double forcing);

/// Integrates n_steps fixed RK4 steps from x0. The returned trajectory has
/// n_steps + 1 states at times t0 + k * dt. Deterministic; identical inputs
/// give bit-identical output.
Trajectory generate_truth(const Eigen::VectorXd& x0, double dt, int n_steps,
                          double forcing, double t0 = 0.0);

}  // namespace enda::model
