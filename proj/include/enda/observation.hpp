#pragma once

#include <Eigen/Dense>

#include "enda/rng.hpp"

namespace enda::observation {

enum class NoiseKind { none, gaussian, exponential, bimodal, generalized_pareto };

/// Additive observation noise. Use the factories; they validate parameters.
/// NoiseKind::none is the deterministic zero-noise stub: it draws nothing.
struct NoiseDistribution {
  NoiseKind kind = NoiseKind::gaussian;
  double mean = 0.0;           // gaussian
  double std = 1.0;            // gaussian
  double exp_mean = 1.0;       // exponential
  double mode_offset = 5.0;    // bimodal: modes at +-mode_offset
  double component_std = 1.0;  // bimodal
  double shape = 0.5;          // generalized Pareto k
  double scale = 1.0;          // generalized Pareto sigma
  double location = 2.0;       // generalized Pareto theta

  static NoiseDistribution none();
  static NoiseDistribution gaussian(double mean, double std);
  static NoiseDistribution exponential(double mean);
  static NoiseDistribution bimodal(double mode_offset, double component_std);
  static NoiseDistribution generalized_pareto(double shape, double scale,
                                              double location);

  bool operator==(const NoiseDistribution&) const = default;
};

enum class ObservationMap { linear_identity, cubic };

/// Observation operator: an element-wise deterministic map plus iid additive
/// noise per dimension.
struct ObservationModel {
  ObservationMap map = ObservationMap::linear_identity;
  NoiseDistribution noise;

  bool operator==(const ObservationModel&) const = default;
};

/// Generalized Pareto quantile: location + scale * ((1-u)^(-shape) - 1) / shape.
double pareto_quantile(double shape, double scale, double location, double u);

/// One variate. Pareto resamples on the (measure-zero) event u == 1.
/// Draw counts per call: none 0, gaussian 1, exponential 1, bimodal 2,
/// generalized_pareto 1 per attempt.
double sample(const NoiseDistribution& noise, RngStream& rng);

/// The deterministic part of the operator, element-wise.
Eigen::VectorXd apply_map(ObservationMap map, const Eigen::VectorXd& state);

/// map(state) + iid noise per dimension, drawn in dimension order.
Eigen::VectorXd observe(const ObservationModel& model,
                        const Eigen::VectorXd& state, RngStream& rng);

/// d x n matrix of fresh noise variates, drawn member-major dimension-minor
/// (column j is filled before column j+1).
Eigen::MatrixXd noise_matrix(const NoiseDistribution& noise, Eigen::Index dims,
                             Eigen::Index members, RngStream& rng);

/// Observation ensemble y_j = map(x_j) + eps_j: column j is an independent
/// observation of ensemble member j (members are columns).
Eigen::MatrixXd perturbed_forecast_observations(const ObservationModel& model,
                                                const Eigen::MatrixXd& ensemble,
                                                RngStream& rng);

}  // namespace enda::observation
