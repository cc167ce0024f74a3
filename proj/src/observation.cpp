#include "enda/observation.hpp"

#include <cmath>
#include <stdexcept>

#include "enda/stats.hpp"

namespace enda::observation {

NoiseDistribution NoiseDistribution::none() {
  NoiseDistribution n;
  n.kind = NoiseKind::none;
  return n;
}

NoiseDistribution NoiseDistribution::gaussian(double mean, double std) {
  if (!(std >= 0.0)) {
    throw std::invalid_argument("gaussian noise: std must be >= 0");
  }
  NoiseDistribution n;
  n.kind = NoiseKind::gaussian;
  n.mean = mean;
  n.std = std;
  return n;
}

NoiseDistribution NoiseDistribution::exponential(double mean) {
  if (!(mean > 0.0)) {
    throw std::invalid_argument("exponential noise: mean must be > 0");
  }
  NoiseDistribution n;
  n.kind = NoiseKind::exponential;
  n.exp_mean = mean;
  return n;
}

NoiseDistribution NoiseDistribution::bimodal(double mode_offset,
                                             double component_std) {
  if (!(component_std > 0.0)) {
    throw std::invalid_argument("bimodal noise: component std must be > 0");
  }
  NoiseDistribution n;
  n.kind = NoiseKind::bimodal;
  n.mode_offset = mode_offset;
  n.component_std = component_std;
  return n;
}

NoiseDistribution NoiseDistribution::generalized_pareto(double shape,
                                                        double scale,
                                                        double location) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::invalid_argument(
        "generalized Pareto noise: shape and scale must be > 0");
  }
  NoiseDistribution n;
  n.kind = NoiseKind::generalized_pareto;
  n.shape = shape;
  n.scale = scale;
  n.location = location;
  return n;
}

double pareto_quantile(double shape, double scale, double location, double u) {
  return location + scale * (std::pow(1.0 - u, -shape) - 1.0) / shape;
}

double sample(const NoiseDistribution& noise, RngStream& rng) {
  switch (noise.kind) {
    case NoiseKind::none:
      return 0.0;
    case NoiseKind::gaussian:
      return noise.mean + noise.std * rng.standard_normal();
    case NoiseKind::exponential:
      // inverse CDF; u in [0,1) keeps log1p finite
      return -noise.exp_mean * std::log1p(-rng.uniform01());
    case NoiseKind::bimodal: {
      const double center =
          rng.uniform01() < 0.5 ? -noise.mode_offset : noise.mode_offset;
      return center + noise.component_std * rng.standard_normal();
    }
    case NoiseKind::generalized_pareto: {
      // quantile is unbounded at u == 1; resample instead of clamping
      for (;;) {
        const double u = rng.uniform01();
        if (u < 1.0) {
          return pareto_quantile(noise.shape, noise.scale, noise.location, u);
        }
      }
    }
  }
  throw std::logic_error("sample: unknown noise kind");
}

Eigen::VectorXd apply_map(ObservationMap map, const Eigen::VectorXd& state) {
  switch (map) {
    case ObservationMap::linear_identity:
      return state;
    case ObservationMap::cubic:
      return state.array().cube();
  }
  throw std::logic_error("apply_map: unknown map");
}

Eigen::VectorXd observe(const ObservationModel& model,
                        const Eigen::VectorXd& state, RngStream& rng) {
  Eigen::VectorXd out = apply_map(model.map, state);
  if (model.noise.kind == NoiseKind::none) return out;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] += sample(model.noise, rng);
  }
  return out;
}

Eigen::MatrixXd noise_matrix(const NoiseDistribution& noise, Eigen::Index dims,
                             Eigen::Index members, RngStream& rng) {
  Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(dims, members);
  if (noise.kind == NoiseKind::none) return eps;
  for (Eigen::Index j = 0; j < members; ++j) {
    for (Eigen::Index i = 0; i < dims; ++i) {
      eps(i, j) = sample(noise, rng);
    }
  }
  return eps;
}

Eigen::MatrixXd perturbed_forecast_observations(const ObservationModel& model,
                                                const Eigen::MatrixXd& ensemble,
                                                RngStream& rng) {
  if (ensemble.cols() < 1) {
    throw std::invalid_argument(
        "perturbed_forecast_observations: empty ensemble");
  }
  Eigen::MatrixXd obs(ensemble.rows(), ensemble.cols());
  for (Eigen::Index j = 0; j < ensemble.cols(); ++j) {
    obs.col(j) = apply_map(model.map, ensemble.col(j));
  }
  return obs + noise_matrix(model.noise, ensemble.rows(), ensemble.cols(), rng);
}

}  // namespace enda::observation
