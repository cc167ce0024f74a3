#include "enda/filter.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "enda/errors.hpp"
#include "enda/parallel.hpp"
#include "enda/transform.hpp"

namespace enda::filter {

namespace {

constexpr double kDivergenceRmse = 1e3;
constexpr int kDivergenceStreak = 5;

// Solves S X = B for symmetric positive semi-definite S, escalating additive
// diagonal jitter (scaled by the mean diagonal) until the Cholesky
// factorization succeeds.
Eigen::MatrixXd spd_solve(const Eigen::MatrixXd& S, const Eigen::MatrixXd& B,
                          double base_jitter) {
  double scale = S.diagonal().mean();
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  const double rungs[] = {base_jitter, 1e-10, 1e-8, 1e-6};
  double last = -1.0;
  for (double rung : rungs) {
    if (rung < last) continue;
    last = rung;
    Eigen::MatrixXd St = S;
    St.diagonal().array() += rung * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(St);
    if (llt.info() == Eigen::Success) return llt.solve(B);
  }
  throw SingularCovarianceError(
      "spd_solve: innovation covariance not factorizable after jitter "
      "escalation");
}

void check_update_inputs(const Eigen::MatrixXd& forecast,
                         const Eigen::MatrixXd& obs_ensemble) {
  if (forecast.cols() < 2) {
    throw std::invalid_argument("update: need at least 2 ensemble members");
  }
  if (obs_ensemble.rows() != forecast.rows() ||
      obs_ensemble.cols() != forecast.cols()) {
    throw std::invalid_argument("update: observation ensemble shape mismatch");
  }
}

}  // namespace

Eigen::MatrixXd localization_matrix(int dims, double radius) {
  if (dims < 1) throw std::invalid_argument("localization_matrix: dims < 1");
  if (!(radius > 0.0)) {
    throw std::invalid_argument("localization_matrix: radius must be > 0");
  }
  Eigen::MatrixXd L(dims, dims);
  for (int i = 0; i < dims; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double dij = std::min<double>(i - j, dims - (i - j));
      const double v = std::exp(-0.5 * (dij / radius) * (dij / radius));
      L(i, j) = v;
      L(j, i) = v;
    }
  }
  return L;
}

Eigen::MatrixXd inflate(const Eigen::MatrixXd& ensemble, double r) {
  if (!(r >= 1.0)) throw std::invalid_argument("inflate: r must be >= 1");
  if (r == 1.0) return ensemble;
  const Eigen::VectorXd mean = ensemble.rowwise().mean();
  return (r * (ensemble.colwise() - mean)).colwise() + mean;
}

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols()) {
    throw std::invalid_argument("sample_cov: sample counts differ");
  }
  const Eigen::Index n = A.cols();
  if (n < 2) throw std::invalid_argument("sample_cov: need n >= 2 samples");
  const Eigen::MatrixXd Ac = A.colwise() - A.rowwise().mean().eval();
  const Eigen::MatrixXd Bc = B.colwise() - B.rowwise().mean().eval();
  return (Ac * Bc.transpose()) / double(n - 1);
}

Eigen::MatrixXd vanilla_update(const Eigen::MatrixXd& forecast,
                               const Eigen::MatrixXd& obs_ensemble,
                               const Eigen::VectorXd& r_diag, double jitter) {
  check_update_inputs(forecast, obs_ensemble);
  if (r_diag.size() != forecast.rows() || !(r_diag.minCoeff() > 0.0)) {
    throw std::invalid_argument("vanilla_update: R must be positive, size d");
  }
  const Eigen::MatrixXd P = sample_cov(forecast, forecast);
  Eigen::MatrixXd S = P;
  S.diagonal() += r_diag;
  const Eigen::MatrixXd innovations = obs_ensemble - forecast;
  return forecast + P * spd_solve(S, innovations, jitter);
}

Eigen::MatrixXd cg_update(const Eigen::MatrixXd& forecast,
                          const Eigen::MatrixXd& obs_ensemble,
                          const Eigen::VectorXd& reference,
                          const Eigen::MatrixXd& localization, double jitter) {
  check_update_inputs(forecast, obs_ensemble);
  if (reference.size() != obs_ensemble.rows()) {
    throw std::invalid_argument("cg_update: reference size mismatch");
  }
  const Eigen::MatrixXd innovations =
      (-obs_ensemble).colwise() + reference;
  // A degenerate observation ensemble (all columns equal) makes C_y exactly
  // singular; with zero innovations the analysis equals the forecast without
  // touching the solve.
  if ((innovations.array() == 0.0).all()) return forecast;
  const Eigen::MatrixXd Cxy =
      localization.cwiseProduct(sample_cov(forecast, obs_ensemble));
  const Eigen::MatrixXd Cy =
      localization.cwiseProduct(sample_cov(obs_ensemble, obs_ensemble));
  return forecast + Cxy * spd_solve(Cy, innovations, jitter);
}

Eigen::MatrixXd ns_update(const Eigen::MatrixXd& forecast,
                          const Eigen::MatrixXd& obs_ensemble,
                          const Eigen::VectorXd& reference,
                          const Eigen::MatrixXd& localization, double inflation,
                          double jitter) {
  check_update_inputs(forecast, obs_ensemble);
  using transform::NormalScoreMap;

  const NormalScoreMap psi_x = NormalScoreMap::fit(forecast);

  // The observation CDF pools the member observations with the reference.
  Eigen::MatrixXd pooled(obs_ensemble.rows(), obs_ensemble.cols() + 1);
  pooled.leftCols(obs_ensemble.cols()) = obs_ensemble;
  pooled.col(obs_ensemble.cols()) = reference;
  const NormalScoreMap psi_y = NormalScoreMap::fit(pooled);

  const Eigen::MatrixXd latent_forecast =
      inflate(psi_x.forward(forecast), inflation);
  const Eigen::MatrixXd latent_obs = psi_y.forward(obs_ensemble);
  const Eigen::VectorXd latent_ref = psi_y.forward(reference);

  const Eigen::MatrixXd latent_analysis =
      cg_update(latent_forecast, latent_obs, latent_ref, localization, jitter);
  return psi_x.inverse(latent_analysis);
}

Eigen::MatrixXd ns_enkf_step(const Eigen::MatrixXd& forecast,
                             const observation::ObservationModel& obs_model,
                             const Eigen::VectorXd& truth_state,
                             const FilterConfig& cfg, RngStream& truth_obs_rng,
                             RngStream& member_obs_rng) {
  const Eigen::VectorXd reference =
      observation::observe(obs_model, truth_state, truth_obs_rng);
  const Eigen::MatrixXd obs_ensemble =
      observation::perturbed_forecast_observations(obs_model, forecast,
                                                   member_obs_rng);
  const Eigen::MatrixXd L = localization_matrix(
      static_cast<int>(forecast.rows()), cfg.localization_radius);
  return ns_update(forecast, obs_ensemble, reference, L, cfg.inflation,
                   cfg.jitter);
}

FilterResult run_filter(const model::Trajectory& truth, const FilterConfig& cfg,
                        const observation::ObservationModel& obs_model,
                        const Eigen::MatrixXd& initial_ensemble, double forcing,
                        RngStream& truth_obs_rng, RngStream& member_obs_rng) {
  const int n_cycles = static_cast<int>(truth.times.size()) - 1;
  if (n_cycles < 1) {
    throw std::invalid_argument("run_filter: truth must cover >= 1 cycle");
  }
  const Eigen::Index d = truth.states.front().size();
  if (initial_ensemble.rows() != d) {
    throw std::invalid_argument("run_filter: ensemble/truth dimension mismatch");
  }
  if (initial_ensemble.cols() < 2) {
    throw std::invalid_argument("run_filter: need at least 2 members");
  }
  if (cfg.assimilation_interval < 1) {
    throw std::invalid_argument("run_filter: assimilation interval must be >= 1");
  }

  const Eigen::MatrixXd L =
      localization_matrix(static_cast<int>(d), cfg.localization_radius);
  const Eigen::VectorXd r_diag =
      Eigen::VectorXd::Constant(d, cfg.obs_noise_var);
  const int n = static_cast<int>(initial_ensemble.cols());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  FilterResult result;
  result.metrics.cycles.reserve(n_cycles);
  Eigen::MatrixXd ens = initial_ensemble;
  int high_rmse_streak = 0;

  for (int k = 1; k <= n_cycles; ++k) {
    const double dt = truth.times[k] - truth.times[k - 1];
    const Eigen::VectorXd& truth_state = truth.states[k];

    // Advance every member one model step. RK4 may overflow to non-finite
    // rather than throw, so check the whole ensemble afterwards.
    parallel::parallel_for(n, [&](int j) {
      Eigen::VectorXd x = ens.col(j);
      const Eigen::VectorXd k1 = model::l96_tendency(x, forcing);
      const Eigen::VectorXd k2 =
          model::l96_tendency(x + (0.5 * dt) * k1, forcing);
      const Eigen::VectorXd k3 =
          model::l96_tendency(x + (0.5 * dt) * k2, forcing);
      const Eigen::VectorXd k4 = model::l96_tendency(x + dt * k3, forcing);
      ens.col(j) = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    });

    metrics::CycleMetrics row;
    row.cycle = k;
    row.time = truth.times[k];

    if (!ens.allFinite()) {
      row.frmse = row.armse = row.fcrps = row.acrps = nan;
      result.forecast_means.push_back(Eigen::VectorXd::Constant(d, nan));
      result.analysis_means.push_back(Eigen::VectorXd::Constant(d, nan));
      result.metrics.cycles.push_back(row);
      result.status = RunStatus::diverged;
      result.diverged_cycle = k;
      return result;
    }

    row.frmse = metrics::rmse(ens, truth_state);
    row.fcrps = metrics::crps_mean(ens, truth_state);
    result.forecast_means.push_back(ens.rowwise().mean());

    bool analysis_finite = true;
    if (k % cfg.assimilation_interval == 0) {
      // Fixed draw order: reference observation first, then member noise.
      const Eigen::VectorXd reference =
          observation::observe(obs_model, truth_state, truth_obs_rng);
      const Eigen::MatrixXd eps =
          observation::noise_matrix(obs_model.noise, d, n, member_obs_rng);

      try {
        if (cfg.variant == Variant::vanilla) {
          // Observation ensemble: fresh perturbations of the truth.
          Eigen::MatrixXd obs =
              observation::apply_map(obs_model.map, truth_state).replicate(1, n) + eps;
          ens = vanilla_update(inflate(ens, cfg.inflation), obs, r_diag,
                               cfg.jitter);
        } else {
          // Observation ensemble: each forecast member observed afresh.
          Eigen::MatrixXd obs(d, n);
          for (int j = 0; j < n; ++j) {
            obs.col(j) = observation::apply_map(obs_model.map, ens.col(j));
          }
          obs += eps;
          if (cfg.variant == Variant::cg) {
            ens = cg_update(inflate(ens, cfg.inflation), obs, reference, L,
                            cfg.jitter);
          } else {
            ens = ns_update(ens, obs, reference, L, cfg.inflation, cfg.jitter);
          }
        }
        analysis_finite = ens.allFinite();
      } catch (const SingularCovarianceError&) {
        analysis_finite = false;
      }
    }

    if (!analysis_finite) {
      row.armse = row.acrps = nan;
      result.analysis_means.push_back(Eigen::VectorXd::Constant(d, nan));
      result.metrics.cycles.push_back(row);
      result.status = RunStatus::diverged;
      result.diverged_cycle = k;
      return result;
    }

    row.armse = metrics::rmse(ens, truth_state);
    row.acrps = metrics::crps_mean(ens, truth_state);
    result.analysis_means.push_back(ens.rowwise().mean());
    result.metrics.cycles.push_back(row);

    high_rmse_streak = (row.armse > kDivergenceRmse) ? high_rmse_streak + 1 : 0;
    if (high_rmse_streak >= kDivergenceStreak) {
      result.status = RunStatus::diverged;
      result.diverged_cycle = k;
      return result;
    }
  }
  return result;
}

}  // namespace enda::filter
