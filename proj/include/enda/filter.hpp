#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "enda/metrics.hpp"
#include "enda/model.hpp"
#include "enda/observation.hpp"
#include "enda/rng.hpp"

namespace enda::filter {

enum class Variant { vanilla, cg, ns };

/// Filter settings. Ensembles are d x n matrices whose columns are members;
/// every update preserves both shapes. The observation matrix H is the
/// identity throughout, and R is obs_noise_var * I.
struct FilterConfig {
  Variant variant = Variant::cg;
  int ensemble_size = 100;
  double inflation = 1.0;            // multiplicative, about the mean, >= 1
  double localization_radius = 1.0;  // cyclic Gaspari-style radius, > 0
  double obs_noise_var = 1.0;        // diagonal of R, > 0 for vanilla
  double jitter = 0.0;               // first rung of the SPD solve ladder
  bool allow_misspecified = false;   // permit vanilla off linear+Gaussian
  int assimilation_interval = 1;     // update every k-th cycle

  bool operator==(const FilterConfig&) const = default;
};

/// Cyclic-distance localization: entry (i, j) is
/// exp(-0.5 * (d_ij / radius)^2) with d_ij = min(|i-j|, dims - |i-j|).
/// Symmetric, unit diagonal, entries in (0, 1].
Eigen::MatrixXd localization_matrix(int dims, double radius);

/// Member j becomes mean + r * (member j - mean); the ensemble mean is
/// unchanged and the per-dimension spread scales by exactly r. r == 1
/// returns the input bit-for-bit.
Eigen::MatrixXd inflate(const Eigen::MatrixXd& ensemble, double r);

/// Cross-covariance of two ensembles with matched columns (samples), about
/// the sample means, 1/(n-1) normalization. A is p x n, B is q x n; the
/// result is p x q.
Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Classic stochastic EnKF analysis (H = identity):
///   x_j^a = x_j^f + P (P + R)^-1 (y_j - x_j^f)
/// with P the forecast sample covariance and R = diag(r_diag). obs_ensemble
/// column j is the perturbed observation assigned to member j.
Eigen::MatrixXd vanilla_update(const Eigen::MatrixXd& forecast,
                               const Eigen::MatrixXd& obs_ensemble,
                               const Eigen::VectorXd& r_diag,
                               double jitter = 0.0);

/// Localized conditional-Gaussian analysis:
///   x_j^a = x_j^f + (L o C_xy)(L o C_y)^-1 (y - y_j)
/// with C_xy = sample_cov(forecast, obs_ensemble), C_y the observation
/// ensemble covariance, and o the entry-wise product. obs_ensemble column j
/// must be an observation of forecast member j.
Eigen::MatrixXd cg_update(const Eigen::MatrixXd& forecast,
                          const Eigen::MatrixXd& obs_ensemble,
                          const Eigen::VectorXd& reference,
                          const Eigen::MatrixXd& localization,
                          double jitter = 0.0);

/// Normal-score analysis: fits per-dimension normal-score maps for the state
/// (on the forecast ensemble) and for the observations (on the pooled
/// observation ensemble plus the reference), transforms everything to latent
/// space, inflates the latent forecast about its mean by `inflation`, applies
/// the localized conditional-Gaussian update there, and maps the latent
/// analysis back through the inverse state transform.
Eigen::MatrixXd ns_update(const Eigen::MatrixXd& forecast,
                          const Eigen::MatrixXd& obs_ensemble,
                          const Eigen::VectorXd& reference,
                          const Eigen::MatrixXd& localization,
                          double inflation, double jitter = 0.0);

/// One full normal-score assimilation step: draws the reference observation
/// of the truth from truth_obs_rng, the per-member observation ensemble from
/// member_obs_rng, and runs ns_update.
Eigen::MatrixXd ns_enkf_step(const Eigen::MatrixXd& forecast,
                             const observation::ObservationModel& obs_model,
                             const Eigen::VectorXd& truth_state,
                             const FilterConfig& cfg, RngStream& truth_obs_rng,
                             RngStream& member_obs_rng);

enum class RunStatus { completed, diverged };

struct FilterResult {
  std::vector<Eigen::VectorXd> forecast_means;  // one per cycle
  std::vector<Eigen::VectorXd> analysis_means;  // one per cycle
  metrics::MetricSeries metrics;
  RunStatus status = RunStatus::completed;
  std::optional<int> diverged_cycle;  // 1-based, set when status == diverged
};

/// Runs the assimilation loop over the truth trajectory: at each cycle every
/// member advances one RK4 step, forecast metrics are recorded, and on
/// assimilation cycles the variant's update is applied (inflation in state
/// space for vanilla/cg, in latent space for ns). Non-assimilation cycles
/// copy the forecast to the analysis.
///
/// Per-cycle draw order on assimilation cycles, identical for every variant:
/// first the reference observation (d draws from truth_obs_rng), then the
/// member noise matrix (n * d draws from member_obs_rng, member-major).
///
/// Divergence — any non-finite member, or ensemble-mean RMSE above 1e3 for 5
/// consecutive cycles — is reported in the result (with the cycle's metrics
/// row retained), never thrown.
FilterResult run_filter(const model::Trajectory& truth, const FilterConfig& cfg,
                        const observation::ObservationModel& obs_model,
                        const Eigen::MatrixXd& initial_ensemble, double forcing,
                        RngStream& truth_obs_rng, RngStream& member_obs_rng);

}  // namespace enda::filter
