#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace enda::metrics {

/// Per-cycle skill scores. All finite for a non-diverged run.
struct CycleMetrics {
  int cycle = 0;       // 1-based assimilation cycle index
  double time = 0.0;   // seconds of ODE time
  double frmse = 0.0;  // forecast RMSE
  double armse = 0.0;  // analysis RMSE
  double fcrps = 0.0;  // forecast CRPS, mean over dimensions
  double acrps = 0.0;  // analysis CRPS, mean over dimensions

  bool operator==(const CycleMetrics&) const = default;
};

/// Column means over a summary window.
struct Summary {
  double mean_fcrps = 0.0;
  double mean_acrps = 0.0;
  double mean_frmse = 0.0;
  double mean_armse = 0.0;

  bool operator==(const Summary&) const = default;
};

struct MetricSeries {
  std::vector<CycleMetrics> cycles;
  Summary summary;
  double wallclock_seconds = 0.0;  // excluded from golden-file comparisons
};

/// RMSE of the ensemble mean against the truth over dimensions
/// (members are columns): sqrt(mean_i (mean_j x_ij - truth_i)^2).
double rmse(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& truth);

/// Empirical ensemble CRPS in one dimension:
///   (1/n) sum_j |x_j - truth| - (1/(2 n^2)) sum_j sum_k |x_j - x_k|.
double crps(const Eigen::VectorXd& members, double truth);

/// Mean over dimensions of the one-dimensional CRPS (members are columns).
double crps_mean(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& truth);

/// Arithmetic means per column over cycles [begin, end). Throws on an empty
/// or out-of-range window.
Summary summarize(const std::vector<CycleMetrics>& cycles, std::size_t begin,
                  std::size_t end);

}  // namespace enda::metrics
