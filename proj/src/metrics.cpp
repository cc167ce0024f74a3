#include "enda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace enda::metrics {

double rmse(const Eigen::MatrixXd& ensemble, const Eigen::VectorXd& truth) {
  if (ensemble.rows() != truth.size()) {
    throw std::invalid_argument("rmse: dimension mismatch");
  }
  const Eigen::VectorXd mean = ensemble.rowwise().mean();
  return std::sqrt((mean - truth).squaredNorm() / double(truth.size()));
}

double crps(const Eigen::VectorXd& members, double truth) {
  const Eigen::Index n = members.size();
  if (n < 1) throw std::invalid_argument("crps: empty ensemble");
  const double mae = (members.array() - truth).abs().mean();
  if (n == 1) return mae;

  // sum_{j,k} |x_j - x_k| = 2 * sum_i (2i - n + 1) * x_(i) over sorted values
  std::vector<double> sorted(members.data(), members.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double pair_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    pair_sum += (2.0 * double(i) - double(n) + 1.0) * sorted[i];
  }
  return mae - pair_sum / (double(n) * double(n));
}

double crps_mean(const Eigen::MatrixXd& ensemble,
                 const Eigen::VectorXd& truth) {
  if (ensemble.rows() != truth.size()) {
    throw std::invalid_argument("crps_mean: dimension mismatch");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < ensemble.rows(); ++i) {
    acc += crps(ensemble.row(i).transpose(), truth[i]);
  }
  return acc / double(ensemble.rows());
}

Summary summarize(const std::vector<CycleMetrics>& cycles, std::size_t begin,
                  std::size_t end) {
  if (begin >= end || end > cycles.size()) {
    throw std::invalid_argument("summarize: empty or out-of-range window");
  }
  Summary s;
  for (std::size_t i = begin; i < end; ++i) {
    s.mean_fcrps += cycles[i].fcrps;
    s.mean_acrps += cycles[i].acrps;
    s.mean_frmse += cycles[i].frmse;
    s.mean_armse += cycles[i].armse;
  }
  const double n = double(end - begin);
  s.mean_fcrps /= n;
  s.mean_acrps /= n;
  s.mean_frmse /= n;
  s.mean_armse /= n;
  return s;
}

}  // namespace enda::metrics
