// Test-only oracles, kept independent of the library implementation paths
// they are used to check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

// Lorenz-96 tendency by an index-by-index loop with explicit modular
// arithmetic (no Eigen expressions, no shared helpers).
inline std::vector<double> l96_tendency(const std::vector<double>& x,
                                        double forcing) {
  const int d = static_cast<int>(x.size());
  std::vector<double> out(d);
  for (int j = 0; j < d; ++j) {
    const int jp1 = (j + 1) % d;
    const int jm1 = ((j - 1) % d + d) % d;
    const int jm2 = ((j - 2) % d + d) % d;
    out[j] = (x[jp1] - x[jm2]) * x[jm1] - x[j] + forcing;
  }
  return out;
}

// CRPS as the exact integral of (F(z) - H(z - truth))^2 where F is the
// empirical step CDF of the members. The integrand is piecewise constant
// between the sorted breakpoints {members} u {truth} and zero outside them.
inline double crps_quadrature(const Eigen::VectorXd& members, double truth) {
  std::vector<double> breaks(members.data(), members.data() + members.size());
  breaks.push_back(truth);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> sorted(members.data(), members.data() + members.size());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i];
    const double hi = breaks[i + 1];
    if (!(hi > lo)) continue;
    const double mid = 0.5 * (lo + hi);
    const double f =
        static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), mid) -
                            sorted.begin()) /
        n;
    const double h = mid >= truth ? 1.0 : 0.0;
    integral += (f - h) * (f - h) * (hi - lo);
  }
  return integral;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Gaussian kernel mixture CDF evaluated directly (no grid, no interpolation).
inline double kde_cdf(const Eigen::VectorXd& sample, double bandwidth,
                      double x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    acc += normal_cdf((x - sample[i]) / bandwidth);
  }
  return acc / static_cast<double>(sample.size());
}

// Root of f(x) = target on [lo, hi] for increasing f, by bisection.
template <typename F>
double bisect(F f, double target, double lo, double hi, int iters = 200) {
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Two-sided Kolmogorov-Smirnov statistic of a sample against a reference CDF.
template <typename F>
double ks_statistic(std::vector<double> sample, F cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double c = cdf(sample[i]);
    ks = std::max(ks, std::abs(c - static_cast<double>(i) / n));
    ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - c));
  }
  return ks;
}

// One linear-Gaussian equivalence instance. The perturbations are
// post-processed so that their sample cross-covariance with the forecast
// anomalies is exactly zero and their sample covariance is exactly diag(r);
// under that construction the conditional-Gaussian gain equals the classic
// gain algebraically and the two updates must agree to solver precision.
struct EquivalenceInstance {
  Eigen::MatrixXd forecast;      // d x n
  Eigen::MatrixXd eps;           // d x n, exact sample moments
  Eigen::VectorXd r_diag;        // diagonal of R
  Eigen::VectorXd truth;         // reference state
};

inline EquivalenceInstance make_equivalence_instance(int d, int n,
                                                     std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.5, 2.0);

  EquivalenceInstance inst;
  inst.forecast = Eigen::MatrixXd::NullaryExpr(
      d, n, [&](Eigen::Index, Eigen::Index) { return normal(gen); });
  inst.truth = Eigen::VectorXd::NullaryExpr(
      d, [&](Eigen::Index) { return normal(gen); });
  inst.r_diag = Eigen::VectorXd::NullaryExpr(
      d, [&](Eigen::Index) { return unif(gen); });

  // Row space of the forecast anomalies plus the constant direction.
  Eigen::MatrixXd basis(n, d + 1);
  basis.col(0) = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd anomalies =
      inst.forecast.colwise() - inst.forecast.rowwise().mean().eval();
  basis.rightCols(d) = anomalies.transpose();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd Q =
      qr.householderQ() * Eigen::MatrixXd::Identity(n, d + 1);

  // Raw noise, centered, then projected off the forecast anomaly space.
  Eigen::MatrixXd eps = Eigen::MatrixXd::NullaryExpr(
      d, n, [&](Eigen::Index, Eigen::Index) { return normal(gen); });
  eps = eps - (eps * Q) * Q.transpose();

  // Color so the sample covariance is exactly diag(r).
  const Eigen::MatrixXd G = (eps * eps.transpose()) / double(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const Eigen::MatrixXd g_inv_sqrt =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  inst.eps = inst.r_diag.cwiseSqrt().asDiagonal() * (g_inv_sqrt * eps);
  return inst;
}

}  // namespace oracle
