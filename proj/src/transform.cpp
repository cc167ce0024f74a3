#include "enda/transform.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "enda/errors.hpp"
#include "enda/parallel.hpp"
#include "enda/stats.hpp"

namespace enda::transform {

namespace {

// Piecewise-linear interpolation with linear extrapolation from the end
// segments. xs strictly increasing, at least two points.
double interp(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys, double v) {
  const Eigen::Index n = xs.size();
  Eigen::Index hi =
      std::upper_bound(xs.data(), xs.data() + n, v) - xs.data();
  if (hi <= 0) hi = 1;
  if (hi >= n) hi = n - 1;
  const Eigen::Index lo = hi - 1;
  const double t = (v - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

NormalScoreMap::DimMap NormalScoreMap::fit_dimension(
    const Eigen::VectorXd& sample, Eigen::Index dim_index) {
  const Eigen::Index m = sample.size();
  if (m < 2) {
    throw std::invalid_argument(
        "NormalScoreMap::fit: need at least 2 sample points per dimension");
  }
  if (!sample.allFinite()) {
    throw std::invalid_argument(
        "NormalScoreMap::fit: sample contains non-finite values");
  }

  const double mean = sample.mean();
  const double sd =
      std::sqrt((sample.array() - mean).square().sum() / double(m - 1));
  if (!(sd > 0.0)) {
    throw DegenerateSampleError(
        "NormalScoreMap::fit: all-equal sample in dimension " +
        std::to_string(dim_index));
  }

  NormalScoreMap::DimMap map;
  map.bandwidth = 1.06 * sd * std::pow(double(m), -0.2);
  const double h = map.bandwidth;
  const double lo = sample.minCoeff() - 4.0 * h;
  const double hi = sample.maxCoeff() + 4.0 * h;
  const int g = NormalScoreMap::kGridSize;

  Eigen::VectorXd gx(g), gcdf(g);
  const double step = (hi - lo) / double(g - 1);
  for (int i = 0; i < g; ++i) {
    const double x = lo + i * step;
    double acc = 0.0;
    for (Eigen::Index s = 0; s < m; ++s) {
      acc += stats::normal_cdf((x - sample[s]) / h);
    }
    gx[i] = x;
    gcdf[i] = acc / double(m);
  }

  // Keep only strictly increasing CDF points so the latent table is strictly
  // monotone (ties can appear from rounding at extreme tails).
  std::vector<double> kx, kcdf, kz;
  kx.reserve(g);
  kcdf.reserve(g);
  kz.reserve(g);
  for (int i = 0; i < g; ++i) {
    if (!kcdf.empty() && !(gcdf[i] > kcdf.back())) continue;
    if (!(gcdf[i] > 0.0) || !(gcdf[i] < 1.0)) continue;
    kx.push_back(gx[i]);
    kcdf.push_back(gcdf[i]);
    kz.push_back(stats::normal_quantile(gcdf[i]));
  }
  if (kx.size() < 2) {
    throw DegenerateSampleError(
        "NormalScoreMap::fit: CDF grid collapsed in dimension " +
        std::to_string(dim_index));
  }
  map.x = Eigen::Map<Eigen::VectorXd>(kx.data(), kx.size());
  map.cdf = Eigen::Map<Eigen::VectorXd>(kcdf.data(), kcdf.size());
  map.z = Eigen::Map<Eigen::VectorXd>(kz.data(), kz.size());
  return map;
}

double NormalScoreMap::DimMap::forward(double v) const {
  if (identity) return v;
  return interp(x, z, v);
}

double NormalScoreMap::DimMap::inverse(double v) const {
  if (identity) return v;
  return interp(z, x, v);
}

NormalScoreMap NormalScoreMap::fit(const Eigen::MatrixXd& sample,
                                   bool identity_on_degenerate) {
  const Eigen::Index d = sample.rows();
  NormalScoreMap out;
  out.dims_.resize(d);
  std::vector<std::exception_ptr> errors(d);
  parallel::parallel_for(static_cast<int>(d), [&](int i) {
    try {
      out.dims_[i] = fit_dimension(sample.row(i).transpose(), i);
    } catch (const DegenerateSampleError&) {
      if (!identity_on_degenerate) {
        errors[i] = std::current_exception();
        return;
      }
      out.dims_[i].identity = true;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    if (out.dims_[i].identity) {
      std::cerr << "enda: normal-score fit: dimension " << i
                << " is degenerate, using identity transform\n";
    }
  }
  return out;
}

Eigen::VectorXd NormalScoreMap::forward(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("NormalScoreMap::forward: dimension mismatch");
  }
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = dims_[i].forward(x[i]);
  return out;
}

Eigen::MatrixXd NormalScoreMap::forward(const Eigen::MatrixXd& x) const {
  if (x.rows() != dim()) {
    throw std::invalid_argument("NormalScoreMap::forward: dimension mismatch");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out(i, j) = dims_[i].forward(x(i, j));
    }
  }
  return out;
}

Eigen::VectorXd NormalScoreMap::inverse(const Eigen::VectorXd& z) const {
  if (z.size() != dim()) {
    throw std::invalid_argument("NormalScoreMap::inverse: dimension mismatch");
  }
  Eigen::VectorXd out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = dims_[i].inverse(z[i]);
  return out;
}

Eigen::MatrixXd NormalScoreMap::inverse(const Eigen::MatrixXd& z) const {
  if (z.rows() != dim()) {
    throw std::invalid_argument("NormalScoreMap::inverse: dimension mismatch");
  }
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      out(i, j) = dims_[i].inverse(z(i, j));
    }
  }
  return out;
}

}  // namespace enda::transform
