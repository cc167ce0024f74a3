#pragma once

#include <Eigen/Dense>
#include <vector>

namespace enda::transform {

/// Per-dimension normal-score (Gaussian anamorphosis) map.
///
/// Each dimension gets a smoothed CDF estimate: a Gaussian-kernel mixture
/// centered at the sample points with Silverman-rule bandwidth
/// 1.06 * sd * m^(-1/5), evaluated on a 512-point grid spanning
/// [min - 4h, max + 4h]. forward() sends x to the standard-normal latent
/// coordinate z = Phi^-1(F(x)) by piecewise-linear interpolation of the
/// tabulated (x, z) pairs; inverse() interpolates the same table the other
/// way. Outside the grid both maps extrapolate linearly in latent space, so
/// they stay strictly increasing and mutually inverse on the whole line.
class NormalScoreMap {
 public:
  static constexpr int kGridSize = 512;

  /// Fits one map per row of `sample` (rows are dimensions, columns are
  /// draws; at least two columns). A zero-variance dimension either throws
  /// DegenerateSampleError or, with identity_on_degenerate, falls back to the
  /// identity map for that dimension and warns on stderr.
  static NormalScoreMap fit(const Eigen::MatrixXd& sample,
                            bool identity_on_degenerate = true);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;  // column-wise
  Eigen::VectorXd inverse(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd inverse(const Eigen::MatrixXd& z) const;  // column-wise

  /// Scalar maps for a single dimension.
  double forward(int dim, double x) const { return dims_.at(dim).forward(x); }
  double inverse(int dim, double z) const { return dims_.at(dim).inverse(z); }

  int dim() const { return static_cast<int>(dims_.size()); }
  bool identity_dimension(int i) const { return dims_.at(i).identity; }
  double bandwidth(int i) const { return dims_.at(i).bandwidth; }

  /// Fitted table for dimension i (empty for identity dimensions).
  const Eigen::VectorXd& grid_x(int i) const { return dims_.at(i).x; }
  const Eigen::VectorXd& grid_cdf(int i) const { return dims_.at(i).cdf; }
  const Eigen::VectorXd& grid_z(int i) const { return dims_.at(i).z; }

 private:
  struct DimMap {
    Eigen::VectorXd x, cdf, z;  // strictly increasing after de-duplication
    double bandwidth = 0.0;
    bool identity = false;

    double forward(double v) const;
    double inverse(double v) const;
  };

  static DimMap fit_dimension(const Eigen::VectorXd& sample,
                              Eigen::Index dim_index);

  std::vector<DimMap> dims_;
};

}  // namespace enda::transform
