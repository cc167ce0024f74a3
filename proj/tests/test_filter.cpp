#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "enda/errors.hpp"
#include "enda/filter.hpp"
#include "enda/model.hpp"
#include "enda/transform.hpp"
#include "support.hpp"

using namespace enda;
using namespace enda::filter;

namespace {

Eigen::MatrixXd random_ensemble(int d, int n, unsigned seed, double spread = 1.0,
                                double offset = 0.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(offset, spread);
  return Eigen::MatrixXd::NullaryExpr(
      d, n, [&](Eigen::Index, Eigen::Index) { return nd(gen); });
}

Eigen::MatrixXd permute_columns(const Eigen::MatrixXd& m,
                                const std::vector<int>& perm) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t j = 0; j < perm.size(); ++j) out.col(j) = m.col(perm[j]);
  return out;
}

}  // namespace

TEST_CASE("localization matrix structure") {
  const Eigen::MatrixXd L = localization_matrix(40, 1.0);
  for (int i = 0; i < 40; ++i) CHECK(L(i, i) == 1.0);
  // 1-based (1, 40) has cyclic distance 1
  CHECK(L(0, 39) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(L(0, 39) == doctest::Approx(0.60653065971263342).epsilon(1e-12));
  CHECK((L - L.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // entries depend only on the cyclic distance
  for (int k : {3, 17}) {
    for (int i = 0; i < 40; ++i) {
      CHECK(L(i, (i + k) % 40) == L(0, k));
    }
  }
  // no-localization limit
  const Eigen::MatrixXd wide = localization_matrix(40, 1e6);
  CHECK(wide.minCoeff() >= 1.0 - 1e-6);
}

TEST_CASE("inflation about the mean") {
  const Eigen::MatrixXd ens = random_ensemble(6, 20, 41);

  const Eigen::MatrixXd same = inflate(ens, 1.0);
  CHECK((same - ens).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd big = inflate(ens, 1.05);
  const Eigen::VectorXd m0 = ens.rowwise().mean();
  const Eigen::VectorXd m1 = big.rowwise().mean();
  CHECK((m0 - m1).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i < 6; ++i) {
    const double s0 = std::sqrt(
        (ens.row(i).array() - m0[i]).square().sum() / (ens.cols() - 1));
    const double s1 = std::sqrt(
        (big.row(i).array() - m1[i]).square().sum() / (big.cols() - 1));
    CHECK(s1 == doctest::Approx(1.05 * s0).epsilon(1e-12));
  }
}

TEST_CASE("sample covariance conventions") {
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(3, 5, 2.5);
  CHECK(sample_cov(constant, constant).cwiseAbs().maxCoeff() == 0.0);

  // two samples {0, 2} of a scalar: variance 2 under 1/(n-1)
  Eigen::MatrixXd ab(1, 2);
  ab << 0.0, 2.0;
  CHECK(sample_cov(ab, ab)(0, 0) == 2.0);

  const Eigen::MatrixXd A = random_ensemble(4, 9, 42);
  const Eigen::MatrixXd B = random_ensemble(3, 9, 43);
  const Eigen::MatrixXd AB = sample_cov(A, B);
  const Eigen::MatrixXd BA = sample_cov(B, A);
  CHECK(AB.rows() == 4);
  CHECK(AB.cols() == 3);
  CHECK((AB - BA.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("vanilla update: gain vanishes as R grows") {
  const int d = 5, n = 30;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 44);
  const Eigen::MatrixXd obs = random_ensemble(d, n, 45, 1e6);
  const Eigen::VectorXd r_diag = Eigen::VectorXd::Constant(d, 1e12);
  const Eigen::MatrixXd analysis = vanilla_update(forecast, obs, r_diag);
  const double max_innov = (obs - forecast).cwiseAbs().maxCoeff();
  CHECK((analysis - forecast).cwiseAbs().maxCoeff() <= 1e-6 * max_innov);
}

TEST_CASE("vanilla update matches the scalar Kalman oracle") {
  const int n = 12;
  const Eigen::MatrixXd forecast = random_ensemble(1, n, 46, 2.0, 1.0);
  const Eigen::MatrixXd obs = random_ensemble(1, n, 47, 1.0, 0.5);
  const double r = 0.49;
  const Eigen::MatrixXd analysis =
      vanilla_update(forecast, obs, Eigen::VectorXd::Constant(1, r));

  const double mean = forecast.row(0).mean();
  const double p =
      (forecast.row(0).array() - mean).square().sum() / double(n - 1);
  for (int j = 0; j < n; ++j) {
    const double expected =
        forecast(0, j) + p / (p + r) * (obs(0, j) - forecast(0, j));
    CHECK(analysis(0, j) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("vanilla update contracts ensemble covariance on average") {
  std::mt19937_64 gen(48);
  double mean_delta = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd forecast = random_ensemble(5, 40, 1000 + trial, 1.5);
    Eigen::MatrixXd obs(5, 40);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int j = 0; j < 40; ++j) {
      for (int i = 0; i < 5; ++i) obs(i, j) = nd(gen);
    }
    const Eigen::MatrixXd analysis =
        vanilla_update(forecast, obs, Eigen::VectorXd::Constant(5, 1.0));
    mean_delta += sample_cov(analysis, analysis).trace() -
                  sample_cov(forecast, forecast).trace();
  }
  CHECK(mean_delta / 100.0 < 0.0);
}

TEST_CASE("cg update: zero innovation is an exact fixed point") {
  const int d = 6, n = 15;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 49);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(d, 0.7);
  const Eigen::MatrixXd obs = y.replicate(1, n);
  const Eigen::MatrixXd L = localization_matrix(d, 2.0);
  const Eigen::MatrixXd analysis = cg_update(forecast, obs, y, L);
  CHECK((analysis - forecast).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cg update matches the scalar oracle") {
  const int n = 10;
  const Eigen::MatrixXd forecast = random_ensemble(1, n, 50, 1.5);
  const Eigen::MatrixXd obs = random_ensemble(1, n, 51, 2.0, 0.3);
  Eigen::VectorXd y(1);
  y << 1.1;
  const Eigen::MatrixXd L = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd analysis = cg_update(forecast, obs, y, L);

  const double mx = forecast.row(0).mean();
  const double my = obs.row(0).mean();
  double cxy = 0.0, cy = 0.0;
  for (int j = 0; j < n; ++j) {
    cxy += (forecast(0, j) - mx) * (obs(0, j) - my);
    cy += (obs(0, j) - my) * (obs(0, j) - my);
  }
  cxy /= n - 1;
  cy /= n - 1;
  for (int j = 0; j < n; ++j) {
    const double expected = forecast(0, j) + cxy / cy * (y[0] - obs(0, j));
    CHECK(analysis(0, j) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("all-ones localization reproduces the unlocalized update bitwise") {
  const int d = 5, n = 25;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 52);
  const Eigen::MatrixXd obs = random_ensemble(d, n, 53, 1.0, 0.2);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d, d);
  const Eigen::MatrixXd huge_radius = localization_matrix(d, 1e300);
  const Eigen::MatrixXd a = cg_update(forecast, obs, y, ones);
  const Eigen::MatrixXd b = cg_update(forecast, obs, y, huge_radius);
  CHECK(huge_radius.minCoeff() == 1.0);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear-Gaussian equivalence, exact construction") {
  std::mt19937_64 gen(54);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + int(gen() % 4);         // d <= 5
    const int n = 2 * d + 2 + int(gen() % (48 - 2 * d));  // n <= 50
    const auto inst = oracle::make_equivalence_instance(d, n, gen);

    // conditional-Gaussian route: y_j = x_j + eps_j, reference y = truth
    const Eigen::MatrixXd obs_cg = inst.forecast + inst.eps;
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d, d);
    const Eigen::MatrixXd a_cg =
        cg_update(inst.forecast, obs_cg, inst.truth, ones);

    // classic route: y_j = truth - eps_j so the innovations coincide
    const Eigen::MatrixXd obs_v = inst.truth.replicate(1, n) - inst.eps;
    const Eigen::MatrixXd a_v = vanilla_update(inst.forecast, obs_v, inst.r_diag);

    CHECK((a_cg - a_v).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("linear-Gaussian equivalence, statistical at large n") {
  const int d = 3, n = 2000;
  std::mt19937_64 gen(55);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 56);
  const Eigen::VectorXd truth = Eigen::VectorXd::Zero(d);
  const double r = 0.1;
  Eigen::MatrixXd eps(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) eps(i, j) = std::sqrt(r) * nd(gen);
  }
  const Eigen::MatrixXd a_cg =
      cg_update(forecast, forecast + eps, truth, Eigen::MatrixXd::Ones(d, d));
  const Eigen::MatrixXd a_v = vanilla_update(
      forecast, truth.replicate(1, n) - eps, Eigen::VectorXd::Constant(d, r));
  const double mean_abs_diff = (a_cg - a_v).cwiseAbs().mean();
  CHECK(mean_abs_diff <= 1e-2);
}

TEST_CASE("ns update: zero innovation through the invertible map") {
  const int d = 4, n = 30;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 57, 1.3, 2.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(d, 2.4);
  const Eigen::MatrixXd obs = y.replicate(1, n);
  const Eigen::MatrixXd L = localization_matrix(d, 1.0);
  const Eigen::MatrixXd analysis = ns_update(forecast, obs, y, L, 1.0);
  CHECK((analysis - forecast).cwiseAbs().maxCoeff() <= 1e-5);
}

TEST_CASE("ns update is transparent for Gaussian data") {
  // biased Gaussian forecast, identity map, Gaussian noise, large n: the
  // normal-score transform is near-affine, so ns and cg nearly coincide
  const int d = 6, n = 2000;
  const Eigen::VectorXd truth = Eigen::VectorXd::Constant(d, 1.0);
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 58, 1.0, 3.0);
  std::mt19937_64 gen(59);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd eps(d, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) eps(i, j) = nd(gen);
  }
  Eigen::VectorXd ref(d);
  for (int i = 0; i < d; ++i) ref[i] = truth[i] + nd(gen);
  const Eigen::MatrixXd obs = forecast + eps;
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(d, d);

  const Eigen::MatrixXd a_cg = cg_update(forecast, obs, ref, ones);
  const Eigen::MatrixXd a_ns = ns_update(forecast, obs, ref, ones, 1.0);

  const double rmse_cg = metrics::rmse(a_cg, truth);
  const double rmse_ns = metrics::rmse(a_ns, truth);
  CHECK(std::abs(rmse_ns - rmse_cg) <= 0.05 * std::max(rmse_cg, rmse_ns));
}

TEST_CASE("ns update stays bounded under heavy-tailed observations") {
  const int d = 40, n = 100;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 60, 3.0, 2.0);
  RngStream truth_rng(61, RngStreamId::truth_observations);
  RngStream member_rng(61, RngStreamId::member_observations);
  const observation::ObservationModel model{
      observation::ObservationMap::linear_identity,
      observation::NoiseDistribution::generalized_pareto(0.5, 1.0, 2.0)};
  FilterConfig cfg;
  cfg.variant = Variant::ns;
  cfg.inflation = 1.05;
  cfg.localization_radius = 1.0;
  const Eigen::VectorXd truth = Eigen::VectorXd::Constant(d, 2.0);

  const Eigen::MatrixXd analysis =
      ns_enkf_step(forecast, model, truth, cfg, truth_rng, member_rng);
  REQUIRE(analysis.allFinite());

  // bounded by the forecast hull pushed out ten latent sigmas
  const auto psi_x = transform::NormalScoreMap::fit(forecast);
  for (int i = 0; i < d; ++i) {
    CHECK(analysis.row(i).minCoeff() >= psi_x.inverse(i, -10.0));
    CHECK(analysis.row(i).maxCoeff() <= psi_x.inverse(i, 10.0));
  }
}

TEST_CASE("permutation equivariance of all three updates") {
  const int d = 5, n = 12;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 62);
  const Eigen::MatrixXd obs = random_ensemble(d, n, 63, 1.0, 0.4);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(d, 0.2);
  const Eigen::MatrixXd L = localization_matrix(d, 1.5);
  const Eigen::VectorXd r_diag = Eigen::VectorXd::Constant(d, 1.0);

  std::vector<int> perm = {4, 1, 7, 0, 11, 3, 9, 2, 10, 5, 8, 6};
  const Eigen::MatrixXd pf = permute_columns(forecast, perm);
  const Eigen::MatrixXd po = permute_columns(obs, perm);

  const Eigen::MatrixXd v = vanilla_update(forecast, obs, r_diag);
  const Eigen::MatrixXd pv = vanilla_update(pf, po, r_diag);
  CHECK((permute_columns(v, perm) - pv).cwiseAbs().maxCoeff() <= 1e-9);

  const Eigen::MatrixXd c = cg_update(forecast, obs, y, L);
  const Eigen::MatrixXd pc = cg_update(pf, po, y, L);
  CHECK((permute_columns(c, perm) - pc).cwiseAbs().maxCoeff() <= 1e-9);

  const Eigen::MatrixXd s = ns_update(forecast, obs, y, L, 1.05);
  const Eigen::MatrixXd ps = ns_update(pf, po, y, L, 1.05);
  CHECK((permute_columns(s, perm) - ps).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("updates preserve ensemble shape") {
  const int d = 7, n = 9;
  const Eigen::MatrixXd forecast = random_ensemble(d, n, 64);
  const Eigen::MatrixXd obs = random_ensemble(d, n, 65);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  const Eigen::MatrixXd L = localization_matrix(d, 1.0);
  const auto a = cg_update(forecast, obs, y, L);
  CHECK(a.rows() == d);
  CHECK(a.cols() == n);
  const auto b = ns_update(forecast, obs, y, L, 1.0);
  CHECK(b.rows() == d);
  CHECK(b.cols() == n);
}

TEST_CASE("run_filter: perfect observations pin the ensemble to the truth") {
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(8, 8.0);
  x0[0] += 0.01;
  for (int s = 0; s < 300; ++s) x0 = model::rk4_step(x0, 0.01, 8.0);
  const auto truth = model::generate_truth(x0, 0.01, 100, 8.0);

  FilterConfig cfg;
  cfg.variant = Variant::vanilla;
  cfg.ensemble_size = 5;
  const observation::ObservationModel obs_model{
      observation::ObservationMap::linear_identity,
      observation::NoiseDistribution::none()};
  const Eigen::MatrixXd initial = x0.replicate(1, 5);
  RngStream tr(1, RngStreamId::truth_observations);
  RngStream mr(1, RngStreamId::member_observations);
  const auto result =
      run_filter(truth, cfg, obs_model, initial, 8.0, tr, mr);
  REQUIRE(result.status == RunStatus::completed);
  REQUIRE(result.metrics.cycles.size() == 100);
  for (const auto& c : result.metrics.cycles) {
    CHECK(c.armse <= 1e-6);
  }
}

TEST_CASE("run_filter: vanilla under Pareto noise diverges in finite time") {
  // the benchmark protocol: d = 40, n = 100, heavy-tailed observations
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(40, 8.0);
  x0[0] += 0.01;
  for (int s = 0; s < 900; ++s) x0 = model::rk4_step(x0, 0.01, 8.0);
  const auto truth = model::generate_truth(x0, 0.01, 1000, 8.0, 9.0);

  FilterConfig cfg;
  cfg.variant = Variant::vanilla;
  cfg.ensemble_size = 100;
  cfg.allow_misspecified = true;
  const observation::ObservationModel obs_model{
      observation::ObservationMap::linear_identity,
      observation::NoiseDistribution::generalized_pareto(0.5, 1.0, 2.0)};
  Eigen::MatrixXd initial(40, 100);
  RngStream init(501, RngStreamId::initial_ensemble);
  for (int j = 0; j < 100; ++j) {
    for (int i = 0; i < 40; ++i) {
      initial(i, j) = x0[i] + init.standard_normal();
    }
  }
  RngStream tr(501, RngStreamId::truth_observations);
  RngStream mr(501, RngStreamId::member_observations);
  const auto result =
      run_filter(truth, cfg, obs_model, initial, 8.0, tr, mr);
  CHECK(result.status == RunStatus::diverged);
  REQUIRE(result.diverged_cycle.has_value());
  CHECK(*result.diverged_cycle >= 1);
  CHECK(*result.diverged_cycle <= 1000);
  // metrics recorded through the divergence cycle
  CHECK(int(result.metrics.cycles.size()) == *result.diverged_cycle);
}

TEST_CASE("run_filter: non-assimilation cycles copy the forecast") {
  Eigen::VectorXd x0 = Eigen::VectorXd::Constant(8, 8.0);
  x0[0] += 0.01;
  for (int s = 0; s < 300; ++s) x0 = model::rk4_step(x0, 0.01, 8.0);
  const auto truth = model::generate_truth(x0, 0.01, 30, 8.0);

  FilterConfig cfg;
  cfg.variant = Variant::cg;
  cfg.ensemble_size = 15;
  cfg.assimilation_interval = 3;
  const observation::ObservationModel obs_model{
      observation::ObservationMap::linear_identity,
      observation::NoiseDistribution::gaussian(0.0, 1.0)};
  Eigen::MatrixXd initial(8, 15);
  RngStream init(3, RngStreamId::initial_ensemble);
  for (int j = 0; j < 15; ++j) {
    for (int i = 0; i < 8; ++i) initial(i, j) = x0[i] + init.standard_normal();
  }
  RngStream tr(3, RngStreamId::truth_observations);
  RngStream mr(3, RngStreamId::member_observations);
  const auto result = run_filter(truth, cfg, obs_model, initial, 8.0, tr, mr);
  REQUIRE(result.status == RunStatus::completed);
  for (const auto& c : result.metrics.cycles) {
    if (c.cycle % 3 != 0) {
      CHECK(c.armse == c.frmse);
      CHECK(c.acrps == c.fcrps);
    }
  }
}

TEST_CASE("update input validation") {
  const Eigen::MatrixXd ens = random_ensemble(4, 6, 66);
  CHECK_THROWS_AS(
      vanilla_update(ens, ens, Eigen::VectorXd::Constant(4, 0.0)),
      std::invalid_argument);
  CHECK_THROWS_AS(
      cg_update(ens, random_ensemble(4, 5, 67), Eigen::VectorXd::Zero(4),
                localization_matrix(4, 1.0)),
      std::invalid_argument);
  CHECK_THROWS_AS(inflate(ens, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(localization_matrix(4, 0.0), std::invalid_argument);
}
