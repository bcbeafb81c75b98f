#include <cmath>
#include <random>
#include <stdexcept>

#include <gtest/gtest.h>

#include "frictobs/config.hpp"
#include "frictobs/observer.hpp"
#include "oracles.hpp"

using namespace frictobs;

namespace {

ObserverConfig paper_config(double sob = 1.0) {
  ObserverConfig cfg;
  cfg.m = 0.052;
  cfg.friction.sigma = 0.1 * sob;
  cfg.friction.beta = 0.1;
  cfg.gains = design_gains({-350.0, -10.0}, cfg.m, sob);
  return cfg;
}

void expect_matrix_near(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b, double tol) {
  EXPECT_LE((a - b).norm(), tol * b.norm()) << "got\n" << a << "\nexpected\n" << b;
}

Eigen::Matrix2d row_major(std::array<double, 4> v) {
  Eigen::Matrix2d m;
  m << v[0], v[1], v[2], v[3];
  return m;
}

}  // namespace

TEST(RegularForm, AssembleBlocks) {
  const RegularForm rf = assemble(1.0, 0.0, 0.0);
  Eigen::Matrix2d a22;
  a22 << 0.0, -1.0, 0.0, 0.0;
  EXPECT_EQ(rf.a22, a22);
  EXPECT_EQ(rf.a12, Eigen::RowVector2d(1.0, 0.0));
  EXPECT_EQ(rf.b_z, Eigen::Vector2d(1.0, 0.0));
  EXPECT_EQ(rf.a11, 0.0);
  EXPECT_EQ(rf.b_w, 0.0);
  EXPECT_TRUE(rf.a21.isZero());
}

TEST(RegularForm, ObservableForAnyStiffness) {
  for (double phi : {0.0, 1.0, 500.0, 1e5}) EXPECT_TRUE(assemble(0.052, phi, 0.0).observable()) << phi;
}

TEST(RegularForm, RejectsInvalid) {
  EXPECT_THROW(assemble(0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(assemble(1.0, 0.5, 1.0), std::invalid_argument);
}

// Reference values from an independent matrix exponential of the augmented system.
TEST(StepMaps, FrozenReferenceValues) {
  struct Case {
    Eigen::Matrix2d f;
    std::array<double, 4> phi, gamma, gamma1;
  };
  const Case cases[] = {
      {row_major({-360.0, -1.0 / 0.052, 682.0, 0.0}),
       {0.833815256311011, -0.00879486278324901, 0.3119010137451429, 0.9984550876134325},
       {0.00045733286472894846, -2.2652674289845946e-06, 8.033544410150965e-05, 0.0004997386709995401},
       {1.1779390630719891e-07, -3.831803525805351e-10, 1.3589108023916086e-08, 1.2496704250750657e-07}},
      {row_major({-360.0, -1.0 / 0.052, 182.0, 0.0}),
       {0.8348818602273405, -0.008798385657436366, 0.08326792186197775, 0.9995876397345492},
       {0.0004575160541866911, -2.2657157442350344e-06, 2.1442733803440357e-05, 0.0004999302529187709},
       {1.1781721870022181e-07, -3.832257210391075e-10, 3.6268482239141116e-09, 1.2499120419807387e-07}},
      {row_major({-1.0, -50.0, 50.0, -2.0}),
       {0.9991878495052187, -0.024978655156741764, 0.024978655156741764, 0.9986882764020838},
       {0.0004998229651585334, -6.246550592457096e-06, 6.246550592457094e-06, 0.0004996980341466845},
       {1.2497266159304065e-07, -1.0412435974686093e-09, 1.0412435974686087e-09, 1.249518367210913e-07}},
  };
  for (const Case& c : cases) {
    const StepMaps s = step_maps(c.f, 5e-4);
    expect_matrix_near(s.phi, row_major(c.phi), 1e-12);
    expect_matrix_near(s.gamma, row_major(c.gamma), 1e-12);
    expect_matrix_near(s.gamma1, row_major(c.gamma1), 1e-12);
  }
}

// Property: closed-form maps agree with the augmented exponential for real,
// complex, repeated and nearly repeated spectra.
TEST(StepMaps, MatchMatrixExponential) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::Matrix2d> mats;
  for (int i = 0; i < 200; ++i) mats.push_back(Eigen::Matrix2d::NullaryExpr([&](Eigen::Index, Eigen::Index) {
    return 300.0 * n(rng);
  }));
  Eigen::Matrix2d jordan;
  jordan << -5.0, 1.0, 0.0, -5.0;
  mats.push_back(jordan);
  mats.push_back(Eigen::Matrix2d::Zero());
  mats.push_back(-3.0 * Eigen::Matrix2d::Identity());
  Eigen::Matrix2d near;
  near << -5.0, 1.0, 1e-14, -5.0;
  mats.push_back(near);
  const ObserverGains g = design_gains({-350.0, -10.0}, 0.052, 0.0);
  for (double phi : {0.0, 1.0, 100.0, 1000.0, 5000.0}) mats.push_back(oracle::observer_matrix(g, 0.052, phi));

  for (const auto& f : mats) {
    for (double t : {5e-4, 1e-2, 1e-6}) {
      const StepMaps s = step_maps(f, t);
      const oracle::Maps ref = oracle::exact_maps(f, t);
      expect_matrix_near(s.phi, ref.phi, 1e-10);
      expect_matrix_near(s.gamma, ref.gamma, 1e-10);
      expect_matrix_near(s.gamma1, ref.gamma1, 1e-10);
    }
  }
}

TEST(ObserverDynamics, InputVectors) {
  const Eigen::Vector2d l(360.0, -182.0);
  const ObserverDynamics d = observer_dynamics(l, 0.052, 100.0);
  EXPECT_NEAR(d.g_x(0), 182.0 / 0.052 - 360.0 * 360.0, 1e-9);
  EXPECT_NEAR(d.g_x(1), 100.0 * 360.0 + 182.0 * 360.0, 1e-9);
  EXPECT_DOUBLE_EQ(d.b_u(0), 1.0 / 0.052);
  EXPECT_EQ(d.b_u(1), 0.0);
  EXPECT_EQ(d.f, oracle::observer_matrix({360.0, -182.0}, 0.052, 100.0));
}

TEST(ObserverConfig, RejectsUnstableGains) {
  ObserverConfig cfg = paper_config();
  cfg.gains.l1 = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = paper_config();
  cfg.gains.l2 = cfg.friction.sigma_over_beta();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ObserverStep, FirstSampleInitializes) {
  const ObserverConfig cfg = paper_config();
  const ObserverStep s = observer_step({}, 0.0, 2e-3, 0.0, 5e-4, cfg);
  EXPECT_TRUE(s.state.started);
  EXPECT_EQ(s.sample.x_int, 2e-3);
  EXPECT_DOUBLE_EQ(s.sample.w2_tilde, cfg.gains.l1 * 2e-3);
  EXPECT_DOUBLE_EQ(s.sample.w3_tilde, cfg.gains.l2 * 2e-3);
}

TEST(ObserverStep, InvalidInputs) {
  const ObserverConfig cfg = paper_config();
  EXPECT_THROW(observer_step({}, 0.0, std::nan(""), 0.0, 5e-4, cfg), std::invalid_argument);
  EXPECT_THROW(observer_step({}, 0.0, 0.0, 0.0, 0.0, cfg), std::invalid_argument);
}

// Frozen stiffness, plant at rest: error decays at the slow pole.
TEST(ObserverStep, FrozenStiffnessConvergesAtSlowPole) {
  ObserverConfig cfg = paper_config();
  const double phi = 300.0;
  cfg.frozen_phi = phi;
  const double dt = 5e-4;
  const double x0 = -1e-3;
  const double f = 0.05;
  ObserverState st;
  st.z_tilde = {0.3, -0.2};
  std::vector<double> err;
  for (int k = 0; k <= 2000; ++k) {
    const ObserverStep s = observer_step(st, k * dt, x0, f, dt, cfg);
    st = s.state;
    EXPECT_EQ(s.sample.phi, phi);
    err.push_back(std::hypot(s.sample.w2_tilde, s.sample.w3_tilde - f));
  }
  const EigenPair e = eigenvalues(cfg.gains, cfg.m, phi - 1.0, 1.0);
  const auto horizon = static_cast<std::size_t>(10.0 / std::abs(e.slow.real()) / dt);
  EXPECT_LE(err[horizon], 1e-3 * err[0]);
  const std::size_t a = horizon / 2;
  const double slope = std::log(err[horizon] / err[a]) / ((horizon - a) * dt);
  EXPECT_NEAR(slope, e.slow.real(), 0.02 * std::abs(e.slow.real()));
}

// A moving linear plant with frozen stiffness: once transients die out the
// friction estimate lags by the half step of the held input.
TEST(ObserverStep, TracksRamp) {
  ObserverConfig cfg = paper_config();
  const double phi = 200.0;
  cfg.frozen_phi = phi;
  const double v = 0.01;
  const double dt = 5e-4;
  // Linear plant with constant velocity needs f' = phi v and u = f.
  ObserverState st;
  double w2 = 0.0, w3 = 0.0, f = 0.0;
  for (int k = 0; k <= 4000; ++k) {
    const double t = k * dt;
    f = 0.01 + phi * v * t;
    const ObserverStep s = observer_step(st, t, v * t, f, dt, cfg);
    st = s.state;
    w2 = s.sample.w2_tilde;
    w3 = s.sample.w3_tilde;
  }
  EXPECT_NEAR(w2, v, 1e-4 * v);
  EXPECT_NEAR(f - w3, 0.5 * phi * v * dt, 1e-3 * phi * v * dt);
}

TEST(ObserverStep, TrackerFollowsMeasuredDisplacement) {
  const ObserverConfig cfg = paper_config();
  SimConfig sim;
  sim.t_end = 0.5;
  sim.noise_std = 0.0;
  FrictionParams truth = cfg.friction;
  const Trajectory traj = simulate({}, truth, ImpulseTrain{{{0.1, 0.005, 2.0}}}, sim);
  const std::vector<EstimateSample> est = run_observer(measure(traj, sim), cfg);
  ASSERT_EQ(est.size(), traj.size());
  // Before motion the tracker reports the virgin-branch cap plus sigma/beta.
  EXPECT_NEAR(est[10].phi, cfg.friction.kappa * 0.5 + cfg.friction.sigma_over_beta(), 1e-6 * cfg.friction.kappa);
  double err = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj[k].t > 0.3) err = std::max(err, std::abs(est[k].w2_tilde - traj[k].v));
  }
  EXPECT_LT(err, 1e-3);
}

TEST(RunObserver, EmptyAndSingleSample) {
  const ObserverConfig cfg = paper_config();
  EXPECT_TRUE(run_observer({}, cfg).empty());
  const auto one = run_observer({{0.0, 1e-3, 0.0}}, cfg);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].x_int, 1e-3);
}

TEST(RunObserver, RejectsNonUniformGrid) {
  const ObserverConfig cfg = paper_config();
  MeasuredSeries m{{0.0, 0.0, 0.0}, {1e-3, 0.0, 0.0}, {2.5e-3, 0.0, 0.0}};
  try {
    run_observer(m, cfg);
    FAIL();
  } catch (const GridError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(ErrorMetrics, ZeroEstimatesGiveDisplacementFromStart) {
  MeasuredSeries m{{0.0, 1.0, 0.0}, {0.1, 1.5, 0.0}, {0.2, 3.0, 0.0}};
  std::vector<EstimateSample> est(3);
  for (auto& e : est) e.x_int = 1.0;
  const ErrorMetrics em = error_metrics(m, est);
  EXPECT_EQ(em.e_obs, (std::vector<double>{0.0, 0.5, 2.0}));
  EXPECT_TRUE(em.e_model.empty());
  EXPECT_DOUBLE_EQ(em.rms_obs, std::sqrt((0.25 + 4.0) / 3.0));
}

TEST(ErrorMetrics, PerfectVelocityGivesZeroDrift) {
  // Plant positions follow the same rectangle rule as x_int.
  SimConfig sim;
  sim.t_end = 1.0;
  sim.noise_std = 0.0;
  const Trajectory traj = simulate({}, {}, ImpulseTrain{{{0.1, 0.005, 2.0}}}, sim);
  const MeasuredSeries meas = measure(traj, sim);
  std::vector<EstimateSample> est(traj.size());
  double x_int = traj[0].x;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k > 0) x_int += traj[k].v * sim.dt;
    est[k] = {traj[k].t, traj[k].v, traj[k].f, 0.0, x_int};
  }
  const ErrorMetrics em = error_metrics(meas, est, traj);
  for (double e : em.e_obs) EXPECT_NEAR(e, 0.0, 1e-15);
  EXPECT_EQ(em.rms_model, 0.0);
}

TEST(ErrorMetrics, LengthMismatch) {
  EXPECT_THROW(error_metrics({{0.0, 0.0, 0.0}}, {}), std::invalid_argument);
  EXPECT_THROW(rms_velocity_error({}, Trajectory(2)), std::invalid_argument);
}
