#include <cmath>
#include <limits>
#include <stdexcept>

#include <gtest/gtest.h>

#include "frictobs/ident.hpp"

using namespace frictobs;

namespace {

struct Synthetic {
  FitProblem problem;
  Theta truth;
};

Synthetic synthetic(double noise = 0.0) {
  Synthetic s;
  const FrictionParams fp;
  SimConfig sim;
  sim.t_end = 1.0;
  sim.noise_std = noise;
  s.truth = {fp.sigma, fp.beta, fp.s_scale, 2.0, 0.005};
  s.problem.measured = measure(simulate({}, fp, ImpulseTrain{{{0.1, 0.005, 2.0}}}, sim), sim);
  s.problem.base = fp;
  s.problem.pulse_start = 0.1;
  auto scaled = [&](double f) {
    auto a = s.truth.to_array();
    for (double& v : a) v *= f;
    return Theta::from_array(a);
  };
  s.problem.lower = scaled(0.1);
  s.problem.upper = scaled(10.0);
  return s;
}

Theta offset(const Theta& t, std::array<double, kThetaSize> f) {
  auto a = t.to_array();
  for (std::size_t i = 0; i < kThetaSize; ++i) a[i] *= f[i];
  return Theta::from_array(a);
}

}  // namespace

TEST(Residual, ZeroAtTruth) {
  const Synthetic s = synthetic();
  EXPECT_EQ(residual(s.truth, s.problem), 0.0);
  EXPECT_GT(residual(offset(s.truth, {1.1, 1, 1, 1, 1}), s.problem), 0.0);
}

TEST(Residual, OutOfBoundsThrows) {
  const Synthetic s = synthetic();
  EXPECT_THROW(residual(offset(s.truth, {20, 1, 1, 1, 1}), s.problem), std::invalid_argument);
}

TEST(Residual, DivergenceIsInfinite) {
  Synthetic s = synthetic();
  s.problem.v_max = 1e-3;
  EXPECT_EQ(residual(s.truth, s.problem), std::numeric_limits<double>::infinity());
}

TEST(Residual, WeightsSelectSamples) {
  Synthetic s = synthetic();
  const Theta off = offset(s.truth, {1.5, 1, 1, 1, 1});
  s.problem.weights.assign(s.problem.measured.size(), 0.0);
  for (std::size_t k = 0; k < 100; ++k) s.problem.weights[k] = 1.0;  // before the pulse
  EXPECT_EQ(residual(off, s.problem), 0.0);
}

TEST(FitProblem, Validation) {
  Synthetic s = synthetic();
  FitProblem p = s.problem;
  p.lower.sigma = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = s.problem;
  p.weights = {1.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = s.problem;
  p.measured.resize(1);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  EXPECT_THROW(fit(s.problem, offset(s.truth, {100, 1, 1, 1, 1})), std::invalid_argument);
}

TEST(Fit, RecoversGeneratingParameters) {
  const Synthetic s = synthetic();
  const FitResult r = fit(s.problem, offset(s.truth, {1.3, 0.7, 1.2, 1.1, 0.9}));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_hat.sigma, s.truth.sigma, 0.05 * s.truth.sigma);
  EXPECT_NEAR(r.theta_hat.s_scale, s.truth.s_scale, 0.05 * s.truth.s_scale);
  EXPECT_NEAR(r.theta_hat.amplitude, 2.0, 0.05 * 2.0);
  EXPECT_LT(r.rms_residual, 1e-9);
  EXPECT_FALSE(r.beta_insensitive);
}

TEST(Fit, HistoryIsMonotone) {
  const Synthetic s = synthetic();
  const FitResult r = fit(s.problem, offset(s.truth, {1.3, 0.7, 1.2, 1.1, 0.9}));
  ASSERT_FALSE(r.best_history.empty());
  for (std::size_t k = 1; k < r.best_history.size(); ++k) EXPECT_LE(r.best_history[k], r.best_history[k - 1]);
  EXPECT_EQ(static_cast<std::size_t>(r.iterations), r.best_history.size());
}

TEST(Fit, StaysInsideBounds) {
  Synthetic s = synthetic();
  s.problem.upper.sigma = s.truth.sigma * 0.8;  // truth excluded
  const Theta start = offset(s.truth, {0.7, 1, 1, 1, 1});
  const FitResult r = fit(s.problem, start);
  EXPECT_TRUE(s.problem.within_bounds(r.theta_hat));
  EXPECT_NEAR(r.theta_hat.sigma, s.problem.upper.sigma, 0.02 * s.problem.upper.sigma);
}

TEST(Fit, IterationBudget) {
  Synthetic s = synthetic();
  s.problem.max_iterations = 5;
  const FitResult r = fit(s.problem, offset(s.truth, {1.3, 0.7, 1.2, 1.1, 0.9}));
  EXPECT_EQ(r.iterations, 5);
  EXPECT_FALSE(r.converged);
}

TEST(Fit, Deterministic) {
  const Synthetic s = synthetic(1e-7);
  const Theta start = offset(s.truth, {1.3, 0.7, 1.2, 1.1, 0.9});
  const FitResult a = fit(s.problem, start);
  const FitResult b = fit(s.problem, start);
  EXPECT_EQ(a.theta_hat.to_array(), b.theta_hat.to_array());
  EXPECT_EQ(a.rms_residual, b.rms_residual);
  EXPECT_EQ(a.best_history, b.best_history);
}

TEST(Fit, FlagsBetaInsensitivity) {
  // A lag far faster than the motion leaves no trace of beta above the noise.
  FrictionParams fp;
  fp.beta = 1e-6;
  SimConfig sim;
  sim.t_end = 0.5;
  sim.noise_std = 1e-6;
  FitProblem p;
  p.measured = measure(simulate({}, fp, ImpulseTrain{{{0.1, 0.005, 2.0}}}, sim), sim);
  p.base = fp;
  p.pulse_start = 0.1;
  const Theta truth{fp.sigma, fp.beta, fp.s_scale, 2.0, 0.005};
  p.lower = offset(truth, {0.5, 0.5, 0.5, 0.5, 0.5});
  p.upper = offset(truth, {2, 2, 2, 2, 2});
  const FitResult r = fit(p, offset(truth, {1.2, 1.2, 1.1, 1.05, 0.95}));
  EXPECT_TRUE(r.beta_insensitive);
}

TEST(PerturbedStarts, SeededAndBounded) {
  const Synthetic s = synthetic();
  const auto a = perturbed_starts(s.truth, s.problem, 6, 42);
  const auto b = perturbed_starts(s.truth, s.problem, 6, 42);
  const auto c = perturbed_starts(s.truth, s.problem, 6, 43);
  ASSERT_EQ(a.size(), 6u);
  EXPECT_EQ(a[0].to_array(), s.truth.to_array());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].to_array(), b[i].to_array());
    EXPECT_TRUE(s.problem.within_bounds(a[i]));
  }
  EXPECT_NE(a[1].to_array(), c[1].to_array());
  EXPECT_THROW(perturbed_starts(s.truth, s.problem, 2, 1, 0.5), std::invalid_argument);
}

TEST(FitMultistart, PicksBestAndIsDeterministic) {
  const Synthetic s = synthetic();
  const auto starts = perturbed_starts(offset(s.truth, {1.3, 0.7, 1.2, 1.1, 0.9}), s.problem, 3, 7);
  const FitResult a = fit_multistart(s.problem, starts);
  const FitResult b = fit_multistart(s.problem, starts);
  EXPECT_EQ(a.theta_hat.to_array(), b.theta_hat.to_array());
  for (const Theta& t : starts) EXPECT_LE(a.rms_residual, fit(s.problem, t).rms_residual);
  EXPECT_THROW(fit_multistart(s.problem, {}), std::invalid_argument);
}
