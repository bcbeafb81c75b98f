#pragma once

// Least-squares identification of (sigma, beta, s) together with the
// amplitude and width of the exciting pulse from a measured displacement
// trajectory.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "frictobs/friction.hpp"
#include "frictobs/observer.hpp"
#include "frictobs/plant.hpp"

namespace frictobs {

inline constexpr std::size_t kThetaSize = 5;

/// Free parameters, in order: sigma, beta, s_scale, pulse amplitude, pulse width.
struct Theta {
  double sigma = 0.0;
  double beta = 0.0;
  double s_scale = 0.0;
  double amplitude = 0.0;
  double width = 0.0;

  std::array<double, kThetaSize> to_array() const { return {sigma, beta, s_scale, amplitude, width}; }
  static Theta from_array(const std::array<double, kThetaSize>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

struct FitProblem {
  MeasuredSeries measured;
  PlantParams plant;
  FrictionParams base;  // c_f, z_floor and kappa are held; the rest come from theta
  double pulse_start = 0.0;
  double pulse_sign = 1.0;  // theta carries the amplitude magnitude
  Theta lower;
  Theta upper;
  std::vector<double> weights;  // empty: uniform
  double deadband = kDefaultDeadband;
  double v_max = 1e3;
  int max_iterations = 2000;
  double tolerance = 1e-8;  // relative simplex diameter
  double residual_floor = 1e-12;  // [m]; a residual this small is an exact fit

  void validate() const {
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t i = 0; i < kThetaSize; ++i) {
      if (!(lo[i] > 0.0) || !std::isfinite(hi[i]) || !(hi[i] >= lo[i])) {
        throw std::invalid_argument("FitProblem: bounds must be finite, positive and ordered");
      }
    }
    if (!weights.empty() && weights.size() != measured.size()) {
      throw std::invalid_argument("FitProblem: weights length must match measured length");
    }
    if (measured.size() < 2) throw std::invalid_argument("FitProblem: need at least two samples");
    uniform_step(measured);
  }

  bool within_bounds(const Theta& th) const {
    const auto x = th.to_array();
    const auto lo = lower.to_array();
    const auto hi = upper.to_array();
    for (std::size_t i = 0; i < kThetaSize; ++i) {
      if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
    }
    return true;
  }
};

struct FitResult {
  Theta theta_hat;
  double rms_residual = 0.0;  // [m]
  int iterations = 0;
  bool converged = false;
  bool beta_insensitive = false;
  std::vector<double> best_history;  // best residual after each iteration
};

/// Friction parameters implied by theta. kappa is kept consistent with s.
inline FrictionParams friction_from(const Theta& th, const FrictionParams& base) {
  FrictionParams p = base;
  p.sigma = th.sigma;
  p.beta = th.beta;
  p.s_scale = th.s_scale;
  p.kappa = std::max(base.kappa, default_kappa(th.s_scale, base.c_f, base.z_floor));
  return p;
}

/// Weighted RMS displacement residual; +inf when the simulation diverges.
inline double residual(const Theta& th, const FitProblem& problem) {
  if (!problem.within_bounds(th)) {
    throw std::invalid_argument("residual: theta outside bounds");
  }
  const double dt = problem.measured[1].t - problem.measured[0].t;
  SimConfig cfg;
  cfg.dt = dt;
  cfg.t_end = static_cast<double>(problem.measured.size() - 1) * dt;
  cfg.x0 = problem.measured.front().x;
  cfg.v_max = problem.v_max;
  cfg.deadband = problem.deadband;
  ImpulseTrain input{{Pulse{problem.pulse_start, th.width, problem.pulse_sign * th.amplitude}}};

  Trajectory sim;
  try {
    sim = simulate(problem.plant, friction_from(th, problem.base), input, cfg);
  } catch (const SimulationDiverged&) {
    return std::numeric_limits<double>::infinity();
  }
  const std::size_t n = std::min(sim.size(), problem.measured.size());
  double acc = 0.0;
  double wsum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = problem.weights.empty() ? 1.0 : problem.weights[k];
    const double e = sim[k].x - problem.measured[k].x;
    acc += w * e * e;
    wsum += w;
  }
  if (n < problem.measured.size() || !(wsum > 0.0)) return std::numeric_limits<double>::infinity();
  const double r = std::sqrt(acc / wsum);
  return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

namespace detail {

// Search runs in log coordinates relative to theta0 so parameters spanning
// decades share one simplex scale; bounds become a box in that space.
struct LogBox {
  std::array<double, kThetaSize> origin;
  std::array<double, kThetaSize> lo;
  std::array<double, kThetaSize> hi;

  using Point = std::array<double, kThetaSize>;

  Point project(Point p) const {
    for (std::size_t i = 0; i < kThetaSize; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  }
  Theta to_theta(const Point& p) const {
    Point a;
    for (std::size_t i = 0; i < kThetaSize; ++i) {
      a[i] = origin[i] * std::exp(p[i]);
    }
    return Theta::from_array(a);
  }
};

}  // namespace detail

/// Nelder-Mead simplex with box projection. Returns the best point seen even
/// when the iteration budget runs out.
inline FitResult fit(const FitProblem& problem, const Theta& theta0) {
  problem.validate();
  if (!problem.within_bounds(theta0)) throw std::invalid_argument("fit: theta0 outside bounds");

  using Point = detail::LogBox::Point;
  constexpr std::size_t n = kThetaSize;
  detail::LogBox box;
  box.origin = theta0.to_array();
  const auto lo = problem.lower.to_array();
  const auto hi = problem.upper.to_array();
  for (std::size_t i = 0; i < n; ++i) {
    box.lo[i] = std::log(lo[i] / box.origin[i]);
    box.hi[i] = std::log(hi[i] / box.origin[i]);
  }
  auto eval = [&](const Point& p) {
    Theta th = box.to_theta(p);
    // exp(log(a/b)) * b can miss a bound by an ulp.
    auto a = th.to_array();
    for (std::size_t i = 0; i < n; ++i) a[i] = std::clamp(a[i], lo[i], hi[i]);
    return residual(Theta::from_array(a), problem);
  };

  std::vector<Point> simplex(n + 1);
  std::vector<double> values(n + 1);
  simplex[0].fill(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Point p{};
    // 10% step, turned inward when it would leave the box.
    p[i] = (box.hi[i] >= 0.1) ? 0.1 : -0.1;
    simplex[i + 1] = box.project(p);
  }
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  FitResult result;
  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Point> s(n + 1);
    std::vector<double> v(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      s[k] = simplex[order[k]];
      v[k] = values[order[k]];
    }
    simplex.swap(s);
    values.swap(v);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      for (std::size_t i = 0; i < n; ++i) d = std::max(d, std::abs(simplex[k][i] - simplex[0][i]));
    }
    return d;
  };
  auto along = [&](const Point& c, const Point& w, double t) {
    Point p;
    for (std::size_t i = 0; i < n; ++i) p[i] = c[i] + t * (w[i] - c[i]);
    return box.project(p);
  };

  sort_simplex();
  int it = 0;
  for (; it < problem.max_iterations; ++it) {
    // Log coordinates make the diameter a relative measure on theta.
    if (diameter() < problem.tolerance || values[0] <= problem.residual_floor) {
      result.converged = true;
      break;
    }
    Point centroid{};
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
    }
    const Point reflected = along(centroid, simplex[n], -1.0);
    const double fr = eval(reflected);
    if (fr < values[0]) {
      const Point expanded = along(centroid, simplex[n], -2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const Point contracted = along(centroid, outside ? reflected : simplex[n], 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          simplex[k] = along(simplex[0], simplex[k], 0.5);
          values[k] = eval(simplex[k]);
        }
      }
    }
    sort_simplex();
    result.best_history.push_back(values[0]);
  }
  if (!result.converged && diameter() < problem.tolerance) result.converged = true;

  auto best = box.to_theta(simplex[0]).to_array();
  for (std::size_t i = 0; i < n; ++i) best[i] = std::clamp(best[i], lo[i], hi[i]);
  result.theta_hat = Theta::from_array(best);
  result.rms_residual = values[0];
  result.iterations = it;

  // Residual change across the whole beta range, relative to the optimum.
  Theta at_lo = result.theta_hat;
  Theta at_hi = result.theta_hat;
  at_lo.beta = problem.lower.beta;
  at_hi.beta = problem.upper.beta;
  const double spread = std::max(std::abs(residual(at_lo, problem) - result.rms_residual),
                                 std::abs(residual(at_hi, problem) - result.rms_residual));
  result.beta_insensitive = spread < 0.01 * std::max(result.rms_residual, 1e-300);
  return result;
}

/// `count` starting points log-uniform within a factor `spread` of theta0,
/// clipped to the bounds. The first point is theta0 itself.
inline std::vector<Theta> perturbed_starts(const Theta& theta0, const FitProblem& problem, std::size_t count,
                                           unsigned long long seed, double spread = 2.0) {
  if (!(spread >= 1.0)) throw std::invalid_argument("perturbed_starts: spread must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto lo = problem.lower.to_array();
  const auto hi = problem.upper.to_array();
  const double log_spread = std::log(spread);
  std::vector<Theta> out;
  for (std::size_t k = 0; k < count; ++k) {
    auto a = theta0.to_array();
    if (k > 0) {
      for (std::size_t i = 0; i < kThetaSize; ++i) {
        a[i] = std::clamp(a[i] * std::exp(log_spread * unit(rng)), lo[i], hi[i]);
      }
    }
    out.push_back(Theta::from_array(a));
  }
  return out;
}

/// Independent fits from several starting points, run concurrently; returns
/// the one with the smallest residual (first on ties).
inline FitResult fit_multistart(const FitProblem& problem, const std::vector<Theta>& starts) {
  if (starts.empty()) throw std::invalid_argument("fit_multistart: no starting points");
  std::vector<std::future<FitResult>> jobs;
  jobs.reserve(starts.size());
  for (const Theta& th : starts) {
    jobs.push_back(std::async(std::launch::async, [problem, th] { return fit(problem, th); }));
  }
  FitResult best;
  bool have = false;
  for (auto& job : jobs) {
    FitResult r = job.get();
    if (!have || r.rms_residual < best.rms_residual) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace frictobs
