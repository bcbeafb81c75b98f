#pragma once

// 1-DOF mass with dynamic friction, driven by rectangular force pulses.
//
//   m x'' + f = u
//
// Integrated with semi-implicit Euler on a fixed grid.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "frictobs/friction.hpp"

namespace frictobs {

struct PlantParams {
  double m = 0.052;  // [kg]

  void validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("PlantParams: m must be > 0");
  }
};

struct Pulse {
  double t_start = 0.0;   // [s]
  double duration = 0.0;  // [s]
  double amplitude = 0.0; // [N]
};

struct ImpulseTrain {
  std::vector<Pulse> pulses;

  void validate() const {
    for (std::size_t i = 0; i < pulses.size(); ++i) {
      const Pulse& p = pulses[i];
      if (!(p.duration > 0.0) || !std::isfinite(p.t_start) || !std::isfinite(p.amplitude)) {
        throw std::invalid_argument("ImpulseTrain: pulse " + std::to_string(i) +
                                    " needs duration > 0 and finite start/amplitude");
      }
      if (i > 0 && p.t_start < pulses[i - 1].t_start + pulses[i - 1].duration) {
        throw std::invalid_argument("ImpulseTrain: pulses must be sorted and non-overlapping");
      }
    }
  }

  /// Mean force over [t0, t0 + dt). Keeps the input continuous in pulse
  /// start and width even though the grid is discrete.
  double average(double t0, double dt) const {
    double impulse = 0.0;
    for (const Pulse& p : pulses) {
      const double lo = std::max(t0, p.t_start);
      const double hi = std::min(t0 + dt, p.t_start + p.duration);
      if (hi > lo) impulse += p.amplitude * (hi - lo);
    }
    return impulse / dt;
  }
};

struct SimConfig {
  double dt = 5e-4;        // 2 kHz
  double t_end = 5.5;
  double noise_std = 1e-7; // [m]
  double quant = 0.0;      // [m]; 0 disables quantization
  unsigned long long seed = 1;
  double x0 = 0.0;
  double v_max = 1e3;      // divergence guard [m/s]
  double deadband = kDefaultDeadband;

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (!(t_end >= 0.0)) throw std::invalid_argument("SimConfig: t_end must be >= 0");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("SimConfig: noise_std must be >= 0");
    if (!(quant >= 0.0)) throw std::invalid_argument("SimConfig: quant must be >= 0");
    if (!(v_max > 0.0)) throw std::invalid_argument("SimConfig: v_max must be > 0");
  }

  std::size_t sample_count() const {
    // Guard against t_end / dt landing a few ulp below an integer.
    return static_cast<std::size_t>(std::floor(t_end / dt * (1.0 + 1e-12))) + 1;
  }
};

struct TrajectorySample {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double f = 0.0;
  double u = 0.0;
};

using Trajectory = std::vector<TrajectorySample>;

struct MeasuredSample {
  double t = 0.0;
  double x = 0.0;
  double u = 0.0;
};

using MeasuredSeries = std::vector<MeasuredSample>;

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Semi-implicit Euler over n samples; input(k, t) is the force held over
// [t_k, t_k + dt).
template <typename Input>
Trajectory integrate(const PlantParams& pp, const FrictionParams& fp, std::size_t n,
                     const SimConfig& cfg, Input&& input) {
  Trajectory traj;
  traj.reserve(n);
  FrictionState fs;
  double x = cfg.x0;
  double v = 0.0;
  double f = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const double u = input(k, t);
    traj.push_back({t, x, v, f, u});

    v += cfg.dt * (u - f) / pp.m;
    if (!(std::abs(v) <= cfg.v_max)) {
      throw SimulationDiverged("simulate: |v| exceeded " + std::to_string(cfg.v_max) +
                               " m/s at t = " + std::to_string(t));
    }
    x += cfg.dt * v;
    const FrictionStep step = step_friction(fs, v, cfg.dt, fp, t + cfg.dt, cfg.deadband);
    fs = step.state;
    f = step.force;
  }
  return traj;
}

}  // namespace detail

/// Simulates the plant. Sample k holds the state at t_k = k dt together with
/// the friction and input acting over [t_k, t_k + dt).
inline Trajectory simulate(const PlantParams& pp, const FrictionParams& fp,
                           const ImpulseTrain& input, const SimConfig& cfg) {
  pp.validate();
  fp.validate();
  input.validate();
  cfg.validate();
  return detail::integrate(pp, fp, cfg.sample_count(), cfg,
                           [&](std::size_t, double t) { return input.average(t, cfg.dt); });
}

/// Simulates the plant driven by sampled input forces, one per grid point.
/// Used for open-loop model prediction from a measured input record.
inline Trajectory simulate_sampled(const PlantParams& pp, const FrictionParams& fp,
                                   const std::vector<double>& u, const SimConfig& cfg) {
  pp.validate();
  fp.validate();
  cfg.validate();
  return detail::integrate(pp, fp, u.size(), cfg, [&](std::size_t k, double) { return u[k]; });
}

/// Largest multiple of `quant` not above x (identity for quant == 0).
inline double quantize(double x, double quant) {
  if (quant <= 0.0) return x;
  // Relative guard so exact grid points survive the division.
  return std::floor(x / quant + 1e-9) * quant;
}

/// Noisy, quantized displacement readings of a trajectory.
inline MeasuredSeries measure(const Trajectory& traj, const SimConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  MeasuredSeries out;
  out.reserve(traj.size());
  for (const TrajectorySample& s : traj) {
    double x = s.x;
    if (cfg.noise_std > 0.0) x += cfg.noise_std * noise(rng);
    out.push_back({s.t, quantize(x, cfg.quant), s.u});
  }
  return out;
}

}  // namespace frictobs
