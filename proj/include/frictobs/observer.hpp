#pragma once

// Reduced-order Luenberger observer of velocity and total friction from
// displacement and input force.
//
// Plant in regular form with w = (x, v, f), measured part x, unmeasured
// z = (v, f):
//
//   x' = A12 z,   z' = A22 z + B_z u,   A12 = (1, 0),
//   A22 = [[0, -1/m], [phi, 0]],   B_z = (1/m, 0)^T,
//
// with the time-varying stiffness phi = dF_c/dx + sigma/beta. The observer
//
//   zt' = (A22 - L A12) zt + (A22 L - L A12 L) x + B_z u
//   (v~, f~) = zt + L x
//
// is discretized exactly per step with phi frozen: x is interpolated linearly
// between samples and u is held.

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "frictobs/friction.hpp"
#include "frictobs/gain_design.hpp"
#include "frictobs/plant.hpp"

namespace frictobs {

struct RegularForm {
  double a11 = 0.0;
  Eigen::RowVector2d a12 = Eigen::RowVector2d::Zero();
  Eigen::Vector2d a21 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d a22 = Eigen::Matrix2d::Zero();
  double b_w = 0.0;
  Eigen::Vector2d b_z = Eigen::Vector2d::Zero();

  /// Full 3x3 system matrix on (x, v, f).
  Eigen::Matrix3d full_a() const {
    Eigen::Matrix3d a;
    a << a11, a12(0), a12(1),
         a21(0), a22(0, 0), a22(0, 1),
         a21(1), a22(1, 0), a22(1, 1);
    return a;
  }

  /// Kalman observability of (A, C) with C = (1, 0, 0).
  bool observable() const {
    const Eigen::Matrix3d a = full_a();
    const Eigen::RowVector3d c(1.0, 0.0, 0.0);
    Eigen::Matrix3d o;
    o.row(0) = c;
    o.row(1) = c * a;
    o.row(2) = c * a * a;
    return Eigen::FullPivLU<Eigen::Matrix3d>(o).rank() == 3;
  }
};

/// Regular-form blocks for mass `m` and total stiffness `phi` (>= sob).
inline RegularForm assemble(double m, double phi, double sob) {
  if (!(m > 0.0)) throw std::invalid_argument("assemble: m must be > 0");
  if (!(sob >= 0.0) || !(phi >= sob)) throw std::invalid_argument("assemble: need phi >= sob >= 0");
  RegularForm rf;
  rf.a12 << 1.0, 0.0;
  rf.a22 << 0.0, -1.0 / m,
            phi, 0.0;
  rf.b_z << 1.0 / m, 0.0;
  return rf;
}

struct StepMaps {
  Eigen::Matrix2d phi;     // e^{F T}
  Eigen::Matrix2d gamma;   // integral_0^T e^{F s} ds
  Eigen::Matrix2d gamma1;  // integral_0^T e^{F s} (T - s) ds, weights a unit-slope ramp
};

namespace detail {

using cplx = std::complex<double>;

// sinh(y) / y
inline cplx sinhc(cplx y) {
  if (std::abs(y) < 1e-3) {
    const cplx y2 = y * y;
    return 1.0 + y2 / 6.0 * (1.0 + y2 / 20.0);
  }
  return std::sinh(y) / y;
}

// e^x - 1 without cancellation for small |x|.
inline cplx expm1c(cplx x) {
  const double c = std::cos(x.imag());
  const double s = std::sin(x.imag());
  const double half = std::sin(0.5 * x.imag());
  return {std::expm1(x.real()) * c - 2.0 * half * half, std::exp(x.real()) * s};
}

// integral_0^1 s^n e^{x s} ds
inline cplx moment(int n, cplx x) {
  if (std::abs(x) <= 1.0) {
    cplx sum = 0.0;
    cplx term = 1.0;  // x^j / j!
    for (int j = 0; j < 40; ++j) {
      sum += term / static_cast<double>(n + j + 1);
      term *= x / static_cast<double>(j + 1);
    }
    return sum;
  }
  cplx in = expm1c(x) / x;
  const cplx ex = std::exp(x);
  for (int k = 1; k <= n; ++k) in = (ex - static_cast<double>(k) * in) / x;
  return in;
}

// H(lambda) = integral_0^T e^{lambda s} ds
inline cplx h_integral(cplx lambda, double t) {
  const cplx x = lambda * t;
  if (std::abs(x) < 1e-12) return t;
  return t * expm1c(x) / x;
}

// K(lambda) = integral_0^T e^{lambda s} (T - s) ds = T^2 (e^x - 1 - x) / x^2
inline cplx k_integral(cplx lambda, double t) {
  const cplx x = lambda * t;
  if (std::abs(x) < 0.5) {
    cplx sum = 0.0;
    cplx term = 0.5;  // x^j / (j + 2)!
    for (int j = 0; j < 30; ++j) {
      sum += term;
      term *= x / static_cast<double>(j + 3);
    }
    return t * t * sum;
  }
  return t * t * (expm1c(x) - x) / (x * x);
}

// Divided difference [a, b] of a function given its values and, for nearly
// equal arguments, its odd derivatives at the midpoint.
template <typename Derivative>
cplx divided_difference(cplx fa, cplx fb, cplx a, cplx b, cplx half_gap, double t,
                        Derivative&& deriv) {
  if (std::abs(half_gap) * t >= 0.025) return (fa - fb) / (a - b);
  const cplx d2 = half_gap * half_gap;
  return deriv(1) + d2 / 6.0 * deriv(3) + d2 * d2 / 120.0 * deriv(5);
}

}  // namespace detail

/// Exact one-step maps of a real 2x2 system through Cayley-Hamilton: each map
/// is c0 I + c1 F with coefficients from divided differences over the spectrum.
inline StepMaps step_maps(const Eigen::Matrix2d& f, double t) {
  using detail::cplx;
  const double tr = f.trace();
  const double det = f.determinant();
  const cplx mean = 0.5 * tr;
  const cplx half_gap = std::sqrt(cplx(0.25 * tr * tr - det));
  const cplx la = mean + half_gap;
  const cplx lb = mean - half_gap;
  const cplx x = mean * t;
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();

  // e^{F T}
  const cplx em = std::exp(x);
  const cplx sc = detail::sinhc(half_gap * t);
  const cplx a1 = em * t * sc;
  const cplx a0 = em * (std::cosh(half_gap * t) - x * sc);

  // n-th derivatives at the mean: integral_0^T s^n e^{mean s} ds and
  // integral_0^T s^n (T - s) e^{mean s} ds.
  const cplx ha = detail::h_integral(la, t);
  const cplx hb = detail::h_integral(lb, t);
  const cplx b1 = detail::divided_difference(ha, hb, la, lb, half_gap, t, [&](int n) {
    return std::pow(t, n + 1) * detail::moment(n, x);
  });
  const cplx b0 = 0.5 * (ha + hb) - b1 * mean;

  const cplx ka = detail::k_integral(la, t);
  const cplx kb = detail::k_integral(lb, t);
  const cplx c1 = detail::divided_difference(ka, kb, la, lb, half_gap, t, [&](int n) {
    return std::pow(t, n + 2) * (detail::moment(n, x) - detail::moment(n + 1, x));
  });
  const cplx c0 = 0.5 * (ka + kb) - c1 * mean;

  return {a0.real() * id + a1.real() * f, b0.real() * id + b1.real() * f,
          c0.real() * id + c1.real() * f};
}

struct ObserverConfig {
  ObserverGains gains;
  double m = 0.052;
  FrictionParams friction;
  double deadband = kDefaultDeadband;
  /// When set, phi is held at this value instead of tracking presliding.
  std::optional<double> frozen_phi;

  Eigen::Vector2d gain_vector() const { return {gains.l1, gains.l2}; }

  /// Throws unless A22 - L A12 is Hurwitz for every stiffness >= 0.
  void validate() const {
    friction.validate();
    if (!(m > 0.0)) throw std::invalid_argument("ObserverConfig: m must be > 0");
    if (!(gains.l1 > 0.0) || !(gains.l2 < friction.sigma_over_beta())) {
      throw std::invalid_argument("ObserverConfig: gains must satisfy L1 > 0 and L2 < sigma/beta");
    }
  }
};

struct ObserverState {
  Eigen::Vector2d z_tilde = Eigen::Vector2d::Zero();  // at the last consumed sample
  PreslidingState ps;
  double x_int = 0.0;   // x(0) + integral of w2_tilde up to the last sample
  double x_prev = 0.0;  // last measurement
  double u_prev = 0.0;  // last input, held until the next sample
  bool started = false;
};

struct EstimateSample {
  double t = 0.0;
  double w2_tilde = 0.0;  // velocity [m/s]
  double w3_tilde = 0.0;  // friction [N]
  double phi = 0.0;       // stiffness used to reach this sample [N/m]
  double x_int = 0.0;     // x(0) + integral of w2_tilde up to t
};

struct ObserverStep {
  ObserverState state;
  EstimateSample sample;
};

/// Observer matrix and the input vectors multiplying x and u for stiffness phi.
struct ObserverDynamics {
  Eigen::Matrix2d f;
  Eigen::Vector2d g_x;
  Eigen::Vector2d b_u;
};

inline ObserverDynamics observer_dynamics(const Eigen::Vector2d& l, double m, double phi) {
  const RegularForm rf = assemble(m, phi, 0.0);
  ObserverDynamics d;
  d.f = rf.a22 - l * rf.a12;
  d.g_x = rf.a21 - l * rf.a11 + rf.a22 * l - l * (rf.a12 * l);
  d.b_u = rf.b_z - l * rf.b_w;
  return d;
}

/// Stiffness phi the observer uses for the interval after the state's last sample.
inline double observer_phi(const ObserverState& st, const ObserverConfig& cfg) {
  return cfg.frozen_phi ? *cfg.frozen_phi
                        : coulomb_stiffness(st.ps, cfg.friction) + cfg.friction.sigma_over_beta();
}

/// Propagates the scaled estimate over one interval of length dt from
/// x_prev to x_next (linear in between) with u_prev held.
inline Eigen::Vector2d propagate(const Eigen::Vector2d& z, double x_prev, double x_next, double u_prev,
                                 double dt, double phi, const Eigen::Vector2d& l, double m) {
  const ObserverDynamics d = observer_dynamics(l, m, phi);
  const StepMaps maps = step_maps(d.f, dt);
  const double slope = (x_next - x_prev) / dt;
  return maps.phi * z + maps.gamma * (d.g_x * x_prev + d.b_u * u_prev) + maps.gamma1 * d.g_x * slope;
}

/// Consumes the sample (x_k, u_k) taken dt after the previous one and returns
/// the estimate at t_k. The first call initializes the estimate to zero.
inline ObserverStep observer_step(const ObserverState& st, double t, double x_meas, double u,
                                  double dt, const ObserverConfig& cfg) {
  if (std::isnan(x_meas) || std::isnan(u) || std::isnan(t)) {
    throw std::invalid_argument("observer_step: NaN input");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("observer_step: dt must be > 0");
  cfg.validate();

  const Eigen::Vector2d l = cfg.gain_vector();
  ObserverStep out;
  out.state = st;
  const double phi = observer_phi(st, cfg);
  if (!st.started) {
    out.state.x_int = x_meas;
    out.state.x_prev = x_meas;
    out.state.started = true;
  } else {
    out.state.z_tilde = propagate(st.z_tilde, st.x_prev, x_meas, st.u_prev, dt, phi, l, cfg.m);
  }

  const Eigen::Vector2d w = out.state.z_tilde + l * x_meas;
  if (st.started) out.state.x_int += w(0) * dt;
  out.sample = {t, w(0), w(1), phi, out.state.x_int};

  out.state.ps = advance_presliding(out.state.ps, x_meas - out.state.x_prev, w(0), cfg.friction,
                                    t, cfg.deadband);
  out.state.x_prev = x_meas;
  out.state.u_prev = u;
  return out;
}

class GridError : public std::invalid_argument {
 public:
  GridError(const std::string& what, std::size_t row)
      : std::invalid_argument(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Throws GridError naming the first row whose spacing departs from t1 - t0.
inline double uniform_step(const MeasuredSeries& series) {
  if (series.size() < 2) return 0.0;
  const double dt = series[1].t - series[0].t;
  if (!(dt > 0.0)) throw GridError("time grid must be strictly increasing at row 1", 1);
  for (std::size_t k = 2; k < series.size(); ++k) {
    const double step = series[k].t - series[k - 1].t;
    if (std::abs(step - dt) > 1e-6 * dt) {
      throw GridError("non-uniform time grid at row " + std::to_string(k), k);
    }
  }
  return dt;
}

/// Runs the observer over a measured series from zero initial estimates.
inline std::vector<EstimateSample> run_observer(const MeasuredSeries& measured,
                                                const ObserverConfig& cfg) {
  std::vector<EstimateSample> out;
  if (measured.empty()) return out;
  cfg.validate();
  double dt = uniform_step(measured);
  if (dt == 0.0) dt = 1.0;  // single sample: propagation is discarded
  out.reserve(measured.size());
  ObserverState st;
  for (const MeasuredSample& s : measured) {
    ObserverStep step = observer_step(st, s.t, s.x, s.u, dt, cfg);
    st = std::move(step.state);
    out.push_back(step.sample);
  }
  return out;
}

struct ErrorMetrics {
  std::vector<double> e_model;  // x_meas - model-predicted x
  std::vector<double> e_obs;    // x_meas - integrated velocity estimate
  double rms_model = 0.0;
  double rms_obs = 0.0;
};

inline double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double e : v) acc += e * e;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

/// Position errors of the open-loop model and of the observer. An empty
/// `model` skips e_model.
inline ErrorMetrics error_metrics(const MeasuredSeries& measured,
                                  const std::vector<EstimateSample>& estimates,
                                  const Trajectory& model = {}) {
  if (estimates.size() != measured.size()) {
    throw std::invalid_argument("error_metrics: estimates length " + std::to_string(estimates.size()) +
                                " != measured length " + std::to_string(measured.size()));
  }
  if (!model.empty() && model.size() != measured.size()) {
    throw std::invalid_argument("error_metrics: model length " + std::to_string(model.size()) +
                                " != measured length " + std::to_string(measured.size()));
  }
  ErrorMetrics m;
  m.e_obs.reserve(measured.size());
  for (std::size_t k = 0; k < measured.size(); ++k) {
    m.e_obs.push_back(measured[k].x - estimates[k].x_int);
    if (!model.empty()) m.e_model.push_back(measured[k].x - model[k].x);
  }
  m.rms_obs = rms(m.e_obs);
  m.rms_model = rms(m.e_model);
  return m;
}

/// RMS of the velocity estimate against a ground-truth trajectory.
inline double rms_velocity_error(const std::vector<EstimateSample>& estimates,
                                 const Trajectory& truth) {
  if (estimates.size() != truth.size()) {
    throw std::invalid_argument("rms_velocity_error: length mismatch");
  }
  std::vector<double> err(estimates.size());
  for (std::size_t k = 0; k < err.size(); ++k) err[k] = estimates[k].w2_tilde - truth[k].v;
  return rms(err);
}

}  // namespace frictobs
