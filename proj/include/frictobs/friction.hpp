#pragma once

// Dynamic friction: Coulomb level with logarithmic presliding hysteresis
// branches, plus a first-order lagged viscous term.
//
// Normalized presliding map on a branch started at a reversal:
//
//   f_p = |dir - f_r| * z * (1 - ln|z|) + f_r,     z = s * (x - x_r)
//
// Once |z| reaches 1 the branch saturates at dir and the reversal memory is
// erased. Total friction is F = C_f * f_p + F_v with
// dF_v/dt = (sigma * v - F_v) / beta.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace frictobs {

inline constexpr double kDefaultDeadband = 1e-4;  // m/s
inline constexpr double kDefaultZFloor = 1e-4;

/// Smallest stiffness cap consistent with clipping |z| at `z_floor`.
inline double default_kappa(double s_scale, double c_f, double z_floor = kDefaultZFloor) {
  return s_scale * c_f * 2.0 * (-std::log(z_floor));
}

struct FrictionParams {
  double c_f = 0.2143;     // Coulomb level [N]
  double sigma = 0.3;      // viscous coefficient [N s/m]
  double beta = 0.1;       // lag time constant [s]
  double s_scale = 250.0;  // presliding scaling [1/m]
  double kappa = default_kappa(250.0, 0.2143);  // stiffness cap [N/m]
  double z_floor = kDefaultZFloor;

  /// sigma / beta, the static part of the friction stiffness seen by the observer.
  double sigma_over_beta() const { return sigma / beta; }

  /// True when the lag is fast relative to the mechanical time constant m/sigma.
  bool lag_is_fast(double mass, double ratio = 0.1) const {
    return beta > 0.0 && beta <= ratio * mass / sigma;
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& what) {
      throw std::invalid_argument("FrictionParams: " + what);
    };
    if (!(c_f > 0.0)) fail("c_f must be > 0");
    if (!(sigma > 0.0)) fail("sigma must be > 0");
    if (!(beta > 0.0)) fail("beta must be > 0");
    if (!(s_scale > 0.0)) fail("s_scale must be > 0");
    if (!(z_floor > 0.0 && z_floor < 1.0)) fail("z_floor must lie in (0, 1)");
    // Relative slack so a cap computed by default_kappa() is accepted.
    const double min_kappa = default_kappa(s_scale, c_f, z_floor);
    if (!(kappa >= min_kappa * (1.0 - 1e-12))) {
      fail("kappa must be >= s_scale * c_f * 2 * (-ln z_floor) = " + std::to_string(min_kappa));
    }
  }
};

/// Hysteresis memory of the Coulomb part.
struct PreslidingState {
  double z = 0.0;    // normalized presliding coordinate
  double f_r = 0.0;  // normalized friction at the last reversal, |f_r| <= 1
  int dir = 0;       // current motion direction; 0 before any motion
  bool saturated = false;
  double t_r = 0.0;  // time of the last reversal [s]
};

struct FrictionState {
  PreslidingState presliding;
  double f_v = 0.0;  // lagged viscous force [N]
};

struct FrictionStep {
  FrictionState state;
  double force = 0.0;  // F_c + F_v [N]
};

/// Virgin presliding curve z (1 - ln|z|).
inline double f0_branch(double z) {
  if (std::isnan(z) || z == 0.0 || std::abs(z) > 1.0) {
    throw std::domain_error("f0_branch: z must satisfy 0 < |z| <= 1");
  }
  return z * (1.0 - std::log(std::abs(z)));
}

/// Normalized presliding friction on the branch (f_r, dir).
inline double presliding_force(double z, double f_r, int dir) {
  if (std::abs(f_r) > 1.0) throw std::domain_error("presliding_force: |f_r| must be <= 1");
  if (dir != 1 && dir != -1) throw std::domain_error("presliding_force: dir must be +1 or -1");
  if (z == 0.0) return f_r;  // branch origin, limit of z ln|z|
  return std::abs(dir - f_r) * f0_branch(z) + f_r;
}

namespace detail {

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

// Width factor |dir - f_r|; before any motion the virgin branch has width 1.
inline double branch_width(const PreslidingState& ps) {
  return ps.dir == 0 ? 1.0 : std::abs(ps.dir - ps.f_r);
}

// Normalized Coulomb level of a presliding state.
inline double normalized_coulomb(const PreslidingState& ps) {
  if (ps.saturated) return static_cast<double>(ps.dir);
  if (ps.z == 0.0) return ps.f_r;
  // Rounding can push an inner branch an ulp past the outer loop.
  return std::clamp(branch_width(ps) * f0_branch(std::clamp(ps.z, -1.0, 1.0)) + ps.f_r, -1.0, 1.0);
}

}  // namespace detail

/// Coulomb force: C_f * f_p in presliding, C_f * dir once saturated.
inline double coulomb_force(const PreslidingState& ps, const FrictionParams& p) {
  return p.c_f * detail::normalized_coulomb(ps);
}

/// dF_c/dx, clipped at |z| >= z_floor and capped at kappa; zero when saturated.
inline double coulomb_stiffness(const PreslidingState& ps, const FrictionParams& p) {
  if (ps.saturated) return 0.0;
  const double z_clipped = std::max(std::abs(ps.z), p.z_floor);
  const double k = p.s_scale * p.c_f * detail::branch_width(ps) * (-std::log(z_clipped));
  return std::clamp(k, 0.0, p.kappa);
}

/// Advances the hysteresis memory by a displacement increment `dx`.
///
/// `v` is the direction signal: a reversal is registered only when |v|
/// exceeds `deadband` with sign opposite to the current direction. Before any
/// motion (dir == 0) the first supra-deadband velocity sets the direction.
inline PreslidingState advance_presliding(PreslidingState ps, double dx, double v,
                                          const FrictionParams& p, double t,
                                          double deadband = kDefaultDeadband) {
  if (std::isnan(dx) || std::isnan(v) || std::isnan(t)) {
    throw std::invalid_argument("advance_presliding: NaN input");
  }
  auto reverse = [&](int new_dir) {
    ps.f_r = detail::normalized_coulomb(ps);
    ps.z = 0.0;
    ps.dir = new_dir;
    ps.saturated = ps.f_r == static_cast<double>(new_dir);  // zero-width branch
    ps.t_r = t;
  };

  const int v_dir = std::abs(v) > deadband ? detail::sign_of(v) : 0;
  if (v_dir != 0 && v_dir != ps.dir) {
    if (ps.dir == 0 && (ps.z == 0.0 || detail::sign_of(ps.z) == v_dir)) {
      ps.dir = v_dir;  // onset from rest continues the virgin branch
    } else {
      reverse(v_dir);
    }
  }

  if (ps.saturated) return ps;

  ps.z += p.s_scale * dx;
  // Sub-deadband retrace past the reversal point opens a branch at z = 0.
  if (ps.dir != 0 && detail::sign_of(ps.z) == -ps.dir) {
    const double overshoot = ps.z;
    ps.z = 0.0;
    reverse(-ps.dir);
    ps.z = overshoot;
  }
  if (std::abs(ps.z) >= 1.0) {
    const int s = detail::sign_of(ps.z);
    ps.dir = s;
    ps.z = s;
    ps.saturated = true;
    ps.f_r = s;  // memory erased
  }
  return ps;
}

/// One step of the full friction model at velocity `v` held over `dt`.
inline FrictionStep step_friction(const FrictionState& st, double v, double dt,
                                  const FrictionParams& p, double t,
                                  double deadband = kDefaultDeadband) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_friction: dt must be > 0");
  if (std::isnan(v)) throw std::invalid_argument("step_friction: NaN velocity");
  FrictionStep out;
  // Exact exponential update of the lag with v held over the step.
  const double target = p.sigma * v;
  out.state.f_v = target + (st.f_v - target) * std::exp(-dt / p.beta);
  out.state.presliding = advance_presliding(st.presliding, v * dt, v, p, t, deadband);
  out.force = coulomb_force(out.state.presliding, p) + out.state.f_v;
  return out;
}

}  // namespace frictobs
