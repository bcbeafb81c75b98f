#pragma once

// Pole placement and robustness checks for the reduced-order observer.
//
// The observer matrix A22 - L A12 = [[-L1, -1/m], [phi - L2, 0]] has the
// characteristic polynomial
//
//   lambda^2 + L1 lambda + (sob + phi - L2) / m
//
// where phi >= 0 is the presliding stiffness dF_c/dx and sob = sigma/beta.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace frictobs {

struct ObserverGains {
  double l1 = 0.0;  // [1/s]
  double l2 = 0.0;  // [N/m]
};

struct CharPoly {
  double c1 = 0.0;
  double c0 = 0.0;
};

/// Eigenvalue pair; `fast` has the smaller real part.
struct EigenPair {
  std::complex<double> fast;
  std::complex<double> slow;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct RobustReport {
  bool cond_a = false;     // L1 > 0
  bool cond_b = false;     // L1 > 2 sqrt((kappa + sob - L2) / m)
  bool cond_stab = false;  // L2 < sob
  double worst_discriminant = 0.0;
  Interval fast_range;     // real part of the fast pole over phi in [0, kappa]
  Interval slow_range;
  std::vector<double> phi_samples;

  bool pass() const { return cond_a && cond_b && cond_stab; }
};

inline CharPoly char_poly(const ObserverGains& g, double m, double phi, double sob) {
  return {g.l1, (sob + phi - g.l2) / m};
}

/// Roots of lambda^2 + c1 lambda + c0, real roots via the cancellation-free form.
inline EigenPair quadratic_roots(double c1, double c0) {
  const double disc = c1 * c1 - 4.0 * c0;
  if (disc < 0.0) {
    const double re = -0.5 * c1;
    const double im = 0.5 * std::sqrt(-disc);
    return {{re, -im}, {re, im}};
  }
  const double root = std::sqrt(disc);
  const double q = -0.5 * (c1 + (c1 >= 0.0 ? root : -root));
  if (q == 0.0) return {{0.0, 0.0}, {0.0, 0.0}};
  double a = q;
  double b = c0 / q;
  if (a > b) std::swap(a, b);
  return {{a, 0.0}, {b, 0.0}};
}

inline EigenPair eigenvalues(const ObserverGains& g, double m, double phi, double sob) {
  const CharPoly p = char_poly(g, m, phi, sob);
  return quadratic_roots(p.c1, p.c0);
}

/// Gains placing both observer poles at `poles` for zero presliding stiffness.
inline ObserverGains design_gains(std::pair<double, double> poles, double m, double sob) {
  const auto [p1, p2] = poles;
  if (!(p1 < 0.0) || !(p2 < 0.0)) {
    throw std::invalid_argument("design_gains: poles must be real and negative");
  }
  if (!(m > 0.0)) throw std::invalid_argument("design_gains: m must be > 0");
  return {-(p1 + p2), sob - m * p1 * p2};
}

namespace detail {

// phi = 0, then 100 log-spaced points up to kappa (which is the last one).
inline std::vector<double> phi_sweep(double kappa, int samples = 100) {
  std::vector<double> phis{0.0};
  if (kappa <= 0.0) return phis;
  const double lo = std::log10(kappa) - 6.0;
  const double hi = std::log10(kappa);
  for (int i = 0; i < samples; ++i) {
    phis.push_back(std::pow(10.0, lo + (hi - lo) * i / (samples - 1)));
  }
  phis.back() = kappa;
  return phis;
}

}  // namespace detail

inline RobustReport validate_robust(const ObserverGains& g, double m, double sob, double kappa) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("validate_robust: kappa must be >= 0");
  RobustReport r;
  r.cond_a = g.l1 > 0.0;
  const double radicand = (kappa + sob - g.l2) / m;
  r.cond_b = radicand >= 0.0 ? g.l1 > 2.0 * std::sqrt(radicand) : r.cond_a;
  r.cond_stab = g.l2 < sob;

  r.phi_samples = detail::phi_sweep(kappa);
  r.worst_discriminant = std::numeric_limits<double>::infinity();
  r.fast_range = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  r.slow_range = r.fast_range;
  for (double phi : r.phi_samples) {
    const CharPoly p = char_poly(g, m, phi, sob);
    r.worst_discriminant = std::min(r.worst_discriminant, p.c1 * p.c1 - 4.0 * p.c0);
    const EigenPair e = quadratic_roots(p.c1, p.c0);
    r.fast_range.lo = std::min(r.fast_range.lo, e.fast.real());
    r.fast_range.hi = std::max(r.fast_range.hi, e.fast.real());
    r.slow_range.lo = std::min(r.slow_range.lo, e.slow.real());
    r.slow_range.hi = std::max(r.slow_range.hi, e.slow.real());
  }
  return r;
}

}  // namespace frictobs
