#pragma once

// Leading-order JWKB pseudomodes for H_h = -h^2 d^2/dx^2 + V(x) localized at
// the turning point a where z - V(a) = eta^2 > 0, their residuals
// ||(H_h - z) psi|| / ||psi||, and the resolvent lower bounds 1/residual they
// certify.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nonherm/discretize.hpp"
#include "nonherm/error.hpp"
#include "nonherm/lacore.hpp"
#include "nonherm/parallel.hpp"

namespace nonherm {

struct TurningPoint {
  double a = 0.0;
  double eta = 0.0;
  double im_vprime = 0.0;  // Im V'(a)
};

// For V = i x^3: z = eta^2 + i a^3, Im V'(a) = 3 a^2.
inline TurningPoint turning_point(Complex z) {
  if (!(z.imag() != 0.0)) throw InputError("turning_point: Im z must be nonzero (a = 0 otherwise)");
  if (!(z.real() > 0.0)) throw InputError("turning_point: Re z must be positive");
  TurningPoint tp;
  tp.a = std::cbrt(z.imag());
  tp.eta = std::sqrt(z.real());
  tp.im_vprime = 3.0 * tp.a * tp.a;
  return tp;
}

inline Complex energy_from_turning_point(double a, double eta) {
  return {eta * eta, a * a * a};
}

// General polynomial: real a with Im V(a) = Im z and Re(z - V(a)) > 0, found by
// bracketing on [-reach, reach]; among several, the one with largest |Im V'(a)|.
inline TurningPoint turning_point(const PolynomialPotential& p, Complex z, double reach = 50.0) {
  const auto& c = p.coefficients();
  const bool cubic_imag = p.is_monomial() && p.degree() == 3 && c[3].real() == 0.0 && c[3].imag() > 0.0;
  if (cubic_imag) {
    const double b = c[3].imag();
    if (!(z.imag() != 0.0)) throw InputError("turning_point: Im z must be nonzero (a = 0 otherwise)");
    if (!(z.real() > 0.0)) throw InputError("turning_point: Re z must be positive");
    TurningPoint tp;
    tp.a = std::cbrt(z.imag() / b);
    tp.eta = std::sqrt(z.real());
    tp.im_vprime = 3.0 * b * tp.a * tp.a;
    return tp;
  }
  auto f = [&](double x) { return p(x).imag() - z.imag(); };
  std::optional<TurningPoint> best;
  const int samples = 4000;
  double x0 = -reach;
  double f0 = f(x0);
  for (int i = 1; i <= samples; ++i) {
    const double x1 = -reach + 2.0 * reach * i / samples;
    const double f1 = f(x1);
    if (f0 == 0.0 || f0 * f1 < 0.0) {
      double lo = x0, hi = x1;
      for (int it = 0; it < 200 && f0 != 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((f(mid) > 0.0) == (f(lo) > 0.0) ? lo : hi) = mid;
      }
      const double a = f0 == 0.0 ? x0 : 0.5 * (lo + hi);
      const Complex gap = z - p(a);
      const double imv = p.derivative(a).imag();
      if (gap.real() > 0.0 && imv != 0.0 && (!best || std::abs(imv) > std::abs(best->im_vprime))) {
        best = TurningPoint{a, std::sqrt(gap.real()), imv};
      }
    }
    x0 = x1;
    f0 = f1;
  }
  if (!best) {
    throw InputError("turning_point: no real a with Im V(a) = Im z, Re(z - V(a)) > 0 and Im V'(a) != 0");
  }
  return *best;
}

namespace detail {

// Adaptive Simpson for complex integrands.
template <class F>
Complex adaptive_simpson(const F& f, double a, double b, double tol, int depth = 48) {
  struct Seg {
    static Complex run(const F& f, double a, double b, Complex fa, Complex fm, Complex fb,
                       Complex whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m);
      const double rm = 0.5 * (m + b);
      const Complex flm = f(lm);
      const Complex frm = f(rm);
      const Complex left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const Complex right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const Complex diff = left + right - whole;
      if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
      return run(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  if (a == b) return {0.0, 0.0};
  const Complex fa = f(a);
  const Complex fb = f(b);
  const Complex fm = f(0.5 * (a + b));
  const Complex whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Seg::run(f, a, b, fa, fm, fb, whole, tol, depth);
}

// C-infinity cutoff: 1 on |s| <= w/2, exp(1 - 1/(1 - t^2)) with
// t = (|s| - w/2)/(w/2) on the transition, 0 for |s| >= w.
inline double bump(double s, double w) {
  const double r = std::abs(s);
  if (r <= 0.5 * w) return 1.0;
  if (r >= w) return 0.0;
  const double t = (r - 0.5 * w) / (0.5 * w);
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

}  // namespace detail

// psi(x) = (z - V(x))^{-1/4} exp((i/h) S(x)), S(x) = s * int_a^x sqrt(z - V(t)) dt
// with the sign s chosen so that Im S grows away from a on both sides.
class WkbProfile {
 public:
  WkbProfile(PolynomialPotential p, Complex z, double h, double phase_tol = 1e-10)
      : p_(std::move(p)), z_(z), h_(h), tol_(phase_tol), tp_(turning_point(p_, z)) {
    if (!(h > 0.0)) throw InputError("pseudomode: h must be positive");
    const double delta = 0.05 * std::max(std::abs(tp_.a), 0.1);
    const double up = principal_phase(tp_.a + delta).imag();
    const double down = principal_phase(tp_.a - delta).imag();
    if (up > 0.0 && down > 0.0) {
      sign_ = 1.0;
    } else if (up < 0.0 && down < 0.0) {
      sign_ = -1.0;
    } else {
      throw ConstructionError("pseudomode: no square-root branch decays on both sides of a = " +
                              std::to_string(tp_.a));
    }
  }

  const TurningPoint& turning() const { return tp_; }
  double branch_sign() const { return sign_; }
  Complex energy() const { return z_; }
  double h() const { return h_; }

  Complex amplitude(double x) const { return std::pow(z_ - p_(x), -0.25); }

  // S(x); S(a) = 0.
  Complex phase(double x) const { return sign_ * principal_phase(x); }

  Complex value(double x) const {
    return amplitude(x) * std::exp(Complex(0.0, 1.0) * phase(x) / h_);
  }

  // Phase increment between two points, with the same tolerance.
  Complex phase_increment(double x0, double x1) const {
    auto f = [this](double t) { return std::sqrt(z_ - p_(t)); };
    const double scale = std::max(1.0, std::abs(f(x0)) * std::abs(x1 - x0));
    return sign_ * detail::adaptive_simpson(f, x0, x1, tol_ * scale);
  }

  const PolynomialPotential& potential() const { return p_; }

 private:
  Complex principal_phase(double x) const {
    auto f = [this](double t) { return std::sqrt(z_ - p_(t)); };
    const double scale = std::max(1.0, std::abs(x - tp_.a));
    return detail::adaptive_simpson(f, tp_.a, x, tol_ * scale);
  }

  PolynomialPotential p_;
  Complex z_;
  double h_;
  double tol_;
  TurningPoint tp_;
  double sign_ = 1.0;
};

struct Pseudomode {
  CVector grid_values;      // psi(x_i)
  std::vector<double> grid;
  Complex z;
  double h = 0.0;
  double a = 0.0;
  double eta = 0.0;
  double cutoff_center = 0.0;
  double cutoff_width = 0.0;
  std::size_t peak_index = 0;
};

inline double default_cutoff_width(double a) { return 0.5 * std::abs(a); }

// Samples the cut-off WKB profile on the grid of m. cutoff_width <= 0 selects
// the default 0.5|a|; the width is clipped so that [a - w, a + w] stays inside
// the section's box.
inline Pseudomode build_wkb_pseudomode(const PolynomialPotential& p, Complex z, double h,
                                       const OperatorMatrix& m, double cutoff_width = 0.0) {
  const WkbProfile prof(p, z, h);
  const double a = prof.turning().a;
  const double edge = m.box_edge();
  double w = cutoff_width > 0.0 ? cutoff_width : default_cutoff_width(a);
  w = std::min(w, edge - std::abs(a));
  if (!(w > 0.0)) {
    throw InputError("pseudomode: turning point a = " + std::to_string(a) +
                     " lies outside the truncation box");
  }
  for (double side : {-1.0, 1.0}) {
    const double im = prof.phase(a + side * w).imag();
    if (!(im > 0.0)) {
      throw ConstructionError("pseudomode: WKB profile does not decay at cutoff edge x = " +
                              std::to_string(a + side * w));
    }
  }

  Pseudomode out;
  out.grid = m.grid;
  out.z = z;
  out.h = h;
  out.a = a;
  out.eta = prof.turning().eta;
  out.cutoff_center = a;
  out.cutoff_width = w;
  const auto n = static_cast<Eigen::Index>(m.grid.size());
  out.grid_values = CVector::Zero(n);

  // Accumulate S outward from a, one grid interval at a time.
  const auto first_right = static_cast<Eigen::Index>(
      std::lower_bound(m.grid.begin(), m.grid.end(), a) - m.grid.begin());
  auto sweep = [&](Eigen::Index start, int step) {
    double prev_x = a;
    Complex s(0.0, 0.0);
    double prev_im_gap = (z - p(a)).imag();
    for (Eigen::Index i = start; i >= 0 && i < n; i += step) {
      const double x = m.grid[static_cast<std::size_t>(i)];
      if (std::abs(x - a) >= w) break;
      const Complex gap = z - p(x);
      if (gap.real() < 0.0 && (gap.imag() >= 0.0) != (prev_im_gap >= 0.0)) {
        throw BranchError("pseudomode: z - V(x) crosses the branch cut at x = " + std::to_string(x), x);
      }
      prev_im_gap = gap.imag();
      s += prof.phase_increment(prev_x, x);
      prev_x = x;
      const Complex psi = prof.amplitude(x) * std::exp(Complex(0.0, 1.0) * s / h);
      out.grid_values(i) = detail::bump(x - a, w) * psi;
    }
  };
  sweep(first_right, +1);
  sweep(first_right - 1, -1);

  Eigen::Index peak = 0;
  const double mx = out.grid_values.cwiseAbs().maxCoeff(&peak);
  if (!(mx > 0.0)) throw ConstructionError("pseudomode: no grid points inside the cutoff support");
  out.peak_index = static_cast<std::size_t>(peak);
  return out;
}

inline Pseudomode build_wkb_pseudomode(const PolynomialPotential& p, Complex z, double h,
                                       const Discretization& d, double cutoff_width = 0.0) {
  return build_wkb_pseudomode(p, z, h, build_matrix(p, d.with_h(h)), cutoff_width);
}

struct ResidualResult {
  double residual = 0.0;     // ||(H_h - z) psi|| / ||psi|| in the quadrature norm
  double lower_bound = 0.0;  // 1 / residual <= ||(H_h - z)^{-1}||
};

inline ResidualResult residual(const OperatorMatrix& hm, Complex z, const Pseudomode& mode) {
  if (mode.grid != hm.grid) throw InputError("residual: pseudomode grid does not match the operator grid");
  if (std::abs(mode.h - hm.disc.h) > 1e-14 * mode.h) {
    throw InputError("residual: pseudomode h does not match the operator h");
  }
  const CVector c = samples_to_coefficients(hm, mode.grid_values);
  CVector r = hm.matrix * c;
  r -= z * c;
  ResidualResult out;
  out.residual = r.norm() / c.norm();
  out.lower_bound = 1.0 / out.residual;
  return out;
}

struct LboundScan {
  std::vector<double> hs;
  std::vector<double> residuals;
  std::vector<double> certified_lower_bounds;
  std::vector<double> slopes;    // d log(1/r) / d log(1/h) between consecutive h
  double fitted_exponent = 0.0;  // least-squares n in 1/r ~ h^{-n}
  // Certified kappa(sigma) >= |Im z| / r(h) with h = sigma^{-(m+2)/(2m)}
  // grows like sigma^{kappa_growth_exponent}.
  double kappa_growth_exponent = 0.0;
  bool exceeds_six_fifths = false;  // fitted n > 6/5: the resolvent itself blows up
  bool rbound_violated = false;     // kappa_growth_exponent > 0
};

inline LboundScan lbound_exponent_scan(const PolynomialPotential& p, Complex z,
                                       const std::vector<double>& hs, const Discretization& d,
                                       double cutoff_width = 0.0, int workers = 1) {
  if (hs.size() < 2) throw InputError("lbound_exponent_scan: need at least two h values");
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0) || (i > 0 && !(hs[i] < hs[i - 1]))) {
      throw InputError("lbound_exponent_scan: hs must be positive and strictly decreasing");
    }
  }
  LboundScan out;
  out.hs = hs;
  out.residuals.assign(hs.size(), 0.0);
  parallel_for_static(hs.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto hm = build_matrix(p, d.with_h(hs[i]));
      const auto mode = build_wkb_pseudomode(p, z, hs[i], hm, cutoff_width);
      out.residuals[i] = residual(hm, z, mode).residual;
    }
  });
  for (std::size_t i = 0; i < hs.size(); ++i) {
    out.certified_lower_bounds.push_back(1.0 / out.residuals[i]);
    if (i > 0 && !(out.residuals[i] < out.residuals[i - 1])) {
      throw ScanError("lbound_exponent_scan: residual does not decrease from h = " +
                      std::to_string(hs[i - 1]) + " to h = " + std::to_string(hs[i]) +
                      " (spatial resolution insufficient)");
    }
    if (i > 0) {
      out.slopes.push_back(std::log(out.residuals[i - 1] / out.residuals[i]) /
                           std::log(hs[i - 1] / hs[i]));
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double x = std::log(1.0 / hs[i]);
    const double y = std::log(out.certified_lower_bounds[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.fitted_exponent = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const int m = std::max(1, p.degree());
  out.kappa_growth_exponent = out.fitted_exponent * (m + 2) / (2.0 * m);
  out.exceeds_six_fifths = out.fitted_exponent > 6.0 / 5.0;
  out.rbound_violated = out.kappa_growth_exponent > 0.0;
  return out;
}

// sigma <-> h for the cubic scaling h = sigma^{-5/6}.
inline double sigma_from_h(double h) { return std::pow(h, -6.0 / 5.0); }

inline void write_residuals_csv(std::ostream& os, const LboundScan& s) {
  const auto old = os.precision(17);
  os << "h,residual,certified_lower_bound\n";
  for (std::size_t i = 0; i < s.hs.size(); ++i) {
    os << s.hs[i] << ',' << s.residuals[i] << ',' << s.certified_lower_bounds[i] << '\n';
  }
  os.precision(old);
}

inline void write_mode_csv(std::ostream& os, const Pseudomode& m) {
  const auto old = os.precision(17);
  os << "x,re_psi,im_psi\n";
  for (std::size_t i = 0; i < m.grid.size(); ++i) {
    const auto v = m.grid_values(static_cast<Eigen::Index>(i));
    os << m.grid[i] << ',' << v.real() << ',' << v.imag() << '\n';
  }
  os.precision(old);
}

}  // namespace nonherm
